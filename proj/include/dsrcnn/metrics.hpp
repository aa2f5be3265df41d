#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsrcnn/maps.hpp"

namespace dsrcnn {

struct MetricOptions {
  double beta_sq = 0.3;           // F-measure over thresholds and adaptive F
  double weighted_beta_sq = 1.0;  // inside the weighted F-measure
  std::size_t thresholds = 256;   // grid (k + 1) / thresholds
};

void validate(const MetricOptions& options);

/// Thresholds (k + 1) / count for k = 0 .. count - 1. Zero is left out: it
/// selects every pixel whatever the map.
std::vector<double> threshold_grid(std::size_t count);

/// Pixel >= threshold becomes foreground.
GroundTruthMask binarize_at(const SaliencyMap& map, double threshold);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// Empty denominators: precision is 1 if nothing is predicted and gt is
/// empty, 0 if nothing is predicted otherwise; recall is 1 when gt is empty.
PrecisionRecall precision_recall(const GroundTruthMask& pred, const GroundTruthMask& gt);

/// (1 + b2) P R / (b2 P + R), or 0 when the denominator vanishes.
double f_measure(double precision, double recall, double beta_sq);

/// 8-bit level of a map value, round half up.
std::size_t quantize_level(double value);

/// Otsu's method on the 256-level quantized map. Returns the lower edge
/// (k - 0.5) / 255 of the first level k of the upper class, so that
/// binarize_at(map, t) selects exactly the levels >= k. Ties go to the lowest
/// k. A constant map yields the edge of its own level (clamped at 0).
double otsu_threshold(const SaliencyMap& map);

/// Mean of |map - gt| over all pixels.
double mae(const SaliencyMap& map, const GroundTruthMask& gt);

struct DistanceTransform {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> distance;      // Euclidean distance to nearest foreground
  std::vector<std::size_t> nearest;  // row-major index of that foreground pixel
};

/// Exact Euclidean distance transform by two separable passes (column
/// distances, then the lower envelope of parabolas per row). Among equally
/// near foreground pixels the smallest column wins, then the smallest row.
/// Throws std::invalid_argument if the mask has no foreground.
DistanceTransform distance_transform(const GroundTruthMask& mask);

/// Weighted F-measure. Returns nullopt when gt has no foreground.
std::optional<double> weighted_f(const SaliencyMap& map, const GroundTruthMask& gt, double beta_sq = 1.0);

struct ImageMetrics {
  std::string name;
  std::vector<PrecisionRecall> curve;  // one entry per grid threshold
  double mean_f = 0.0;
  double adaptive_threshold = 0.0;
  double adaptive_precision = 0.0;
  double adaptive_recall = 0.0;
  double adaptive_f = 0.0;
  double mae = 0.0;
  std::optional<double> weighted_f;
};

ImageMetrics evaluate_image(std::string name, const SaliencyMap& map, const GroundTruthMask& gt,
                            const MetricOptions& options = {});

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct EvalPair {
  std::string name;
  SaliencyMap map;
  GroundTruthMask gt;
};

struct RejectedPair {
  std::string name;
  std::string reason;
};

struct MetricsReport {
  MetricOptions options;
  std::vector<ImageMetrics> images;
  std::vector<RejectedPair> rejected;
  std::vector<PrPoint> curve;  // per-threshold mean of per-image precision/recall
  double mean_f = 0.0;
  double adaptive_precision = 0.0;
  double adaptive_recall = 0.0;
  double adaptive_f = 0.0;
  double mae = 0.0;
  std::optional<double> weighted_f;  // mean over images with foreground
  std::size_t weighted_f_count = 0;
};

/// Throws std::invalid_argument if no pair survives the size check.
MetricsReport evaluate_dataset(std::span<const EvalPair> pairs, const MetricOptions& options = {});

}  // namespace dsrcnn
