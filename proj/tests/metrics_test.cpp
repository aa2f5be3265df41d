#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "dsrcnn/metrics.hpp"
#include "dsrcnn/rng.hpp"
#include "dsrcnn/tensor.hpp"
#include "oracles.hpp"

using namespace dsrcnn;
using namespace dsrcnn::oracle;

namespace {

SaliencyMap random_map(std::size_t h, std::size_t w, Rng& rng) {
  SaliencyMap m(h, w);
  for (double& v : m.values) v = rng.uniform(0.0, 1.0);
  return m;
}

GroundTruthMask random_mask(std::size_t h, std::size_t w, Rng& rng, double p = 0.4) {
  GroundTruthMask g(h, w);
  for (auto& v : g.values) v = rng.uniform(0.0, 1.0) < p ? 1 : 0;
  if (g.foreground() == 0) g.values[rng.index(g.size())] = 1;
  return g;
}

// Blob-like mask: a random rectangle plus sprinkled pixels.
GroundTruthMask blob_mask(std::size_t h, std::size_t w, Rng& rng) {
  GroundTruthMask g(h, w);
  const std::size_t top = rng.index(h / 2), left = rng.index(w / 2);
  const std::size_t bh = 1 + rng.index(h - top), bw = 1 + rng.index(w - left);
  for (std::size_t y = top; y < top + bh; ++y)
    for (std::size_t x = left; x < left + bw; ++x) g.values[y * w + x] = 1;
  for (int k = 0; k < 3; ++k) g.values[rng.index(g.size())] = 1;
  return g;
}

}  // namespace

TEST(Binarize, Examples) {
  Rng rng(1);
  const SaliencyMap m = random_map(6, 7, rng);
  EXPECT_EQ(binarize_at(m, 0.0).foreground(), m.size());
  double mx = 0;
  for (double v : m.values) mx = std::max(mx, v);
  EXPECT_EQ(binarize_at(m, std::nextafter(mx, 2.0)).foreground(), 0u);
  const GroundTruthMask gt = random_mask(6, 7, rng);
  EXPECT_EQ(binarize_at(as_map(gt), 0.5).values, gt.values);
}

TEST(Binarize, HigherThresholdGivesSubset) {
  Rng rng(2);
  const SaliencyMap m = random_map(9, 9, rng);
  const auto grid = threshold_grid(256);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const GroundTruthMask lo = binarize_at(m, grid[k - 1]), hi = binarize_at(m, grid[k]);
    for (std::size_t i = 0; i < m.size(); ++i) EXPECT_LE(hi.values[i], lo.values[i]);
  }
}

TEST(ThresholdGrid, Spacing) {
  const auto g = threshold_grid(256);
  ASSERT_EQ(g.size(), 256u);
  EXPECT_EQ(g.front(), 1.0 / 256.0);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_EQ(g[127], 0.5);
}

TEST(PrecisionRecall, Examples) {
  Rng rng(3);
  const GroundTruthMask gt = random_mask(8, 8, rng);
  const PrecisionRecall same = precision_recall(gt, gt);
  EXPECT_EQ(same.precision, 1.0);
  EXPECT_EQ(same.recall, 1.0);
  const PrecisionRecall all = precision_recall(GroundTruthMask(8, 8, 1), gt);
  EXPECT_EQ(all.precision, static_cast<double>(gt.foreground()) / 64.0);
  EXPECT_EQ(all.recall, 1.0);
}

TEST(PrecisionRecall, MatchesCountingOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const GroundTruthMask pred = random_mask(8, 8, rng, 0.5), gt = random_mask(8, 8, rng, 0.3);
    const Counts c = count(pred, gt);
    const PrecisionRecall pr = precision_recall(pred, gt);
    EXPECT_EQ(pr.precision, c.tp / (c.tp + c.fp));
    EXPECT_EQ(pr.recall, c.tp / (c.tp + c.fn));
  }
}

TEST(PrecisionRecall, EmptyDenominators) {
  const GroundTruthMask empty(4, 4);
  GroundTruthMask some(4, 4);
  some.values[5] = 1;
  EXPECT_EQ(precision_recall(empty, empty).precision, 1.0);
  EXPECT_EQ(precision_recall(empty, empty).recall, 1.0);
  EXPECT_EQ(precision_recall(empty, some).precision, 0.0);
  EXPECT_EQ(precision_recall(empty, some).recall, 0.0);
  EXPECT_EQ(precision_recall(some, empty).recall, 1.0);
  EXPECT_THROW(precision_recall(some, GroundTruthMask(4, 5)), ShapeError);
}

TEST(FMeasure, Examples) {
  EXPECT_EQ(f_measure(1.0, 1.0, 0.3), 1.0);
  for (double x : {0.1, 0.37, 0.9})
    for (double b : {0.3, 1.0, 2.0}) EXPECT_NEAR(f_measure(x, x, b), x, 1e-15);
  const double expected = 1.3 * 0.8 * 0.5 / (0.3 * 0.8 + 0.5);
  EXPECT_NEAR(f_measure(0.8, 0.5, 0.3), expected, 1e-15);
  EXPECT_NEAR(f_measure(0.8, 0.5, 0.3), 0.7027, 5e-5);
  EXPECT_EQ(f_measure(0.0, 0.0, 0.3), 0.0);
}

TEST(Otsu, BimodalSplitsBetweenModes) {
  SaliencyMap m(4, 4);
  for (std::size_t i = 0; i < m.size(); ++i) m.values[i] = i % 2 ? 0.9 : 0.1;
  const double t = otsu_threshold(m);
  EXPECT_GT(t, 0.1);
  EXPECT_LT(t, 0.9);
}

TEST(Otsu, AttainsExhaustiveScanMaximum) {
  Rng rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    SaliencyMap m = random_map(6 + rng.index(10), 6 + rng.index(10), rng);
    if (trial % 3 == 0)
      for (double& v : m.values) v = std::round(v * 4) / 4;  // few levels, many ties
    double best = 0;
    for (std::size_t k = 0; k <= 256; ++k) best = std::max(best, split_variance(m, k));
    const double t = otsu_threshold(m);
    const std::size_t k = static_cast<std::size_t>(std::lround(t * 255.0 + 0.5));
    EXPECT_NEAR(split_variance(m, k), best, 1e-9 * best) << "trial " << trial;
    for (std::size_t j = 0; j < k; ++j) EXPECT_LT(split_variance(m, j), best * (1 - 1e-12)) << "not lowest tie";
    const GroundTruthMask b = binarize_at(m, t);
    for (std::size_t i = 0; i < m.size(); ++i)
      EXPECT_EQ(b.values[i] != 0, std::floor(m.values[i] * 255 + 0.5) >= static_cast<double>(k));
  }
}

TEST(Otsu, BinaryMapIsReproduced) {
  Rng rng(6);
  const GroundTruthMask gt = random_mask(10, 12, rng);
  EXPECT_EQ(binarize_at(as_map(gt), otsu_threshold(as_map(gt))).values, gt.values);
}

TEST(Otsu, ConstantMapReturnsOwnEdge) {
  EXPECT_NEAR(otsu_threshold(SaliencyMap(5, 5, 0.6)), (153 - 0.5) / 255.0, 1e-15);
  EXPECT_EQ(otsu_threshold(SaliencyMap(5, 5, 0.0)), 0.0);
}

TEST(Mae, Examples) {
  Rng rng(7);
  const GroundTruthMask gt = random_mask(8, 8, rng);
  EXPECT_EQ(mae(as_map(gt), gt), 0.0);
  EXPECT_EQ(mae(SaliencyMap(8, 8, 0.5), gt), 0.5);
  for (int trial = 0; trial < 20; ++trial) {
    const SaliencyMap m = random_map(8, 8, rng);
    const GroundTruthMask g = random_mask(8, 8, rng);
    double acc = 0;
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t x = 0; x < 8; ++x) acc += std::fabs(m.at(y, x) - (g.at(y, x) ? 1.0 : 0.0));
    EXPECT_NEAR(mae(m, g), acc / 64.0, 1e-15);
  }
  EXPECT_THROW(mae(SaliencyMap(8, 7), gt), ShapeError);
}

TEST(DistanceTransform, Examples) {
  GroundTruthMask g(6, 6);
  g.values[0] = 1;
  const DistanceTransform dt = distance_transform(g);
  EXPECT_EQ(dt.distance[0], 0.0);
  EXPECT_EQ(dt.nearest[0], 0u);
  EXPECT_EQ(dt.distance[3 * 6 + 4], 5.0);
  EXPECT_THROW(distance_transform(GroundTruthMask(3, 3)), std::invalid_argument);
}

TEST(DistanceTransform, MatchesAllPairsBruteForce) {
  Rng rng(8);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t h = 1 + rng.index(16), w = 1 + rng.index(16);
    const GroundTruthMask g = random_mask(h, w, rng, trial % 2 ? 0.05 : 0.3);
    const DistanceTransform dt = distance_transform(g);
    const BruteDistance b = brute_distance(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_EQ(dt.distance[i], std::sqrt(static_cast<double>(b.sq[i]))) << h << "x" << w << " at " << i;
      EXPECT_EQ(dt.nearest[i], b.nearest[i]) << h << "x" << w << " at " << i;
    }
  }
}

TEST(WeightedF, PerfectAndFlipped) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const GroundTruthMask gt = trial % 2 ? random_mask(12, 15, rng) : blob_mask(12, 15, rng);
    EXPECT_NEAR(*weighted_f(as_map(gt), gt), 1.0, 1e-12);
    SaliencyMap flipped = as_map(gt);
    for (double& v : flipped.values) v = 1.0 - v;
    if (gt.foreground() < gt.size()) EXPECT_NEAR(*weighted_f(flipped, gt), 0.0, 1e-12);
  }
  EXPECT_FALSE(weighted_f(SaliencyMap(4, 4, 0.2), GroundTruthMask(4, 4)).has_value());
}

TEST(WeightedF, MatchesNaiveOracle) {
  Rng rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    const GroundTruthMask gt = trial % 2 ? random_mask(16, 16, rng, 0.2) : blob_mask(16, 16, rng);
    const SaliencyMap m = random_map(16, 16, rng);
    EXPECT_NEAR(*weighted_f(m, gt), naive_weighted_f(m, gt), 1e-10) << "trial " << trial;
  }
}

TEST(WeightedF, BetterMapScoresHigher) {
  Rng rng(11);
  const GroundTruthMask gt = blob_mask(16, 16, rng);
  SaliencyMap good = as_map(gt), poor = as_map(gt);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    good.values[i] = 0.9 * good.values[i] + 0.05;
    poor.values[i] = 0.5 * poor.values[i] + 0.25;
  }
  EXPECT_GT(*weighted_f(good, gt), *weighted_f(poor, gt));
}

TEST(EvaluateDataset, PerfectPair) {
  Rng rng(12);
  const GroundTruthMask gt = blob_mask(10, 10, rng);
  const std::vector<EvalPair> pairs{{"a", as_map(gt), gt}};
  const MetricsReport r = evaluate_dataset(pairs);
  EXPECT_EQ(r.mean_f, 1.0);
  EXPECT_EQ(r.adaptive_f, 1.0);
  EXPECT_NEAR(*r.weighted_f, 1.0, 1e-12);
  EXPECT_EQ(r.mae, 0.0);
}

TEST(EvaluateDataset, MeansAreArithmeticMeans) {
  Rng rng(13);
  std::vector<EvalPair> pairs;
  for (int i = 0; i < 5; ++i) pairs.push_back({"p" + std::to_string(i), random_map(9, 11, rng), random_mask(9, 11, rng)});
  pairs.push_back({"empty", random_map(9, 11, rng), GroundTruthMask(9, 11)});
  const MetricsReport r = evaluate_dataset(pairs);
  ASSERT_EQ(r.images.size(), 6u);
  double f = 0, ap = 0, ar = 0, af = 0, e = 0, wf = 0;
  for (const EvalPair& p : pairs) {
    const ImageMetrics m = evaluate_image(p.name, p.map, p.gt);
    f += m.mean_f;
    ap += m.adaptive_precision;
    ar += m.adaptive_recall;
    af += m.adaptive_f;
    e += mae(p.map, p.gt);
    if (m.weighted_f) wf += *m.weighted_f;
  }
  EXPECT_NEAR(r.mean_f, f / 6, 1e-12);
  EXPECT_NEAR(r.adaptive_precision, ap / 6, 1e-12);
  EXPECT_NEAR(r.adaptive_recall, ar / 6, 1e-12);
  EXPECT_NEAR(r.adaptive_f, af / 6, 1e-12);
  EXPECT_NEAR(r.mae, e / 6, 1e-12);
  EXPECT_EQ(r.weighted_f_count, 5u);
  EXPECT_NEAR(*r.weighted_f, wf / 5, 1e-12);
  for (std::size_t k = 0; k < r.curve.size(); ++k) {
    double p = 0, q = 0;
    for (const ImageMetrics& m : r.images) {
      p += m.curve[k].precision;
      q += m.curve[k].recall;
    }
    EXPECT_NEAR(r.curve[k].precision, p / 6, 1e-12);
    EXPECT_NEAR(r.curve[k].recall, q / 6, 1e-12);
    if (k > 0) EXPECT_LE(r.curve[k].recall, r.curve[k - 1].recall);
  }
}

TEST(EvaluateDataset, DuplicatedPairKeepsValuesAndIsRepeatable) {
  Rng rng(14);
  const EvalPair p{"x", random_map(12, 12, rng), blob_mask(12, 12, rng)};
  const std::vector<EvalPair> one{p}, two{p, p};
  const MetricsReport a = evaluate_dataset(one), b = evaluate_dataset(two), c = evaluate_dataset(two);
  EXPECT_NEAR(a.mean_f, b.mean_f, 1e-15);
  EXPECT_NEAR(a.adaptive_f, b.adaptive_f, 1e-15);
  EXPECT_NEAR(a.mae, b.mae, 1e-15);
  EXPECT_NEAR(*a.weighted_f, *b.weighted_f, 1e-15);
  for (std::size_t k = 0; k < b.curve.size(); ++k) {
    EXPECT_EQ(b.curve[k].precision, c.curve[k].precision);
    EXPECT_EQ(b.curve[k].recall, c.curve[k].recall);
  }
}

TEST(EvaluateDataset, MismatchedPairIsRejectedByName) {
  Rng rng(15);
  const std::vector<EvalPair> pairs{{"good", random_map(8, 8, rng), random_mask(8, 8, rng)},
                                    {"bad", random_map(8, 9, rng), random_mask(8, 8, rng)}};
  const MetricsReport r = evaluate_dataset(pairs);
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].name, "bad");
  EXPECT_EQ(r.images.size(), 1u);
  const std::vector<EvalPair> only_bad{pairs[1]};
  EXPECT_THROW(evaluate_dataset(only_bad), std::invalid_argument);
}
