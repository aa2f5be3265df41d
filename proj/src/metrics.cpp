#include "dsrcnn/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dsrcnn {

void validate(const MetricOptions& options) {
  if (!(options.beta_sq > 0.0)) throw std::invalid_argument("metrics: beta_sq must be positive");
  if (!(options.weighted_beta_sq > 0.0)) throw std::invalid_argument("metrics: weighted beta_sq must be positive");
  if (options.thresholds < 2) throw std::invalid_argument("metrics: need at least two thresholds");
}

std::vector<double> threshold_grid(std::size_t count) {
  if (count < 2) throw std::invalid_argument("threshold grid needs at least two points");
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) grid[k] = static_cast<double>(k + 1) / static_cast<double>(count);
  return grid;
}

GroundTruthMask binarize_at(const SaliencyMap& map, double threshold) {
  GroundTruthMask out(map.height, map.width);
  for (std::size_t i = 0; i < map.size(); ++i) out.values[i] = map.values[i] >= threshold ? 1 : 0;
  return out;
}

PrecisionRecall precision_recall(const GroundTruthMask& pred, const GroundTruthMask& gt) {
  require_same_size("precision_recall", pred, gt);
  std::size_t tp = 0;
  std::size_t predicted = 0;
  std::size_t actual = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const bool p = pred.values[i] != 0;
    const bool g = gt.values[i] != 0;
    tp += (p && g) ? 1 : 0;
    predicted += p ? 1 : 0;
    actual += g ? 1 : 0;
  }
  PrecisionRecall pr;
  if (predicted == 0) {
    pr.precision = actual == 0 ? 1.0 : 0.0;
  } else {
    pr.precision = static_cast<double>(tp) / static_cast<double>(predicted);
  }
  pr.recall = actual == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(actual);
  return pr;
}

double f_measure(double precision, double recall, double beta_sq) {
  const double denom = beta_sq * precision + recall;
  if (denom == 0.0) return 0.0;
  return (1.0 + beta_sq) * precision * recall / denom;
}

std::size_t quantize_level(double value) {
  const double scaled = std::floor(std::clamp(value, 0.0, 1.0) * 255.0 + 0.5);
  return static_cast<std::size_t>(std::min(scaled, 255.0));
}

double otsu_threshold(const SaliencyMap& map) {
  if (map.size() == 0) throw std::invalid_argument("otsu_threshold: empty map");
  std::array<double, 256> hist{};
  for (double v : map.values) hist[quantize_level(v)] += 1.0;

  const double total = static_cast<double>(map.size());
  double total_mass = 0.0;
  for (std::size_t l = 0; l < 256; ++l) total_mass += static_cast<double>(l) * hist[l];

  double below = 0.0;
  double below_mass = 0.0;
  double best_var = 0.0;
  std::size_t best_level = 0;
  for (std::size_t k = 1; k < 256; ++k) {
    below += hist[k - 1];
    below_mass += static_cast<double>(k - 1) * hist[k - 1];
    const double above = total - below;
    if (below == 0.0 || above == 0.0) continue;
    const double w0 = below / total;
    const double w1 = above / total;
    const double diff = below_mass / below - (total_mass - below_mass) / above;
    const double var = w0 * w1 * diff * diff;
    if (var > best_var) {
      best_var = var;
      best_level = k;
    }
  }
  if (best_level == 0) {
    // Constant map: every level sits in one class.
    best_level = quantize_level(map.values.front());
  }
  return std::max(0.0, (static_cast<double>(best_level) - 0.5) / 255.0);
}

double mae(const SaliencyMap& map, const GroundTruthMask& gt) {
  require_same_size("mae", map, gt);
  if (gt.size() == 0) throw std::invalid_argument("mae: empty map");
  double acc = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) acc += std::abs(map.values[i] - (gt.values[i] ? 1.0 : 0.0));
  return acc / static_cast<double>(gt.size());
}

DistanceTransform distance_transform(const GroundTruthMask& mask) {
  const std::size_t h = mask.height;
  const std::size_t w = mask.width;
  if (mask.foreground() == 0) throw std::invalid_argument("distance_transform: mask has no foreground");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  // Column pass: squared vertical distance to the nearest foreground row.
  std::vector<double> col_d2(h * w, kInf);
  std::vector<std::size_t> col_row(h * w, kNone);
  for (std::size_t x = 0; x < w; ++x) {
    std::size_t last = kNone;
    for (std::size_t y = 0; y < h; ++y) {
      if (mask.at(y, x)) last = y;
      if (last != kNone) {
        const double d = static_cast<double>(y - last);
        col_d2[y * w + x] = d * d;
        col_row[y * w + x] = last;
      }
    }
    std::size_t next = kNone;
    for (std::size_t y = h; y-- > 0;) {
      if (mask.at(y, x)) next = y;
      if (next != kNone) {
        const double d = static_cast<double>(next - y);
        if (d * d < col_d2[y * w + x]) {  // strict: the upper row wins ties
          col_d2[y * w + x] = d * d;
          col_row[y * w + x] = next;
        }
      }
    }
  }

  // Row pass: lower envelope of parabolas (q, col_d2[q]) over finite entries.
  DistanceTransform dt{h, w, std::vector<double>(h * w), std::vector<std::size_t>(h * w)};
  std::vector<std::size_t> v(w);
  std::vector<double> z(w + 1);
  for (std::size_t y = 0; y < h; ++y) {
    const double* f = col_d2.data() + y * w;
    std::ptrdiff_t k = -1;
    for (std::size_t q = 0; q < w; ++q) {
      if (f[q] == kInf) continue;
      const double qd = static_cast<double>(q);
      while (true) {
        if (k < 0) {
          k = 0;
          v[0] = q;
          z[0] = -kInf;
          z[1] = kInf;
          break;
        }
        const double vk = static_cast<double>(v[k]);
        const double s = ((f[q] + qd * qd) - (f[v[k]] + vk * vk)) / (2.0 * qd - 2.0 * vk);
        if (s <= z[k]) {
          --k;
          continue;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
        break;
      }
    }
    if (k < 0) {
      // Row has no column with foreground; impossible once any foreground exists.
      throw std::logic_error("distance_transform: empty envelope");
    }
    std::ptrdiff_t j = 0;
    for (std::size_t x = 0; x < w; ++x) {
      const double xd = static_cast<double>(x);
      while (z[j + 1] < xd) ++j;
      const std::size_t q = v[j];
      const double dx = xd - static_cast<double>(q);
      dt.distance[y * w + x] = std::sqrt(dx * dx + f[q]);
      dt.nearest[y * w + x] = col_row[y * w + q] * w + q;
    }
  }
  return dt;
}

namespace {

constexpr int kGaussRadius = 3;
constexpr double kGaussSigma = 5.0;

std::array<double, 49> gaussian_7x7() {
  std::array<double, 49> k{};
  double total = 0.0;
  for (int a = -kGaussRadius; a <= kGaussRadius; ++a) {
    for (int b = -kGaussRadius; b <= kGaussRadius; ++b) {
      const double v = std::exp(-static_cast<double>(a * a + b * b) / (2.0 * kGaussSigma * kGaussSigma));
      k[(a + kGaussRadius) * 7 + (b + kGaussRadius)] = v;
      total += v;
    }
  }
  for (double& v : k) v /= total;
  return k;
}

// "Same" correlation with the 7x7 Gaussian, borders replicated.
std::vector<double> gaussian_smooth(const std::vector<double>& in, std::size_t h, std::size_t w) {
  static const std::array<double, 49> kernel = gaussian_7x7();
  std::vector<double> out(h * w, 0.0);
  const auto H = static_cast<std::ptrdiff_t>(h);
  const auto W = static_cast<std::ptrdiff_t>(w);
  for (std::ptrdiff_t y = 0; y < H; ++y) {
    for (std::ptrdiff_t x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int a = -kGaussRadius; a <= kGaussRadius; ++a) {
        const std::ptrdiff_t yy = std::clamp<std::ptrdiff_t>(y + a, 0, H - 1);
        for (int b = -kGaussRadius; b <= kGaussRadius; ++b) {
          const std::ptrdiff_t xx = std::clamp<std::ptrdiff_t>(x + b, 0, W - 1);
          acc += kernel[(a + kGaussRadius) * 7 + (b + kGaussRadius)] * in[yy * W + xx];
        }
      }
      out[y * W + x] = acc;
    }
  }
  return out;
}

}  // namespace

std::optional<double> weighted_f(const SaliencyMap& map, const GroundTruthMask& gt, double beta_sq) {
  require_same_size("weighted_f", map, gt);
  if (gt.foreground() == 0) return std::nullopt;
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  const std::size_t n = gt.size();

  std::vector<double> err(n);
  for (std::size_t i = 0; i < n; ++i) err[i] = std::abs(map.values[i] - (gt.values[i] ? 1.0 : 0.0));

  const DistanceTransform dt = distance_transform(gt);
  // Background pixels take the error of their nearest foreground pixel so the
  // smoothing does not bleed background error across object edges.
  std::vector<double> spread(err);
  for (std::size_t i = 0; i < n; ++i) {
    if (!gt.values[i]) spread[i] = err[dt.nearest[i]];
  }
  const std::vector<double> smoothed = gaussian_smooth(spread, gt.height, gt.width);

  const double decay = std::log(0.5) / 5.0;
  double fg_err = 0.0;
  double bg_err = 0.0;
  std::size_t fg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (gt.values[i]) {
      fg_err += std::min(err[i], smoothed[i]);
      ++fg;
    } else {
      bg_err += err[i] * (2.0 - std::exp(decay * dt.distance[i]));
    }
  }
  const double tp = static_cast<double>(fg) - fg_err;
  const double recall = 1.0 - fg_err / static_cast<double>(fg);
  const double precision = tp / (kEps + tp + bg_err);
  return (1.0 + beta_sq) * recall * precision / (kEps + recall + beta_sq * precision);
}

ImageMetrics evaluate_image(std::string name, const SaliencyMap& map, const GroundTruthMask& gt,
                            const MetricOptions& options) {
  validate(options);
  require_same_size("evaluate_image", map, gt);
  ImageMetrics m;
  m.name = std::move(name);
  double f_sum = 0.0;
  for (double t : threshold_grid(options.thresholds)) {
    const PrecisionRecall pr = precision_recall(binarize_at(map, t), gt);
    m.curve.push_back(pr);
    f_sum += f_measure(pr.precision, pr.recall, options.beta_sq);
  }
  m.mean_f = f_sum / static_cast<double>(options.thresholds);
  m.adaptive_threshold = otsu_threshold(map);
  const PrecisionRecall apr = precision_recall(binarize_at(map, m.adaptive_threshold), gt);
  m.adaptive_precision = apr.precision;
  m.adaptive_recall = apr.recall;
  m.adaptive_f = f_measure(apr.precision, apr.recall, options.beta_sq);
  m.mae = mae(map, gt);
  m.weighted_f = weighted_f(map, gt, options.weighted_beta_sq);
  return m;
}

MetricsReport evaluate_dataset(std::span<const EvalPair> pairs, const MetricOptions& options) {
  validate(options);
  MetricsReport r;
  r.options = options;
  for (const EvalPair& p : pairs) {
    if (p.map.height != p.gt.height || p.map.width != p.gt.width || p.gt.size() == 0) {
      r.rejected.push_back({p.name, "size mismatch: prediction " + std::to_string(p.map.height) + "x" +
                                        std::to_string(p.map.width) + ", mask " +
                                        std::to_string(p.gt.height) + "x" + std::to_string(p.gt.width)});
      continue;
    }
    r.images.push_back(evaluate_image(p.name, p.map, p.gt, options));
  }
  if (r.images.empty()) throw std::invalid_argument("evaluate_dataset: no valid pairs");

  const double count = static_cast<double>(r.images.size());
  const std::vector<double> grid = threshold_grid(options.thresholds);
  r.curve.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double p = 0.0;
    double q = 0.0;
    for (const ImageMetrics& m : r.images) {
      p += m.curve[k].precision;
      q += m.curve[k].recall;
    }
    r.curve[k] = {grid[k], p / count, q / count};
  }
  double wf = 0.0;
  for (const ImageMetrics& m : r.images) {
    r.mean_f += m.mean_f;
    r.adaptive_precision += m.adaptive_precision;
    r.adaptive_recall += m.adaptive_recall;
    r.adaptive_f += m.adaptive_f;
    r.mae += m.mae;
    if (m.weighted_f) {
      wf += *m.weighted_f;
      ++r.weighted_f_count;
    }
  }
  r.mean_f /= count;
  r.adaptive_precision /= count;
  r.adaptive_recall /= count;
  r.adaptive_f /= count;
  r.mae /= count;
  if (r.weighted_f_count > 0) r.weighted_f = wf / static_cast<double>(r.weighted_f_count);
  return r;
}

}  // namespace dsrcnn
