#include "dsrcnn/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include <unistd.h>

#include "dsrcnn/gradcheck.hpp"
#include "dsrcnn/metrics.hpp"
#include "dsrcnn/model.hpp"
#include "dsrcnn/ops.hpp"
#include "dsrcnn/rcl.hpp"
#include "dsrcnn/training.hpp"

namespace dsrcnn {
namespace {

constexpr double kStep = 1e-5;
constexpr double kGradTol = 1e-4;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Tensor random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(s);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero so relu kinks stay outside the FD stencil.
Tensor away_from_zero(Shape s, Rng& rng) {
  Tensor t(s);
  for (double& v : t.data()) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.1, 1.0);
  return t;
}

Outcome from_report(const GradCheckReport& r) {
  return {r.ok(), std::to_string(r.checked) + " entries, max rel error " + sci(r.max_rel_error)};
}

// Direct correlation loop used as the convolution oracle.
Tensor conv_oracle(const Tensor& x, const Tensor& k, const Tensor* bias, std::size_t stride, std::size_t pad) {
  const Shape xs = x.shape();
  const Shape ks = k.shape();
  const std::size_t oh = (xs.h + 2 * pad - ks.h) / stride + 1;
  const std::size_t ow = (xs.w + 2 * pad - ks.w) / stride + 1;
  Tensor y(Shape{xs.n, ks.n, oh, ow});
  for (std::size_t n = 0; n < xs.n; ++n)
    for (std::size_t o = 0; o < ks.n; ++o)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          double acc = bias ? bias->at(0, o, 0, 0) : 0.0;
          for (std::size_t c = 0; c < xs.c; ++c)
            for (std::size_t a = 0; a < ks.h; ++a)
              for (std::size_t b = 0; b < ks.w; ++b) {
                const long r = static_cast<long>(i * stride + a) - static_cast<long>(pad);
                const long q = static_cast<long>(j * stride + b) - static_cast<long>(pad);
                if (r < 0 || q < 0 || r >= static_cast<long>(xs.h) || q >= static_cast<long>(xs.w)) continue;
                acc += x.at(n, c, static_cast<std::size_t>(r), static_cast<std::size_t>(q)) * k.at(o, c, a, b);
              }
          y.at(n, o, i, j) = acc;
        }
  return y;
}

Outcome check_conv_oracle(bool corrupt) {
  Rng rng(11);
  const Tensor x = random_tensor(Shape{2, 3, 7, 6}, rng);
  ConvParams p;
  p.kernel = random_tensor(Shape{4, 3, 3, 3}, rng);
  p.bias = random_tensor(Shape{1, 4, 1, 1}, rng);
  p.stride = {2, 2};
  p.padding = {1, 1};
  const Tensor expected = conv_oracle(x, p.kernel, &*p.bias, 2, 1);
  if (corrupt) p.kernel[0] += 0.25;
  const Tensor got = conv2d(x, p);
  if (got.shape() != expected.shape()) return {false, "shape " + got.shape().str() + " vs " + expected.shape().str()};
  double worst = 0.0;
  for (std::size_t i = 0; i < got.numel(); ++i) worst = std::max(worst, std::abs(got[i] - expected[i]));
  return {worst <= 1e-12, "max abs difference " + sci(worst)};
}

Outcome check_conv_gradient(bool corrupt) {
  Rng rng(12);
  std::vector<Tensor> leaves{random_tensor(Shape{1, 2, 5, 6}, rng), random_tensor(Shape{3, 2, 3, 3}, rng),
                             random_tensor(Shape{1, 3, 1, 1}, rng)};
  int calls = 0;
  GradCheckReport r = check_graph_gradients(
      leaves,
      [&](Graph& g, std::span<const Var> v) {
        Var k = v[1];
        // The first call yields the analytic gradients; only it sees the fault.
        if (corrupt && calls++ == 0) {
          Tensor delta(g.value(v[1]).shape());
          delta[0] = 0.25;
          k = add(g, v[1], g.input(delta));
        }
        return sum(g, sigmoid(g, conv2d(g, v[0], k, v[2], {2, 1}, {1, 1})));
      },
      kStep, kGradTol, "conv2d");
  return from_report(r);
}

Outcome check_tconv_gradient() {
  Rng rng(13);
  std::vector<Tensor> leaves{random_tensor(Shape{1, 2, 3, 4}, rng), random_tensor(Shape{3, 2, 4, 4}, rng)};
  return from_report(check_graph_gradients(
      leaves,
      [](Graph& g, std::span<const Var> v) {
        return sum(g, sigmoid(g, transposed_conv2d(g, v[0], v[1], std::nullopt, {2, 2}, {6, 7})));
      },
      kStep, kGradTol, "transposed_conv2d"));
}

Outcome check_pool_relu_gradient() {
  Rng rng(14);
  std::vector<Tensor> leaves{away_from_zero(Shape{1, 2, 5, 5}, rng), random_tensor(Shape{1, 2, 3, 3}, rng)};
  return from_report(check_graph_gradients(
      leaves,
      [](Graph& g, std::span<const Var> v) {
        Var pooled = max_pool2d(g, relu(g, v[0]));
        return sum(g, sigmoid(g, add(g, pooled, v[1])));
      },
      kStep, kGradTol, "max_pool2d/relu"));
}

Outcome check_dropout_concat_gradient() {
  Rng rng(15);
  std::vector<Tensor> leaves{random_tensor(Shape{1, 2, 4, 4}, rng), random_tensor(Shape{1, 3, 4, 4}, rng)};
  return from_report(check_graph_gradients(
      leaves,
      [](Graph& g, std::span<const Var> v) {
        Rng noise(3);
        Var d = dropout(g, v[0], 0.5, Mode::kTrain, noise);
        const Var parts[] = {d, v[1]};
        Var cat = concat_channels(g, parts);
        return sum(g, sigmoid(g, slice_channels(g, cat, 1, 3)));
      },
      kStep, kGradTol, "dropout/concat"));
}

Outcome check_bce_gradient() {
  Rng rng(16);
  GroundTruthMask gt(3, 4);
  for (std::size_t i = 0; i < gt.size(); i += 3) gt.values[i] = 1;
  std::vector<Tensor> leaves{random_tensor(Shape{1, 1, 3, 4}, rng, -2.0, 2.0)};
  return from_report(check_graph_gradients(
      leaves, [&](Graph& g, std::span<const Var> v) { return balanced_bce(g, sigmoid(g, v[0]), gt); }, kStep,
      kGradTol, "balanced_bce"));
}

Outcome check_rcl_footprints() {
  std::string detail;
  bool ok = true;
  for (std::size_t steps = 0; steps <= 2; ++steps) {
    RclParams p;
    p.feed_forward.kernel = Tensor(Shape{1, 1, 3, 3}, 1.0);
    p.feed_forward.bias = Tensor(Shape{1, 1, 1, 1});
    p.feed_forward.padding = {1, 1};
    p.recurrent.kernel = Tensor(Shape{1, 1, 3, 3}, 1.0);
    p.recurrent.padding = {1, 1};
    p.steps = steps;
    Tensor u(Shape{1, 1, 15, 15});
    u.at(0, 0, 7, 7) = 1.0;
    const Tensor y = rcl_forward(u, p);
    std::size_t lo_r = 15, hi_r = 0, lo_c = 15, hi_c = 0, count = 0;
    for (std::size_t r = 0; r < 15; ++r)
      for (std::size_t c = 0; c < 15; ++c)
        if (y.at(0, 0, r, c) != 0.0) {
          lo_r = std::min(lo_r, r), hi_r = std::max(hi_r, r), lo_c = std::min(lo_c, c), hi_c = std::max(hi_c, c);
          ++count;
        }
    const std::size_t side = 3 + 2 * steps;
    const bool good = count == side * side && hi_r - lo_r + 1 == side && hi_c - lo_c + 1 == side;
    ok = ok && good;
    detail += (steps ? ", " : "") + std::string("T=") + std::to_string(steps) + " " +
              std::to_string(hi_r - lo_r + 1) + "x" + std::to_string(hi_c - lo_c + 1);
  }
  return {ok, detail};
}

Outcome check_rcl_gradient() {
  Rng rng(17);
  RclParams p = make_rcl(2, 3, 3, 2, rng);
  for (double& b : p.feed_forward.bias->data()) b = rng.uniform(-0.1, 0.1);
  std::vector<Tensor> leaves{away_from_zero(Shape{1, 2, 5, 5}, rng), p.feed_forward.kernel, *p.feed_forward.bias,
                             p.recurrent.kernel};
  return from_report(check_graph_gradients(
      leaves,
      [&](Graph& g, std::span<const Var> v) {
        const RclVars vars{v[1], v[2], v[3]};
        return sum(g, sigmoid(g, rcl_unfold(g, v[0], vars, p)));
      },
      kStep, kGradTol, "rcl"));
}

Outcome check_model_gradient() {
  ModelConfig cfg;
  cfg.block_channels = {2, 2, 3, 3, 3};
  cfg.convs_per_block = {1, 1, 1, 1, 1};
  Rng rng(18);
  const Model model = build_model(cfg, rng);
  const Tensor image = random_tensor(Shape{1, 3, 16, 16}, rng, -0.5, 0.5);
  GroundTruthMask gt(16, 16);
  for (std::size_t y = 4; y < 11; ++y)
    for (std::size_t x = 3; x < 12; ++x) gt.values[y * 16 + x] = 1;
  return from_report(check_model_gradients(model, image, gt, Mode::kTrain, 5, kStep, kGradTol));
}

Outcome check_loss_closed_form() {
  GroundTruthMask gt(3, 4);
  gt.values[0] = gt.values[5] = gt.values[10] = 1;
  ForwardResult r;
  for (SaliencyMap& m : r.side_maps) m = SaliencyMap(3, 4, 0.5);
  r.fused_map = SaliencyMap(3, 4, 0.5);
  const double got = total_loss(r, gt).total;
  const double expected = 6 * 4.5 * std::log(2.0);
  return {std::abs(got - expected) <= 1e-9, "total " + sci(got) + ", difference " + sci(std::abs(got - expected))};
}

Outcome check_weight_round_trip() {
  ModelConfig cfg;
  cfg.block_channels = {2, 2, 3, 3, 3};
  cfg.seed = 42;
  Rng rng(19);
  const Model model = build_model(cfg, rng);
  const auto path =
      std::filesystem::temp_directory_path() / ("dsrcnn_selftest_" + std::to_string(::getpid()) + ".bin");
  save_weights(model, path);
  const Model back = load_weights(path, cfg);
  std::filesystem::remove(path);
  const auto a = parameters(model);
  const auto b = parameters(back);
  bool same = a.size() == b.size() && back.config == cfg;
  for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].tensor->values() == b[i].tensor->values();
  return {same, std::to_string(a.size()) + " arrays"};
}

struct RandomPair {
  SaliencyMap map;
  GroundTruthMask gt;
};

RandomPair random_pair(Rng& rng) {
  const std::size_t h = 3 + rng.index(10);
  const std::size_t w = 3 + rng.index(10);
  RandomPair p{SaliencyMap(h, w), GroundTruthMask(h, w)};
  for (double& v : p.map.values) v = std::round(rng.uniform() * 255.0) / 255.0;
  for (auto& g : p.gt.values) g = rng.uniform() < 0.3;
  p.gt.values[rng.index(h * w)] = 1;
  return p;
}

Outcome check_metric_oracles() {
  Rng rng(20);
  double worst = 0.0;
  bool exact = true;
  for (int trial = 0; trial < 20; ++trial) {
    const RandomPair p = random_pair(rng);
    const std::size_t n = p.gt.size();
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) abs_sum += std::abs(p.map.values[i] - p.gt.values[i]);
    worst = std::max(worst, std::abs(mae(p.map, p.gt) - abs_sum / static_cast<double>(n)));

    const double t = 0.5;
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool on = p.map.values[i] >= t;
      tp += on && p.gt.values[i];
      fp += on && !p.gt.values[i];
      fn += !on && p.gt.values[i];
    }
    const PrecisionRecall pr = precision_recall(binarize_at(p.map, t), p.gt);
    if (tp + fp > 0) worst = std::max(worst, std::abs(pr.precision - tp / (tp + fp)));
    worst = std::max(worst, std::abs(pr.recall - tp / (tp + fn)));

    const DistanceTransform dt = distance_transform(p.gt);
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (!p.gt.values[j]) continue;
        const double dy = static_cast<double>(i / p.gt.width) - static_cast<double>(j / p.gt.width);
        const double dx = static_cast<double>(i % p.gt.width) - static_cast<double>(j % p.gt.width);
        best = std::min(best, std::sqrt(dy * dy + dx * dx));
      }
      exact = exact && dt.distance[i] == best;
    }
    const auto self = weighted_f(as_map(p.gt), p.gt);
    worst = std::max(worst, std::abs(self.value_or(0.0) - 1.0));
  }
  return {worst <= 1e-12 && exact, "max deviation " + sci(worst) + (exact ? ", distances exact" : ", distance mismatch")};
}

Outcome check_otsu() {
  Rng rng(21);
  bool ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    const RandomPair p = random_pair(rng);
    std::vector<double> hist(256, 0.0);
    for (double v : p.map.values) hist[quantize_level(v)] += 1.0;
    const double n = static_cast<double>(p.map.size());
    auto between = [&](std::size_t k) {
      double w0 = 0, m0 = 0, w1 = 0, m1 = 0;
      for (std::size_t l = 0; l < 256; ++l) (l < k ? w0 : w1) += hist[l], (l < k ? m0 : m1) += hist[l] * l;
      if (w0 == 0 || w1 == 0) return 0.0;
      const double d = m0 / w0 - m1 / w1;
      return w0 / n * w1 / n * d * d;
    };
    double best = 0.0;
    for (std::size_t k = 1; k < 256; ++k) best = std::max(best, between(k));
    const double t = otsu_threshold(p.map);
    const auto k = static_cast<std::size_t>(std::lround(t * 255.0 + 0.5));
    ok = ok && std::abs(between(k) - best) <= 1e-12 * std::max(1.0, best);
  }
  return {ok, "20 maps"};
}

}  // namespace

bool run_selftest(std::ostream& out, const SelftestOptions& options) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks = {
      {"conv2d vs direct loop", [&] { return check_conv_oracle(options.corrupt_kernel); }},
      {"conv2d gradient", [&] { return check_conv_gradient(options.corrupt_kernel); }},
      {"transposed_conv2d gradient", check_tconv_gradient},
      {"max_pool2d/relu gradient", check_pool_relu_gradient},
      {"dropout/concat/slice gradient", check_dropout_concat_gradient},
      {"balanced cross-entropy gradient", check_bce_gradient},
      {"rcl impulse footprints", check_rcl_footprints},
      {"rcl shared-weight gradient", check_rcl_gradient},
      {"tiny model gradient", check_model_gradient},
      {"loss on constant 0.5 maps", check_loss_closed_form},
      {"weight file round trip", check_weight_round_trip},
      {"metric pixel-loop oracles", check_metric_oracles},
      {"otsu exhaustive scan", check_otsu},
  };
  std::size_t passed = 0;
  for (const auto& [name, fn] : checks) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    passed += o.pass;
    out << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << '\n';
  }
  out << "selftest: " << passed << "/" << checks.size() << " checks passed\n";
  return passed == checks.size();
}

}  // namespace dsrcnn
