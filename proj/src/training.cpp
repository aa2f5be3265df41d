#include "dsrcnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

namespace dsrcnn {
namespace {

double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

void require_binary(const GroundTruthMask& gt) {
  if (gt.size() == 0) throw ShapeError("loss: empty ground truth");
}

}  // namespace

void validate(const SgdConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("sgd: learning_rate must be positive");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) throw std::invalid_argument("sgd: momentum must lie in [0, 1)");
  if (!(cfg.weight_decay >= 0.0)) throw std::invalid_argument("sgd: weight_decay must be non-negative");
}

double class_balance_alpha(const GroundTruthMask& gt) {
  require_binary(gt);
  const std::size_t positives = gt.foreground();
  return static_cast<double>(gt.size() - positives) / static_cast<double>(gt.size());
}

double balanced_bce(const SaliencyMap& pred, const GroundTruthMask& gt) {
  require_same_size("balanced_bce", pred, gt);
  const double alpha = class_balance_alpha(gt);
  double pos = 0.0;
  double neg = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double p = clamp_prob(pred.values[i]);
    if (gt.values[i]) {
      pos += std::log(p);
    } else {
      neg += std::log(1.0 - p);
    }
  }
  return -alpha * pos - (1.0 - alpha) * neg;
}

Var balanced_bce(Graph& g, Var pred, const GroundTruthMask& gt) {
  const SaliencyMap map = to_map(g.value(pred));
  const double loss = balanced_bce(map, gt);
  const double alpha = class_balance_alpha(gt);
  auto labels = std::make_shared<const std::vector<std::uint8_t>>(gt.values);
  return g.record(OpKind::kBalancedBce, {pred}, Tensor(Shape{1, 1, 1, 1}, loss),
                  [alpha, labels](BackwardContext& ctx) {
                    const double go = ctx.output_grad()[0];
                    const Tensor& p = ctx.input(0);
                    auto gp = ctx.input_grad(0);
                    for (std::size_t i = 0; i < gp.size(); ++i) {
                      const double v = p[i];
                      if (v < kProbFloor || v > 1.0 - kProbFloor) continue;
                      gp[i] += (*labels)[i] ? -go * alpha / v : go * (1.0 - alpha) / (1.0 - v);
                    }
                  });
}

LossBreakdown total_loss(const ForwardResult& result, const GroundTruthMask& gt) {
  LossBreakdown lb;
  for (std::size_t m = 0; m < kNumBlocks; ++m) {
    lb.side_losses[m] = balanced_bce(result.side_maps[m], gt);
    lb.total += lb.side_losses[m];
  }
  lb.fuse_loss = balanced_bce(result.fused_map, gt);
  lb.total += lb.fuse_loss;
  return lb;
}

LossVars record_total_loss(Graph& g, const ForwardVars& fv, const GroundTruthMask& gt) {
  LossVars lv;
  for (std::size_t m = 0; m < kNumBlocks; ++m) lv.side[m] = balanced_bce(g, fv.side_maps[m], gt);
  lv.fuse = balanced_bce(g, fv.fused_map, gt);
  Var acc = lv.side[0];
  for (std::size_t m = 1; m < kNumBlocks; ++m) acc = add(g, acc, lv.side[m]);
  lv.total = add(g, acc, lv.fuse);
  return lv;
}

GradientResult compute_gradients(const Model& model, const Tensor& image, const GroundTruthMask& gt,
                                 Mode mode, Rng& rng) {
  Graph g;
  const ForwardVars fv = record_forward(g, model, image, mode, rng);
  const LossVars lv = record_total_loss(g, fv, gt);
  g.backward(lv.total);

  GradientResult r;
  for (std::size_t m = 0; m < kNumBlocks; ++m) r.loss.side_losses[m] = g.value(lv.side[m])[0];
  r.loss.fuse_loss = g.value(lv.fuse)[0];
  r.loss.total = g.value(lv.total)[0];
  r.gradients.reserve(fv.params.size());
  for (Var p : fv.params) r.gradients.push_back(g.grad(p));
  return r;
}

void sgd_update(std::span<double> theta, std::span<const double> grad, std::span<double> velocity,
                const SgdConfig& cfg, const std::string& name) {
  if (theta.size() != grad.size() || theta.size() != velocity.size()) {
    throw ShapeError("sgd: gradient for " + name + " does not match the parameter size");
  }
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw TrainingAborted("sgd: non-finite gradient in parameter " + name + " at index " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < theta.size(); ++i) {
    velocity[i] = cfg.momentum * velocity[i] - cfg.learning_rate * (grad[i] + cfg.weight_decay * theta[i]);
    theta[i] += velocity[i];
  }
}

void sgd_step(Model& model, std::span<const Tensor> grads, const SgdConfig& cfg, SgdState& state) {
  auto params = parameters(model);
  if (grads.size() != params.size()) {
    throw ShapeError("sgd: got " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(params.size()) + " parameters");
  }
  if (state.velocity.empty()) {
    for (const ParamRef& p : params) state.velocity.emplace_back(p.tensor->shape());
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i].tensor->shape()) {
      throw ShapeError("sgd: gradient " + grads[i].shape().str() + " does not match parameter " +
                       params[i].name + " " + params[i].tensor->shape().str());
    }
    sgd_update(params[i].tensor->data(), grads[i].data(), state.velocity[i].data(), cfg, params[i].name);
  }
}

std::vector<LossBreakdown> train(Model& model, std::span<const Sample> corpus, const SgdConfig& cfg,
                                 const IterationCallback& on_iteration) {
  validate(cfg);
  if (corpus.empty()) throw std::invalid_argument("train: empty corpus");
  for (const Sample& s : corpus) {
    if (s.image.shape().h != s.mask.height || s.image.shape().w != s.mask.width) {
      throw ShapeError("train: image and mask sizes differ for " + s.name);
    }
  }

  Rng root(cfg.seed);
  Rng order_rng = root.fork();
  Rng noise_rng = root.fork();
  std::vector<std::size_t> order(corpus.size());
  SgdState state;
  std::vector<LossBreakdown> history;
  history.reserve(cfg.iterations);

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const std::size_t slot = it % corpus.size();
    if (slot == 0) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.index(i)]);
    }
    const Sample& s = corpus[order[slot]];
    GradientResult r = compute_gradients(model, s.image, s.mask, Mode::kTrain, noise_rng);
    if (!std::isfinite(r.loss.total)) {
      throw TrainingAborted("train: non-finite loss at iteration " + std::to_string(it) + " (" + s.name + ")");
    }
    sgd_step(model, r.gradients, cfg, state);
    history.push_back(r.loss);
    if (on_iteration) on_iteration(it, r.loss);
  }
  return history;
}

}  // namespace dsrcnn
