#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsrcnn/graph.hpp"
#include "dsrcnn/maps.hpp"
#include "dsrcnn/model.hpp"

namespace dsrcnn {

/// Predictions are clamped to [kProbFloor, 1 - kProbFloor] inside the logs.
inline constexpr double kProbFloor = 1e-9;

struct LossBreakdown {
  std::array<double, kNumBlocks> side_losses{};
  double fuse_loss = 0.0;
  double total = 0.0;
};

struct SgdConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::size_t iterations = 2000;
  std::uint64_t seed = 0;
};

void validate(const SgdConfig& cfg);

/// Raised when a gradient or loss stops being finite; names the parameter.
class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// |Y-| / (|Y+| + |Y-|).
double class_balance_alpha(const GroundTruthMask& gt);

/// -a * sum_{Y+} log p - (1 - a) * sum_{Y-} log(1 - p), summed over pixels.
double balanced_bce(const SaliencyMap& pred, const GroundTruthMask& gt);

/// Recorded form; `pred` must be (1, 1, h, w) matching gt.
Var balanced_bce(Graph& g, Var pred, const GroundTruthMask& gt);

/// Five side losses plus the fused loss, unweighted.
LossBreakdown total_loss(const ForwardResult& result, const GroundTruthMask& gt);

struct LossVars {
  std::array<Var, kNumBlocks> side;
  Var fuse;
  Var total;
};

LossVars record_total_loss(Graph& g, const ForwardVars& fv, const GroundTruthMask& gt);

struct GradientResult {
  LossBreakdown loss;
  std::vector<Tensor> gradients;  // aligned with parameters(model)
};

/// One forward + backward pass of the joint objective for a single image.
GradientResult compute_gradients(const Model& model, const Tensor& image, const GroundTruthMask& gt,
                                 Mode mode, Rng& rng);

/// Momentum buffers, one per parameter, lazily zero-initialized.
struct SgdState {
  std::vector<Tensor> velocity;
};

/// v <- momentum * v - lr * (g + weight_decay * theta);  theta <- theta + v.
/// Throws TrainingAborted naming `name` if any gradient entry is not finite.
void sgd_update(std::span<double> theta, std::span<const double> grad, std::span<double> velocity,
                const SgdConfig& cfg, const std::string& name);

void sgd_step(Model& model, std::span<const Tensor> grads, const SgdConfig& cfg, SgdState& state);

struct Sample {
  std::string name;
  Tensor image;
  GroundTruthMask mask;
};

/// Called after every iteration with its index and loss.
using IterationCallback = std::function<void(std::size_t, const LossBreakdown&)>;

/// Single-image SGD for cfg.iterations steps. The visiting order is reshuffled
/// at the start of every pass over the corpus; dropout noise and shuffling
/// both derive from cfg.seed. Returns the per-iteration loss history.
std::vector<LossBreakdown> train(Model& model, std::span<const Sample> corpus, const SgdConfig& cfg,
                                 const IterationCallback& on_iteration = {});

}  // namespace dsrcnn
