#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsrcnn/graph.hpp"
#include "dsrcnn/maps.hpp"
#include "dsrcnn/ops.hpp"
#include "dsrcnn/rcl.hpp"
#include "dsrcnn/rng.hpp"

namespace dsrcnn {

inline constexpr std::size_t kNumBlocks = 5;
/// Smallest accepted image side; the stride-16 branch needs at least one cell.
inline constexpr std::size_t kMinImageSide = 16;

struct ModelConfig {
  std::size_t input_channels = 3;
  std::array<std::size_t, kNumBlocks> block_channels{8, 16, 32, 64, 64};
  std::array<std::size_t, kNumBlocks> convs_per_block{2, 2, 3, 3, 3};
  std::size_t rcl_steps = 2;
  std::size_t kernel_side = 3;
  double dropout_ratio = 0.5;
  std::uint64_t seed = 0;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Throws std::invalid_argument describing the first bad field.
void validate(const ModelConfig& config);

/// Side-output stride of block `block` (0-based): 1, 2, 4, 8, 16.
constexpr std::size_t side_stride(std::size_t block) { return std::size_t{1} << block; }

struct SideHead {
  ConvParams score;                   // 1x1, one output channel
  std::optional<ConvParams> upsample; // absent for the stride-1 block
};

struct Model {
  ModelConfig config;
  std::array<std::vector<RclParams>, kNumBlocks> blocks;
  std::array<SideHead, kNumBlocks> side_heads;
  ConvParams fusion;  // 1x1, five input channels
};

/// One learnable array. `block` is the 0-based block for trunk and side
/// parameters and -1 for the fusion head.
template <class T>
struct ParamRefT {
  std::string name;
  T* tensor;
  int block;
};
using ParamRef = ParamRefT<Tensor>;
using ConstParamRef = ParamRefT<const Tensor>;

/// Every learnable array in a fixed order: trunk layers block by block, then
/// side heads, then fusion.
std::vector<ParamRef> parameters(Model& model);
std::vector<ConstParamRef> parameters(const Model& model);

Model build_model(const ModelConfig& config, Rng& rng);

struct ForwardVars {
  Var image;
  std::vector<Var> params;  // aligned with parameters(model)
  std::array<Var, kNumBlocks> side_scores;  // pre-sigmoid, input-sized
  std::array<Var, kNumBlocks> side_maps;
  Var fused_score;
  Var fused_map;
};

/// Records the full network on `g`. `image` must be (1, input_channels, h, w)
/// with h, w >= 16.
ForwardVars record_forward(Graph& g, const Model& model, const Tensor& image, Mode mode, Rng& rng);

struct ForwardResult {
  std::array<SaliencyMap, kNumBlocks> side_maps;
  SaliencyMap fused_map;
};

ForwardResult forward(const Model& model, const Tensor& image, Mode mode, Rng& rng);

class WeightFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Little-endian doubles behind a manifest of the config and per-array
/// name/shape records.
void save_weights(const Model& model, const std::filesystem::path& path);
Model load_weights(const std::filesystem::path& path);
/// As above, and rejects files whose arrays disagree with `expected`, naming
/// the first offending block.
Model load_weights(const std::filesystem::path& path, const ModelConfig& expected);

}  // namespace dsrcnn
