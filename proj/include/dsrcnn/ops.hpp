#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dsrcnn/graph.hpp"
#include "dsrcnn/rng.hpp"
#include "dsrcnn/tensor.hpp"

namespace dsrcnn {

struct Extent2 {
  std::size_t h = 0;
  std::size_t w = 0;
  friend bool operator==(const Extent2&, const Extent2&) = default;
};

/// Kernel of shape (out_c, in_c, k_h, k_w); bias, when present, of shape
/// (1, out_c, 1, 1).
struct ConvParams {
  Tensor kernel;
  std::optional<Tensor> bias;
  Extent2 stride{1, 1};
  Extent2 padding{0, 0};

  std::size_t out_channels() const { return kernel.shape().n; }
  std::size_t in_channels() const { return kernel.shape().c; }
};

enum class Mode { kTrain, kInfer };

/// Throws ShapeError unless kernel/bias/stride/padding are mutually consistent.
void validate(const ConvParams& p);

/// Output extent of a strided, padded correlation. Throws ShapeError when empty.
Extent2 conv_output_extent(Extent2 in, Extent2 kernel, Extent2 stride, Extent2 padding);

/// Side length 2f - (f mod 2) of the upsampling kernel for factor f.
std::size_t upsample_kernel_side(std::size_t factor);

/// (1, 1, k, k) bilinear interpolation kernel for an integer upsampling factor.
Tensor bilinear_kernel(std::size_t factor);

// ---------------------------------------------------------------------------
// Eager forward operations.

Tensor conv2d(const Tensor& input, const ConvParams& p);

/// Adjoint of a stride-s, zero-padding conv2d, center-cropped to `output_size`.
/// p.kernel is (out_c, in_c, k, k) and maps in_c input channels to out_c.
Tensor transposed_conv2d(const Tensor& input, const ConvParams& p, Extent2 output_size);

struct PoolResult {
  Tensor output;
  /// For each output element, the flat input offset of its maximum.
  std::vector<std::size_t> argmax;
};

/// 2x2 window, stride 2, ceil mode: border windows are clipped, never dropped.
PoolResult max_pool2d(const Tensor& input);

Tensor sigmoid(const Tensor& input);
Tensor relu(const Tensor& input);

/// Inverted dropout. Infer mode and ratio 0 return the input unchanged and
/// draw nothing from rng.
Tensor dropout(const Tensor& input, double ratio, Mode mode, Rng& rng);

Tensor concat_channels(std::span<const Tensor> inputs);
Tensor slice_channels(const Tensor& input, std::size_t begin, std::size_t count);

// ---------------------------------------------------------------------------
// Recorded (differentiable) operations.

Var conv2d(Graph& g, Var input, Var kernel, std::optional<Var> bias, Extent2 stride,
           Extent2 padding);
Var transposed_conv2d(Graph& g, Var input, Var kernel, std::optional<Var> bias,
                      Extent2 stride, Extent2 output_size);
Var max_pool2d(Graph& g, Var input);
Var sigmoid(Graph& g, Var input);
Var relu(Graph& g, Var input);
Var dropout(Graph& g, Var input, double ratio, Mode mode, Rng& rng);
Var concat_channels(Graph& g, std::span<const Var> inputs);
Var slice_channels(Graph& g, Var input, std::size_t begin, std::size_t count);
Var add(Graph& g, Var a, Var b);
/// Scalar (1,1,1,1) sum of every element.
Var sum(Graph& g, Var input);

}  // namespace dsrcnn
