#pragma once

#include <cstddef>
#include <string>

#include "dsrcnn/graph.hpp"
#include "dsrcnn/ops.hpp"
#include "dsrcnn/rng.hpp"

namespace dsrcnn {

/// Recurrent convolutional layer.
///
/// feed_forward carries the input kernel and the bias; recurrent has no bias,
/// and its kernel maps the layer's own state (in_c == out_c). Both use stride
/// 1 and "same" padding. The same three tensors are reused at every step.
struct RclParams {
  ConvParams feed_forward;
  ConvParams recurrent;
  std::size_t steps = 2;

  std::size_t in_channels() const { return feed_forward.in_channels(); }
  std::size_t out_channels() const { return feed_forward.out_channels(); }
};

/// Throws ShapeError on geometry violations (recurrent in_c != out_c, etc.).
void validate(const RclParams& p);

/// Square kernels of side `kernel_side`. Uniform init with bound sqrt(6 / fan_in)
/// for the feed-forward kernel and sqrt(1.5 / fan_in) for the recurrent one.
RclParams make_rcl(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_side,
                   std::size_t steps, Rng& rng);

/// Graph leaves holding one layer's shared parameters.
struct RclVars {
  Var ff_kernel;
  Var ff_bias;
  Var rec_kernel;
};

RclVars register_parameters(Graph& g, const RclParams& p, const std::string& prefix);

/// Records the unfolded layer: T+1 stages along the longest path, all
/// drawing on `vars`, and the feed-forward convolution computed once.
///   x(0) = relu(ff(u) + b)
///   x(t) = relu(ff(u) + b + rec(x(t-1)))   for t = 1..T
Var rcl_unfold(Graph& g, Var u, const RclVars& vars, const RclParams& p);

/// Eager evaluation of rcl_unfold; returns x(T).
Tensor rcl_forward(const Tensor& u, const RclParams& p);

}  // namespace dsrcnn
