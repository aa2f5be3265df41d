#include "dsrcnn/rcl.hpp"

#include <cmath>
#include <sstream>

namespace dsrcnn {
namespace {

// Uniform with variance gain / fan_in.
Tensor uniform_kernel(Shape shape, double gain, Rng& rng) {
  const double fan_in = static_cast<double>(shape.c * shape.h * shape.w);
  const double bound = std::sqrt(3.0 * gain / fan_in);
  Tensor k(shape);
  for (double& v : k.data()) v = rng.uniform(-bound, bound);
  return k;
}

}  // namespace

void validate(const RclParams& p) {
  validate(p.feed_forward);
  validate(p.recurrent);
  const Shape& fs = p.feed_forward.kernel.shape();
  const Shape& rs = p.recurrent.kernel.shape();
  std::ostringstream os;
  if (rs.n != rs.c) {
    os << "rcl: recurrent kernel " << rs.str() << " must map the state to itself (in_c == out_c)";
  } else if (rs.n != fs.n) {
    os << "rcl: recurrent kernel " << rs.str() << " and feed-forward kernel " << fs.str()
       << " disagree on output channels";
  } else if (fs.h != fs.w || rs.h != fs.h || rs.w != fs.w) {
    os << "rcl: kernels must be square and of equal size, got " << fs.str() << " and " << rs.str();
  } else if (!p.feed_forward.bias) {
    os << "rcl: feed-forward convolution carries the layer bias";
  } else if (p.recurrent.bias) {
    os << "rcl: recurrent convolution must not carry a bias";
  } else if (p.feed_forward.stride != Extent2{1, 1} || p.recurrent.stride != Extent2{1, 1} ||
             p.feed_forward.padding != Extent2{fs.h / 2, fs.w / 2} ||
             p.recurrent.padding != Extent2{fs.h / 2, fs.w / 2} || fs.h % 2 == 0) {
    os << "rcl: convolutions must be odd-sized, stride 1, same padding";
  }
  if (!os.str().empty()) throw ShapeError(os.str());
}

RclParams make_rcl(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_side,
                   std::size_t steps, Rng& rng) {
  const std::size_t pad = kernel_side / 2;
  RclParams p;
  p.feed_forward.kernel = uniform_kernel(Shape{out_channels, in_channels, kernel_side, kernel_side}, 2.0, rng);
  p.feed_forward.bias = Tensor(Shape{1, out_channels, 1, 1});
  p.feed_forward.padding = {pad, pad};
  p.recurrent.kernel = uniform_kernel(Shape{out_channels, out_channels, kernel_side, kernel_side}, 0.5, rng);
  p.recurrent.padding = {pad, pad};
  p.steps = steps;
  validate(p);
  return p;
}

RclVars register_parameters(Graph& g, const RclParams& p, const std::string& prefix) {
  return RclVars{
      g.parameter(prefix + ".ff_kernel", p.feed_forward.kernel),
      g.parameter(prefix + ".ff_bias", *p.feed_forward.bias),
      g.parameter(prefix + ".rec_kernel", p.recurrent.kernel),
  };
}

Var rcl_unfold(Graph& g, Var u, const RclVars& vars, const RclParams& p) {
  validate(p);
  if (g.value(u).shape().c != p.in_channels()) {
    throw ShapeError("rcl: input " + g.value(u).shape().str() + " does not match feed-forward kernel " +
                     p.feed_forward.kernel.shape().str());
  }
  const Var drive = conv2d(g, u, vars.ff_kernel, vars.ff_bias, p.feed_forward.stride,
                           p.feed_forward.padding);
  Var state = relu(g, drive);
  for (std::size_t t = 1; t <= p.steps; ++t) {
    const Var feedback =
        conv2d(g, state, vars.rec_kernel, std::nullopt, p.recurrent.stride, p.recurrent.padding);
    state = relu(g, add(g, drive, feedback));
  }
  return state;
}

Tensor rcl_forward(const Tensor& u, const RclParams& p) {
  Graph g;
  const Var in = g.input(u);
  const RclVars vars = register_parameters(g, p, "rcl");
  return g.value(rcl_unfold(g, in, vars, p));
}

}  // namespace dsrcnn
