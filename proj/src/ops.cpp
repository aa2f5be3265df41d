#include "dsrcnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <sstream>
#include <string>

namespace dsrcnn {
namespace {

using Index = std::ptrdiff_t;

// Indices i in [0, small) with 0 <= i*stride + tap - offset < big.
struct Range {
  Index lo = 0;
  Index hi = 0;
};

Range tap_range(std::size_t small, std::size_t big, std::size_t stride, std::size_t tap,
                std::size_t offset) {
  const Index s = static_cast<Index>(stride);
  const Index shift = static_cast<Index>(tap) - static_cast<Index>(offset);
  Index lo = shift >= 0 ? 0 : (-shift + s - 1) / s;
  const Index top = static_cast<Index>(big) - 1 - shift;
  if (top < 0) return {0, 0};
  Index hi = std::min<Index>(static_cast<Index>(small), top / s + 1);
  if (hi < lo) hi = lo;
  return {lo, hi};
}

void require_channels(const char* op, const Tensor& input, const Tensor& kernel) {
  if (input.shape().c != kernel.shape().c) {
    std::ostringstream os;
    os << op << ": input " << input.shape().str() << " has " << input.shape().c
       << " channels but kernel " << kernel.shape().str() << " expects " << kernel.shape().c;
    throw ShapeError(os.str());
  }
}

void require_bias(const char* op, const Tensor& kernel, const Tensor* bias) {
  if (bias && bias->shape() != Shape{1, kernel.shape().n, 1, 1}) {
    std::ostringstream os;
    os << op << ": bias " << bias->shape().str() << " does not match kernel " << kernel.shape().str();
    throw ShapeError(os.str());
  }
}

// out[n,o,i,j] = sum_{c,a,b} k[o,c,a,b] * x[n,c,i*s+a-p, j*s+b-p] + bias[o]
Tensor conv_forward(const Tensor& x, const Tensor& k, const Tensor* bias, Extent2 stride,
                    Extent2 pad) {
  require_channels("conv2d", x, k);
  require_bias("conv2d", k, bias);
  const Shape& xs = x.shape();
  const Shape& ks = k.shape();
  const Extent2 oe = conv_output_extent({xs.h, xs.w}, {ks.h, ks.w}, stride, pad);
  Tensor out(Shape{xs.n, ks.n, oe.h, oe.w});
  const Index sw = static_cast<Index>(stride.w);
  for (std::size_t n = 0; n < xs.n; ++n) {
    for (std::size_t o = 0; o < ks.n; ++o) {
      double* dst = &out.at(n, o, 0, 0);
      if (bias) std::fill(dst, dst + oe.h * oe.w, (*bias)[o]);
      for (std::size_t c = 0; c < xs.c; ++c) {
        const double* src = &x.at(n, c, 0, 0);
        for (std::size_t a = 0; a < ks.h; ++a) {
          const Range rows = tap_range(oe.h, xs.h, stride.h, a, pad.h);
          for (std::size_t b = 0; b < ks.w; ++b) {
            const Range cols = tap_range(oe.w, xs.w, stride.w, b, pad.w);
            const double kv = k.at(o, c, a, b);
            for (Index i = rows.lo; i < rows.hi; ++i) {
              const Index y = i * static_cast<Index>(stride.h) + static_cast<Index>(a) -
                              static_cast<Index>(pad.h);
              const Index base =
                  y * static_cast<Index>(xs.w) + static_cast<Index>(b) - static_cast<Index>(pad.w);
              double* drow = dst + i * static_cast<Index>(oe.w);
              for (Index j = cols.lo; j < cols.hi; ++j) drow[j] += kv * src[base + j * sw];
            }
          }
        }
      }
    }
  }
  return out;
}

void conv_backward(const Tensor& x, const Tensor& k, Extent2 stride, Extent2 pad,
                   std::span<const double> gout, std::span<double> gx, std::span<double> gk,
                   std::span<double> gbias) {
  const Shape& xs = x.shape();
  const Shape& ks = k.shape();
  const Extent2 oe = conv_output_extent({xs.h, xs.w}, {ks.h, ks.w}, stride, pad);
  const std::size_t plane = oe.h * oe.w;
  const Index sw = static_cast<Index>(stride.w);
  for (std::size_t n = 0; n < xs.n; ++n) {
    for (std::size_t o = 0; o < ks.n; ++o) {
      const double* go = gout.data() + (n * ks.n + o) * plane;
      if (!gbias.empty()) {
        double acc = 0.0;
        for (std::size_t q = 0; q < plane; ++q) acc += go[q];
        gbias[o] += acc;
      }
      for (std::size_t c = 0; c < xs.c; ++c) {
        const std::size_t xoff = x.offset(n, c, 0, 0);
        const double* src = x.data().data() + xoff;
        double* gsrc = gx.empty() ? nullptr : gx.data() + xoff;
        for (std::size_t a = 0; a < ks.h; ++a) {
          const Range rows = tap_range(oe.h, xs.h, stride.h, a, pad.h);
          for (std::size_t b = 0; b < ks.w; ++b) {
            const Range cols = tap_range(oe.w, xs.w, stride.w, b, pad.w);
            const std::size_t kidx = k.offset(o, c, a, b);
            const double kv = k[kidx];
            double kacc = 0.0;
            for (Index i = rows.lo; i < rows.hi; ++i) {
              const Index y = i * static_cast<Index>(stride.h) + static_cast<Index>(a) -
                              static_cast<Index>(pad.h);
              const Index base =
                  y * static_cast<Index>(xs.w) + static_cast<Index>(b) - static_cast<Index>(pad.w);
              const double* grow = go + i * static_cast<Index>(oe.w);
              for (Index j = cols.lo; j < cols.hi; ++j) {
                kacc += grow[j] * src[base + j * sw];
                if (gsrc) gsrc[base + j * sw] += kv * grow[j];
              }
            }
            if (!gk.empty()) gk[kidx] += kacc;
          }
        }
      }
    }
  }
}

Extent2 crop_offset(Extent2 full, Extent2 out) { return {(full.h - out.h) / 2, (full.w - out.w) / 2}; }

Extent2 transposed_full_extent(const Shape& xs, const Shape& ks, Extent2 stride) {
  return {(xs.h - 1) * stride.h + ks.h, (xs.w - 1) * stride.w + ks.w};
}

void require_reachable(const Shape& xs, const Shape& ks, Extent2 stride, Extent2 out) {
  const Extent2 full = transposed_full_extent(xs, ks, stride);
  if (out.h == 0 || out.w == 0 || out.h > full.h || out.w > full.w) {
    std::ostringstream os;
    os << "transposed_conv2d: output " << out.h << "x" << out.w << " unreachable from input "
       << xs.str() << " with kernel " << ks.h << "x" << ks.w << " stride " << stride.h << "x"
       << stride.w << " (full extent " << full.h << "x" << full.w << ")";
    throw ShapeError(os.str());
  }
}

// out[n,o,y*s+a-off, x*s+b-off] += k[o,c,a,b] * in[n,c,y,x]
Tensor tconv_forward(const Tensor& x, const Tensor& k, const Tensor* bias, Extent2 stride,
                     Extent2 out_size) {
  require_channels("transposed_conv2d", x, k);
  require_bias("transposed_conv2d", k, bias);
  const Shape& xs = x.shape();
  const Shape& ks = k.shape();
  require_reachable(xs, ks, stride, out_size);
  const Extent2 off = crop_offset(transposed_full_extent(xs, ks, stride), out_size);
  Tensor out(Shape{xs.n, ks.n, out_size.h, out_size.w});
  const Index sw = static_cast<Index>(stride.w);
  for (std::size_t n = 0; n < xs.n; ++n) {
    for (std::size_t o = 0; o < ks.n; ++o) {
      double* dst = &out.at(n, o, 0, 0);
      if (bias) std::fill(dst, dst + out_size.h * out_size.w, (*bias)[o]);
      for (std::size_t c = 0; c < xs.c; ++c) {
        const double* src = &x.at(n, c, 0, 0);
        for (std::size_t a = 0; a < ks.h; ++a) {
          const Range rows = tap_range(xs.h, out_size.h, stride.h, a, off.h);
          for (std::size_t b = 0; b < ks.w; ++b) {
            const Range cols = tap_range(xs.w, out_size.w, stride.w, b, off.w);
            const double kv = k.at(o, c, a, b);
            for (Index y = rows.lo; y < rows.hi; ++y) {
              const Index oy =
                  y * static_cast<Index>(stride.h) + static_cast<Index>(a) - static_cast<Index>(off.h);
              const Index base = oy * static_cast<Index>(out_size.w) + static_cast<Index>(b) -
                                 static_cast<Index>(off.w);
              const double* srow = src + y * static_cast<Index>(xs.w);
              for (Index j = cols.lo; j < cols.hi; ++j) dst[base + j * sw] += kv * srow[j];
            }
          }
        }
      }
    }
  }
  return out;
}

void tconv_backward(const Tensor& x, const Tensor& k, Extent2 stride, Extent2 out_size,
                    std::span<const double> gout, std::span<double> gx, std::span<double> gk,
                    std::span<double> gbias) {
  const Shape& xs = x.shape();
  const Shape& ks = k.shape();
  const Extent2 off = crop_offset(transposed_full_extent(xs, ks, stride), out_size);
  const std::size_t plane = out_size.h * out_size.w;
  const Index sw = static_cast<Index>(stride.w);
  for (std::size_t n = 0; n < xs.n; ++n) {
    for (std::size_t o = 0; o < ks.n; ++o) {
      const double* go = gout.data() + (n * ks.n + o) * plane;
      if (!gbias.empty()) {
        double acc = 0.0;
        for (std::size_t q = 0; q < plane; ++q) acc += go[q];
        gbias[o] += acc;
      }
      for (std::size_t c = 0; c < xs.c; ++c) {
        const std::size_t xoff = x.offset(n, c, 0, 0);
        const double* src = x.data().data() + xoff;
        double* gsrc = gx.empty() ? nullptr : gx.data() + xoff;
        for (std::size_t a = 0; a < ks.h; ++a) {
          const Range rows = tap_range(xs.h, out_size.h, stride.h, a, off.h);
          for (std::size_t b = 0; b < ks.w; ++b) {
            const Range cols = tap_range(xs.w, out_size.w, stride.w, b, off.w);
            const std::size_t kidx = k.offset(o, c, a, b);
            const double kv = k[kidx];
            double kacc = 0.0;
            for (Index y = rows.lo; y < rows.hi; ++y) {
              const Index oy =
                  y * static_cast<Index>(stride.h) + static_cast<Index>(a) - static_cast<Index>(off.h);
              const Index gbase = oy * static_cast<Index>(out_size.w) + static_cast<Index>(b) -
                                  static_cast<Index>(off.w);
              const Index srow = y * static_cast<Index>(xs.w);
              for (Index j = cols.lo; j < cols.hi; ++j) {
                kacc += go[gbase + j * sw] * src[srow + j];
                if (gsrc) gsrc[srow + j] += kv * go[gbase + j * sw];
              }
            }
            if (!gk.empty()) gk[kidx] += kacc;
          }
        }
      }
    }
  }
}

double sigmoid_scalar(double x) {
  // exp argument stays well inside the finite range of double.
  const double z = std::clamp(x, -700.0, 700.0);
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void require_same_spatial(const char* op, const Tensor& a, const Tensor& b) {
  const Shape& x = a.shape();
  const Shape& y = b.shape();
  if (x.n != y.n || x.h != y.h || x.w != y.w) {
    throw ShapeError(std::string(op) + ": batch/spatial mismatch " + x.str() + " vs " + y.str());
  }
}

}  // namespace

void validate(const ConvParams& p) {
  const Shape& ks = p.kernel.shape();
  if (p.bias) require_bias("conv params", p.kernel, &*p.bias);
  if (p.stride.h == 0 || p.stride.w == 0) throw ShapeError("conv params: stride must be positive");
  if (p.padding.h >= ks.h || p.padding.w >= ks.w) {
    throw ShapeError("conv params: padding must be smaller than the kernel extent " + ks.str());
  }
}

Extent2 conv_output_extent(Extent2 in, Extent2 kernel, Extent2 stride, Extent2 padding) {
  if (stride.h == 0 || stride.w == 0) throw ShapeError("conv2d: stride must be positive");
  const std::size_t ph = in.h + 2 * padding.h;
  const std::size_t pw = in.w + 2 * padding.w;
  if (ph < kernel.h || pw < kernel.w) {
    std::ostringstream os;
    os << "conv2d: padded input " << ph << "x" << pw << " smaller than kernel " << kernel.h << "x"
       << kernel.w << " (empty output)";
    throw ShapeError(os.str());
  }
  return {(ph - kernel.h) / stride.h + 1, (pw - kernel.w) / stride.w + 1};
}

std::size_t upsample_kernel_side(std::size_t factor) {
  if (factor == 0) throw std::invalid_argument("upsampling factor must be positive");
  return 2 * factor - factor % 2;
}

Tensor bilinear_kernel(std::size_t factor) {
  const std::size_t side = upsample_kernel_side(factor);
  const double f = static_cast<double>((side + 1) / 2);
  const double center = side % 2 == 1 ? f - 1.0 : f - 0.5;
  Tensor k(Shape{1, 1, side, side});
  for (std::size_t a = 0; a < side; ++a) {
    for (std::size_t b = 0; b < side; ++b) {
      k.at(0, 0, a, b) = (1.0 - std::abs(static_cast<double>(a) - center) / f) *
                         (1.0 - std::abs(static_cast<double>(b) - center) / f);
    }
  }
  return k;
}

Tensor conv2d(const Tensor& input, const ConvParams& p) {
  validate(p);
  return conv_forward(input, p.kernel, p.bias ? &*p.bias : nullptr, p.stride, p.padding);
}

Tensor transposed_conv2d(const Tensor& input, const ConvParams& p, Extent2 output_size) {
  validate(p);
  return tconv_forward(input, p.kernel, p.bias ? &*p.bias : nullptr, p.stride, output_size);
}

PoolResult max_pool2d(const Tensor& input) {
  const Shape& s = input.shape();
  const std::size_t oh = (s.h + 1) / 2;
  const std::size_t ow = (s.w + 1) / 2;
  PoolResult r{Tensor(Shape{s.n, s.c, oh, ow}), {}};
  r.argmax.resize(r.output.numel());
  std::size_t q = 0;
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j, ++q) {
          std::size_t best = input.offset(n, c, 2 * i, 2 * j);
          for (std::size_t y = 2 * i; y < std::min(2 * i + 2, s.h); ++y) {
            for (std::size_t x = 2 * j; x < std::min(2 * j + 2, s.w); ++x) {
              const std::size_t at = input.offset(n, c, y, x);
              if (input[at] > input[best]) best = at;
            }
          }
          r.output[q] = input[best];
          r.argmax[q] = best;
        }
      }
    }
  }
  return r;
}

Tensor sigmoid(const Tensor& input) {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.numel(); ++i) out[i] = sigmoid_scalar(input[i]);
  return out;
}

Tensor relu(const Tensor& input) {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.numel(); ++i) out[i] = input[i] > 0.0 ? input[i] : 0.0;
  return out;
}

namespace {

// Multiplier per element: 0 for dropped, 1/(1-ratio) for kept. Empty means identity.
std::vector<double> dropout_mask(std::size_t count, double ratio, Mode mode, Rng& rng) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("dropout ratio must lie in [0, 1), got " + std::to_string(ratio));
  }
  if (mode == Mode::kInfer || ratio == 0.0) return {};
  const double scale = 1.0 / (1.0 - ratio);
  std::vector<double> mask(count);
  for (double& m : mask) m = rng.uniform() < ratio ? 0.0 : scale;
  return mask;
}

}  // namespace

Tensor dropout(const Tensor& input, double ratio, Mode mode, Rng& rng) {
  const std::vector<double> mask = dropout_mask(input.numel(), ratio, mode, rng);
  if (mask.empty()) return Tensor(input.shape(), input.values());
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.numel(); ++i) out[i] = input[i] * mask[i];
  return out;
}

Tensor concat_channels(std::span<const Tensor> inputs) {
  if (inputs.empty()) throw ShapeError("concat_channels: no inputs");
  std::size_t channels = 0;
  for (const Tensor& t : inputs) {
    require_same_spatial("concat_channels", inputs[0], t);
    channels += t.shape().c;
  }
  const Shape& s0 = inputs[0].shape();
  Tensor out(Shape{s0.n, channels, s0.h, s0.w});
  const std::size_t plane = s0.plane();
  for (std::size_t n = 0; n < s0.n; ++n) {
    std::size_t c0 = 0;
    for (const Tensor& t : inputs) {
      const std::size_t len = t.shape().c * plane;
      const double* src = &t.at(n, 0, 0, 0);
      std::copy(src, src + len, &out.at(n, c0, 0, 0));
      c0 += t.shape().c;
    }
  }
  return out;
}

Tensor slice_channels(const Tensor& input, std::size_t begin, std::size_t count) {
  const Shape& s = input.shape();
  if (count == 0 || begin + count > s.c) {
    throw ShapeError("slice_channels: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " + s.str());
  }
  Tensor out(Shape{s.n, count, s.h, s.w});
  for (std::size_t n = 0; n < s.n; ++n) {
    const double* src = &input.at(n, begin, 0, 0);
    std::copy(src, src + count * s.plane(), &out.at(n, 0, 0, 0));
  }
  return out;
}

// ---------------------------------------------------------------------------

Var conv2d(Graph& g, Var input, Var kernel, std::optional<Var> bias, Extent2 stride,
           Extent2 padding) {
  const Tensor& k = g.value(kernel);
  if (padding.h >= k.shape().h || padding.w >= k.shape().w) {
    throw ShapeError("conv2d: padding must be smaller than the kernel extent " + k.shape().str());
  }
  Tensor out = conv_forward(g.value(input), k, bias ? &g.value(*bias) : nullptr, stride, padding);
  std::vector<Var> ins{input, kernel};
  if (bias) ins.push_back(*bias);
  const bool has_bias = bias.has_value();
  return g.record(OpKind::kConv2d, std::move(ins), std::move(out),
                  [stride, padding, has_bias](BackwardContext& ctx) {
                    conv_backward(ctx.input(0), ctx.input(1), stride, padding, ctx.output_grad(),
                                  ctx.input_grad(0), ctx.input_grad(1),
                                  has_bias ? ctx.input_grad(2) : std::span<double>{});
                  });
}

Var transposed_conv2d(Graph& g, Var input, Var kernel, std::optional<Var> bias, Extent2 stride,
                      Extent2 output_size) {
  if (stride.h == 0 || stride.w == 0) throw ShapeError("transposed_conv2d: stride must be positive");
  Tensor out = tconv_forward(g.value(input), g.value(kernel), bias ? &g.value(*bias) : nullptr,
                             stride, output_size);
  std::vector<Var> ins{input, kernel};
  if (bias) ins.push_back(*bias);
  const bool has_bias = bias.has_value();
  return g.record(OpKind::kTransposedConv2d, std::move(ins), std::move(out),
                  [stride, output_size, has_bias](BackwardContext& ctx) {
                    tconv_backward(ctx.input(0), ctx.input(1), stride, output_size,
                                   ctx.output_grad(), ctx.input_grad(0), ctx.input_grad(1),
                                   has_bias ? ctx.input_grad(2) : std::span<double>{});
                  });
}

Var max_pool2d(Graph& g, Var input) {
  PoolResult r = max_pool2d(g.value(input));
  auto argmax = std::make_shared<const std::vector<std::size_t>>(std::move(r.argmax));
  return g.record(OpKind::kMaxPool2d, {input}, std::move(r.output),
                  [argmax](BackwardContext& ctx) {
                    const auto go = ctx.output_grad();
                    auto gi = ctx.input_grad(0);
                    for (std::size_t q = 0; q < go.size(); ++q) gi[(*argmax)[q]] += go[q];
                  });
}

Var sigmoid(Graph& g, Var input) {
  return g.record(OpKind::kSigmoid, {input}, sigmoid(g.value(input)), [](BackwardContext& ctx) {
    const auto go = ctx.output_grad();
    const Tensor& y = ctx.output();
    auto gi = ctx.input_grad(0);
    for (std::size_t q = 0; q < go.size(); ++q) gi[q] += go[q] * y[q] * (1.0 - y[q]);
  });
}

Var relu(Graph& g, Var input) {
  return g.record(OpKind::kRelu, {input}, relu(g.value(input)), [](BackwardContext& ctx) {
    const auto go = ctx.output_grad();
    const Tensor& x = ctx.input(0);
    auto gi = ctx.input_grad(0);
    for (std::size_t q = 0; q < go.size(); ++q) {
      if (x[q] > 0.0) gi[q] += go[q];
    }
  });
}

Var dropout(Graph& g, Var input, double ratio, Mode mode, Rng& rng) {
  const Tensor& x = g.value(input);
  auto mask = std::make_shared<const std::vector<double>>(dropout_mask(x.numel(), ratio, mode, rng));
  Tensor out(x.shape(), x.values());
  if (!mask->empty()) {
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= (*mask)[i];
  }
  return g.record(OpKind::kDropout, {input}, std::move(out), [mask](BackwardContext& ctx) {
    const auto go = ctx.output_grad();
    auto gi = ctx.input_grad(0);
    if (mask->empty()) {
      for (std::size_t q = 0; q < go.size(); ++q) gi[q] += go[q];
    } else {
      for (std::size_t q = 0; q < go.size(); ++q) gi[q] += go[q] * (*mask)[q];
    }
  });
}

Var concat_channels(Graph& g, std::span<const Var> inputs) {
  std::vector<Tensor> values;
  values.reserve(inputs.size());
  for (Var v : inputs) values.push_back(g.value(v));
  Tensor out = concat_channels(values);
  return g.record(OpKind::kConcatChannels, std::vector<Var>(inputs.begin(), inputs.end()),
                  std::move(out), [count = inputs.size()](BackwardContext& ctx) {
                    const Shape& os = ctx.output().shape();
                    const auto go = ctx.output_grad();
                    const std::size_t plane = os.plane();
                    std::size_t c0 = 0;
                    for (std::size_t k = 0; k < count; ++k) {
                      const std::size_t ck = ctx.input(k).shape().c;
                      auto gi = ctx.input_grad(k);
                      for (std::size_t n = 0; n < os.n; ++n) {
                        const double* src = go.data() + (n * os.c + c0) * plane;
                        double* dst = gi.data() + n * ck * plane;
                        for (std::size_t q = 0; q < ck * plane; ++q) dst[q] += src[q];
                      }
                      c0 += ck;
                    }
                  });
}

Var slice_channels(Graph& g, Var input, std::size_t begin, std::size_t count) {
  Tensor out = slice_channels(g.value(input), begin, count);
  return g.record(OpKind::kSliceChannels, {input}, std::move(out),
                  [begin, count](BackwardContext& ctx) {
                    const Shape& is = ctx.input(0).shape();
                    const auto go = ctx.output_grad();
                    auto gi = ctx.input_grad(0);
                    const std::size_t len = count * is.plane();
                    for (std::size_t n = 0; n < is.n; ++n) {
                      double* dst = gi.data() + (n * is.c + begin) * is.plane();
                      const double* src = go.data() + n * len;
                      for (std::size_t q = 0; q < len; ++q) dst[q] += src[q];
                    }
                  });
}

Var add(Graph& g, Var a, Var b) {
  const Tensor& x = g.value(a);
  const Tensor& y = g.value(b);
  if (x.shape() != y.shape()) throw ShapeError("add: " + x.shape().str() + " vs " + y.shape().str());
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = x[i] + y[i];
  return g.record(OpKind::kAdd, {a, b}, std::move(out), [](BackwardContext& ctx) {
    const auto go = ctx.output_grad();
    for (std::size_t k = 0; k < 2; ++k) {
      auto gi = ctx.input_grad(k);
      for (std::size_t q = 0; q < go.size(); ++q) gi[q] += go[q];
    }
  });
}

Var sum(Graph& g, Var input) {
  const Tensor& x = g.value(input);
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return g.record(OpKind::kSum, {input}, Tensor(Shape{1, 1, 1, 1}, acc), [](BackwardContext& ctx) {
    const double go = ctx.output_grad()[0];
    for (double& v : ctx.input_grad(0)) v += go;
  });
}

}  // namespace dsrcnn
