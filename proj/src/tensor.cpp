#include "dsrcnn/tensor.hpp"

#include <cmath>
#include <sstream>

#include "dsrcnn/rng.hpp"

namespace dsrcnn {

std::string Shape::str() const {
  std::ostringstream os;
  os << '(' << n << ", " << c << ", " << h << ", " << w << ')';
  return os.str();
}

void require_valid(const Shape& shape) {
  if (shape.n == 0 || shape.c == 0 || shape.h == 0 || shape.w == 0) {
    throw ShapeError("tensor extents must be positive, got " + shape.str());
  }
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape) {
  require_valid(shape_);
  data_.assign(shape_.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(shape), data_(std::move(values)) {
  require_valid(shape_);
  if (data_.size() != shape_.numel()) {
    std::ostringstream os;
    os << "tensor of shape " << shape_.str() << " needs " << shape_.numel() << " values, got "
       << data_.size();
    throw ShapeError(os.str());
  }
}

std::span<double> Tensor::grad() {
  if (!grad_) grad_.emplace(data_.size(), 0.0);
  return *grad_;
}

std::span<const double> Tensor::grad() const {
  if (!grad_) throw std::logic_error("tensor has no gradient slot");
  return *grad_;
}

void Tensor::zero_grad() { grad_.emplace(data_.size(), 0.0); }

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  if (grad_) {
    for (double v : *grad_) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

double dot(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("dot: shape " + a.shape().str() + " vs " + b.shape().str());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) acc += a[i] * b[i];
  return acc;
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::index on empty range");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % bound);
}

}  // namespace dsrcnn
