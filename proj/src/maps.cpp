#include "dsrcnn/maps.hpp"

#include <algorithm>
#include <sstream>
#include <string>

namespace dsrcnn {

SaliencyMap::SaliencyMap(std::size_t h, std::size_t w, std::vector<double> v)
    : height(h), width(w), values(std::move(v)) {
  if (values.size() != h * w) throw ShapeError("saliency map: value count does not match size");
}

GroundTruthMask::GroundTruthMask(std::size_t h, std::size_t w, std::vector<std::uint8_t> v)
    : height(h), width(w), values(std::move(v)) {
  if (values.size() != h * w) throw ShapeError("mask: value count does not match size");
  for (auto& b : values) b = b ? 1 : 0;
}

std::size_t GroundTruthMask::foreground() const {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](std::uint8_t b) { return b != 0; }));
}

namespace {

template <class A, class B>
void check(const char* op, const A& a, const B& b) {
  if (a.height != b.height || a.width != b.width) {
    std::ostringstream os;
    os << op << ": size mismatch " << a.height << "x" << a.width << " vs " << b.height << "x"
       << b.width;
    throw ShapeError(os.str());
  }
}

}  // namespace

void require_same_size(const char* op, const SaliencyMap& map, const GroundTruthMask& gt) {
  check(op, map, gt);
}

void require_same_size(const char* op, const GroundTruthMask& a, const GroundTruthMask& b) {
  check(op, a, b);
}

SaliencyMap to_map(const Tensor& t) {
  const Shape& s = t.shape();
  if (s.n != 1 || s.c != 1) throw ShapeError("to_map: expected (1, 1, h, w), got " + s.str());
  return SaliencyMap(s.h, s.w, t.values());
}

Tensor to_tensor(const SaliencyMap& m) { return Tensor(Shape{1, 1, m.height, m.width}, m.values); }

SaliencyMap as_map(const GroundTruthMask& gt) {
  SaliencyMap m(gt.height, gt.width);
  for (std::size_t i = 0; i < gt.size(); ++i) m.values[i] = gt.values[i] ? 1.0 : 0.0;
  return m;
}

}  // namespace dsrcnn
