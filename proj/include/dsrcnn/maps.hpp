#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dsrcnn/tensor.hpp"

namespace dsrcnn {

/// Single-channel real map with values in [0, 1], row-major.
struct SaliencyMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  SaliencyMap() = default;
  SaliencyMap(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), values(h * w, fill) {}
  SaliencyMap(std::size_t h, std::size_t w, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  double& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
};

/// Binary {0, 1} mask, row-major.
struct GroundTruthMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> values;

  GroundTruthMask() = default;
  GroundTruthMask(std::size_t h, std::size_t w, std::uint8_t fill = 0)
      : height(h), width(w), values(h * w, fill) {}
  GroundTruthMask(std::size_t h, std::size_t w, std::vector<std::uint8_t> v);

  std::size_t size() const { return values.size(); }
  std::size_t foreground() const;
  bool at(std::size_t y, std::size_t x) const { return values[y * width + x] != 0; }
};

/// Throws ShapeError unless both have identical height and width.
void require_same_size(const char* op, const SaliencyMap& map, const GroundTruthMask& gt);
void require_same_size(const char* op, const GroundTruthMask& a, const GroundTruthMask& b);

/// Copies a (1, 1, h, w) tensor.
SaliencyMap to_map(const Tensor& t);
Tensor to_tensor(const SaliencyMap& m);

/// Mask values as a real map (0.0 / 1.0).
SaliencyMap as_map(const GroundTruthMask& gt);

}  // namespace dsrcnn
