#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dsrcnn/image_io.hpp"
#include "dsrcnn/rng.hpp"

namespace dsrcnn {

/// One RGB image with a single salient shape (rectangle, ellipse or
/// triangle) painted in a colour well separated from the background, plus
/// its exact mask (255 = foreground).
struct SyntheticPair {
  std::string name;
  Image image;
  Image mask;
};

SyntheticPair make_synthetic_pair(std::size_t height, std::size_t width, Rng& rng);

/// Names are "synth_000", "synth_001", ...
std::vector<SyntheticPair> make_synthetic_corpus(std::size_t count, std::size_t height, std::size_t width,
                                                 std::uint64_t seed);

}  // namespace dsrcnn
