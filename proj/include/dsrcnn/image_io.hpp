#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "dsrcnn/maps.hpp"
#include "dsrcnn/tensor.hpp"

namespace dsrcnn {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8-bit image, interleaved channels (1 = gray, 3 = RGB).
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> pixels;
};

/// PNG (any bit depth / color type, alpha dropped) or binary/ASCII PGM/PPM.
Image read_image(const std::filesystem::path& path);

/// 8-bit gray or RGB PNG.
void write_png(const std::filesystem::path& path, const Image& image);

bool is_image_file(const std::filesystem::path& path);

/// (1, channels, h, w) tensor with pixels scaled to [-0.5, 0.5]. Gray inputs
/// are replicated to three channels; RGB is averaged down to one.
Tensor image_to_tensor(const Image& image, std::size_t channels);

/// Pixels >= 128 are foreground; RGB is averaged first.
GroundTruthMask image_to_mask(const Image& image);

/// value / 255 of the gray (or channel-averaged) image.
SaliencyMap image_to_map(const Image& image);

/// round-half-up of 255 * value, one channel.
Image map_to_image(const SaliencyMap& map);

}  // namespace dsrcnn
