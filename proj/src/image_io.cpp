#include "dsrcnn/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace dsrcnn {
namespace {

std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

Image read_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw ImageError(path.string() + ": " + img.message);
  }
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Image out;
  out.height = img.height;
  out.width = img.width;
  out.channels = color ? 3 : 1;
  out.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw ImageError(path.string() + ": " + msg);
  }
  return out;
}

// Netpbm: P2/P5 gray, P3/P6 color, maxval up to 255.
Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError(path.string() + ": cannot open");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  auto skip = [&] {
    while (pos < data.size()) {
      if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&]() -> std::size_t {
    skip();
    std::size_t v = 0;
    bool any = false;
    while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) {
      v = v * 10 + static_cast<std::size_t>(data[pos++] - '0');
      any = true;
    }
    if (!any) throw ImageError(path.string() + ": malformed netpbm header");
    return v;
  };
  if (data.size() < 2 || data[0] != 'P') throw ImageError(path.string() + ": not a netpbm file");
  const char kind = data[1];
  if (kind != '2' && kind != '3' && kind != '5' && kind != '6') {
    throw ImageError(path.string() + ": unsupported netpbm variant P" + std::string(1, kind));
  }
  pos = 2;
  Image out;
  out.width = number();
  out.height = number();
  const std::size_t maxval = number();
  if (maxval == 0 || maxval > 255) throw ImageError(path.string() + ": only 8-bit netpbm is supported");
  out.channels = (kind == '3' || kind == '6') ? 3 : 1;
  const std::size_t count = out.width * out.height * out.channels;
  if (count == 0) throw ImageError(path.string() + ": empty image");
  out.pixels.resize(count);
  auto rescale = [maxval](std::size_t v) {
    return static_cast<std::uint8_t>(std::min<std::size_t>(255, (v * 255 + maxval / 2) / maxval));
  };
  if (kind == '5' || kind == '6') {
    ++pos;  // single whitespace after maxval
    if (data.size() - std::min(pos, data.size()) < count) throw ImageError(path.string() + ": truncated pixel data");
    for (std::size_t i = 0; i < count; ++i) out.pixels[i] = rescale(static_cast<unsigned char>(data[pos + i]));
  } else {
    for (std::size_t i = 0; i < count; ++i) out.pixels[i] = rescale(number());
  }
  return out;
}

double gray_at(const Image& image, std::size_t i) {
  if (image.channels == 1) return image.pixels[i];
  double acc = 0.0;
  for (std::size_t c = 0; c < image.channels; ++c) acc += image.pixels[i * image.channels + c];
  return acc / static_cast<double>(image.channels);
}

}  // namespace

bool is_image_file(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

Image read_image(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  Image img;
  if (ext == ".png") {
    img = read_png(path);
  } else if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
    img = read_pnm(path);
  } else {
    throw ImageError(path.string() + ": unsupported image extension");
  }
  if (img.width == 0 || img.height == 0) throw ImageError(path.string() + ": empty image");
  return img;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) throw ImageError("write_png: need 1 or 3 channels");
  if (image.pixels.size() != image.width * image.height * image.channels) {
    throw ImageError("write_png: pixel buffer does not match size");
  }
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
    throw ImageError(path.string() + ": " + img.message);
  }
}

Tensor image_to_tensor(const Image& image, std::size_t channels) {
  if (channels == 0) throw std::invalid_argument("image_to_tensor: zero channels");
  Tensor t(Shape{1, channels, image.height, image.width});
  const std::size_t plane = image.height * image.width;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      double v;
      if (image.channels == channels) {
        v = image.pixels[i * image.channels + c];
      } else if (image.channels == 1) {
        v = image.pixels[i];
      } else {
        v = gray_at(image, i);
      }
      t[c * plane + i] = v / 255.0 - 0.5;
    }
  }
  return t;
}

GroundTruthMask image_to_mask(const Image& image) {
  GroundTruthMask m(image.height, image.width);
  for (std::size_t i = 0; i < m.size(); ++i) m.values[i] = gray_at(image, i) >= 128.0 ? 1 : 0;
  return m;
}

SaliencyMap image_to_map(const Image& image) {
  SaliencyMap m(image.height, image.width);
  for (std::size_t i = 0; i < m.size(); ++i) m.values[i] = gray_at(image, i) / 255.0;
  return m;
}

Image map_to_image(const SaliencyMap& map) {
  Image img{map.height, map.width, 1, std::vector<std::uint8_t>(map.size())};
  for (std::size_t i = 0; i < map.size(); ++i) {
    const double v = std::floor(std::clamp(map.values[i], 0.0, 1.0) * 255.0 + 0.5);
    img.pixels[i] = static_cast<std::uint8_t>(std::min(v, 255.0));
  }
  return img;
}

}  // namespace dsrcnn
