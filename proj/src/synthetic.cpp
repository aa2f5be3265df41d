#include "dsrcnn/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace dsrcnn {
namespace {

using Rgb = std::array<double, 3>;

Rgb random_colour(Rng& rng) { return {rng.uniform(0.0, 255.0), rng.uniform(0.0, 255.0), rng.uniform(0.0, 255.0)}; }

double distance(const Rgb& a, const Rgb& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double cross(double ax, double ay, double bx, double by, double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

}  // namespace

SyntheticPair make_synthetic_pair(std::size_t height, std::size_t width, Rng& rng) {
  const double h = static_cast<double>(height);
  const double w = static_cast<double>(width);
  const Rgb background = random_colour(rng);
  Rgb foreground = random_colour(rng);
  while (distance(foreground, background) < 160.0) foreground = random_colour(rng);

  const std::size_t kind = rng.index(3);
  // Bounding box covering 30-60% of each side, fully inside the frame.
  const double bh = h * rng.uniform(0.3, 0.6);
  const double bw = w * rng.uniform(0.3, 0.6);
  const double top = rng.uniform(1.0, h - bh - 1.0);
  const double left = rng.uniform(1.0, w - bw - 1.0);
  const double apex = rng.uniform(left, left + bw);

  SyntheticPair pair;
  pair.image = Image{height, width, 3, std::vector<std::uint8_t>(height * width * 3)};
  pair.mask = Image{height, width, 1, std::vector<std::uint8_t>(height * width)};
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double py = static_cast<double>(y) + 0.5;
      const double px = static_cast<double>(x) + 0.5;
      bool inside = false;
      switch (kind) {
        case 0:
          inside = py >= top && py < top + bh && px >= left && px < left + bw;
          break;
        case 1: {
          const double dy = (py - (top + bh / 2)) / (bh / 2);
          const double dx = (px - (left + bw / 2)) / (bw / 2);
          inside = dx * dx + dy * dy <= 1.0;
          break;
        }
        default: {
          const double c1 = cross(apex, top, left, top + bh, px, py);
          const double c2 = cross(left, top + bh, left + bw, top + bh, px, py);
          const double c3 = cross(left + bw, top + bh, apex, top, px, py);
          inside = (c1 <= 0 && c2 <= 0 && c3 <= 0) || (c1 >= 0 && c2 >= 0 && c3 >= 0);
        }
      }
      const Rgb& base = inside ? foreground : background;
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::clamp(base[c] + rng.uniform(-12.0, 12.0), 0.0, 255.0);
        pair.image.pixels[(y * width + x) * 3 + c] = static_cast<std::uint8_t>(std::lround(v));
      }
      pair.mask.pixels[y * width + x] = inside ? 255 : 0;
    }
  }
  return pair;
}

std::vector<SyntheticPair> make_synthetic_corpus(std::size_t count, std::size_t height, std::size_t width,
                                                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SyntheticPair> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(make_synthetic_pair(height, width, rng));
    char name[32];
    std::snprintf(name, sizeof name, "synth_%03zu", i);
    out.back().name = name;
  }
  return out;
}

}  // namespace dsrcnn
