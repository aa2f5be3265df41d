#pragma once

// Slow, direct reference computations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dsrcnn/maps.hpp"

namespace dsrcnn::oracle {

struct Counts {
  double tp = 0, fp = 0, fn = 0;
};

inline Counts count(const GroundTruthMask& pred, const GroundTruthMask& gt) {
  Counts c;
  for (std::size_t y = 0; y < gt.height; ++y) {
    for (std::size_t x = 0; x < gt.width; ++x) {
      const bool p = pred.at(y, x), g = gt.at(y, x);
      if (p && g) c.tp += 1;
      if (p && !g) c.fp += 1;
      if (!p && g) c.fn += 1;
    }
  }
  return c;
}

// Between-class variance of splitting the 8-bit levels at k, from the pixel list.
inline double split_variance(const SaliencyMap& map, std::size_t k) {
  double n0 = 0, n1 = 0, s0 = 0, s1 = 0;
  for (double v : map.values) {
    const double level = std::floor(v * 255.0 + 0.5);
    if (level < static_cast<double>(k)) {
      n0 += 1;
      s0 += level;
    } else {
      n1 += 1;
      s1 += level;
    }
  }
  if (n0 == 0 || n1 == 0) return 0.0;
  const double n = n0 + n1, d = s0 / n0 - s1 / n1;
  return (n0 / n) * (n1 / n) * d * d;
}

struct BruteDistance {
  std::vector<long> sq;
  std::vector<std::size_t> nearest;
};

// All pairs; ties go to the smallest column, then the smallest row.
inline BruteDistance brute_distance(const GroundTruthMask& gt) {
  BruteDistance b{std::vector<long>(gt.size(), std::numeric_limits<long>::max()), std::vector<std::size_t>(gt.size())};
  for (std::size_t y = 0; y < gt.height; ++y) {
    for (std::size_t x = 0; x < gt.width; ++x) {
      const std::size_t i = y * gt.width + x;
      for (std::size_t fx = 0; fx < gt.width; ++fx) {
        for (std::size_t fy = 0; fy < gt.height; ++fy) {
          if (!gt.at(fy, fx)) continue;
          const long dy = static_cast<long>(fy) - static_cast<long>(y), dx = static_cast<long>(fx) - static_cast<long>(x);
          if (dy * dy + dx * dx < b.sq[i]) {
            b.sq[i] = dy * dy + dx * dx;
            b.nearest[i] = fy * gt.width + fx;
          }
        }
      }
    }
  }
  return b;
}

inline double naive_weighted_f(const SaliencyMap& map, const GroundTruthMask& gt) {
  const long h = static_cast<long>(gt.height), w = static_cast<long>(gt.width);
  const BruteDistance bd = brute_distance(gt);
  std::vector<double> e(gt.size()), spread(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) e[i] = std::fabs(map.values[i] - gt.values[i]);
  for (std::size_t i = 0; i < gt.size(); ++i) spread[i] = gt.values[i] ? e[i] : e[bd.nearest[i]];
  double norm = 0;
  for (int a = -3; a <= 3; ++a)
    for (int b = -3; b <= 3; ++b) norm += std::exp(-(a * a + b * b) / 50.0);
  double fg_err = 0, bg_err = 0, fg = 0;
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y * w + x);
      if (gt.values[i]) {
        double s = 0;
        for (int a = -3; a <= 3; ++a) {
          for (int b = -3; b <= 3; ++b) {
            const long yy = std::min(std::max(y + a, 0L), h - 1), xx = std::min(std::max(x + b, 0L), w - 1);
            s += std::exp(-(a * a + b * b) / 50.0) / norm * spread[yy * w + xx];
          }
        }
        fg_err += std::min(e[i], s);
        fg += 1;
      } else {
        bg_err += e[i] * (2.0 - std::pow(0.5, std::sqrt(static_cast<double>(bd.sq[i])) / 5.0));
      }
    }
  }
  const double eps = std::numeric_limits<double>::epsilon();
  const double tp = fg - fg_err, r = 1.0 - fg_err / fg, p = tp / (eps + tp + bg_err);
  return 2.0 * r * p / (eps + r + p);
}

}  // namespace dsrcnn::oracle
