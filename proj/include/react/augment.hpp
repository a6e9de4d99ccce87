#pragma once

// Training-time view augmentation.
//
// Patch mode treats a descriptor as a row-major h x w x c raster (index
// (y * w + x) * c + ch): random horizontal flip, then rotation about the raster
// centre by an angle drawn uniformly from [-max_rotation, max_rotation]
// degrees, resampled bilinearly with zero fill outside the source.
// Abstract mode adds Gaussian jitter and random coordinate dropout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <span>
#include <string>

#include "react/common.hpp"

namespace react {

enum class AugmentMode { none, abstract, patch };

struct AugmentConfig {
  AugmentMode mode = AugmentMode::abstract;
  // patch mode
  std::size_t patch_height = 8;
  std::size_t patch_width = 8;
  std::size_t patch_channels = 3;
  double flip_probability = 0.5;
  double max_rotation_deg = 10.0;
  // abstract mode
  double jitter = 0.1;
  double dropout = 0.05;

  void validate() const {
    if (!(max_rotation_deg >= 0.0) || !(flip_probability >= 0.0) ||
        !(flip_probability <= 1.0) || !(jitter >= 0.0) || !(dropout >= 0.0) ||
        !(dropout < 1.0))
      throw Error(ErrorKind::validation, "AugmentConfig: invalid parameter");
  }
};

inline void check_patch(std::span<const double> patch, std::size_t h,
                        std::size_t w, std::size_t c) {
  if (h * w * c != patch.size() || h == 0 || w == 0 || c == 0)
    throw Error(ErrorKind::dimension,
                "patch dims " + std::to_string(h) + "x" + std::to_string(w) +
                    "x" + std::to_string(c) + " inconsistent with length " +
                    std::to_string(patch.size()));
}

inline Vector flip_horizontal(std::span<const double> patch, std::size_t h,
                              std::size_t w, std::size_t c) {
  check_patch(patch, h, w, c);
  Vector out(patch.size());
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t ch = 0; ch < c; ++ch)
        out[(y * w + x) * c + ch] = patch[(y * w + (w - 1 - x)) * c + ch];
  return out;
}

/// Rotation by `degrees` about ((w-1)/2, (h-1)/2): output (x, y) samples the
/// source at the inverse-rotated coordinate.
inline Vector rotate_bilinear(std::span<const double> patch, std::size_t h,
                              std::size_t w, std::size_t c, double degrees) {
  check_patch(patch, h, w, c);
  const double theta = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  const double max_x = static_cast<double>(w) - 1.0;
  const double max_y = static_cast<double>(h) - 1.0;
  constexpr double kEdge = 1e-9;

  Vector out(patch.size(), 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      double sx = cx + cs * dx + sn * dy;
      double sy = cy - sn * dx + cs * dy;
      if (sx < -kEdge || sy < -kEdge || sx > max_x + kEdge || sy > max_y + kEdge)
        continue;
      sx = std::clamp(sx, 0.0, max_x);
      sy = std::clamp(sy, 0.0, max_y);
      const auto x0 = static_cast<std::size_t>(std::floor(sx));
      const auto y0 = static_cast<std::size_t>(std::floor(sy));
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const std::size_t y1 = std::min(y0 + 1, h - 1);
      const double fx = sx - static_cast<double>(x0);
      const double fy = sy - static_cast<double>(y0);
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double v00 = patch[(y0 * w + x0) * c + ch];
        const double v01 = patch[(y0 * w + x1) * c + ch];
        const double v10 = patch[(y1 * w + x0) * c + ch];
        const double v11 = patch[(y1 * w + x1) * c + ch];
        out[(y * w + x) * c + ch] = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                    fy * ((1 - fx) * v10 + fx * v11);
      }
    }
  }
  return out;
}

template <typename Rng>
Vector augment(std::span<const double> descriptor, const AugmentConfig& config,
               Rng& rng) {
  switch (config.mode) {
    case AugmentMode::none:
      return Vector(descriptor.begin(), descriptor.end());
    case AugmentMode::patch: {
      const auto h = config.patch_height, w = config.patch_width,
                 c = config.patch_channels;
      check_patch(descriptor, h, w, c);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      std::uniform_real_distribution<double> angle(-config.max_rotation_deg,
                                                   config.max_rotation_deg);
      const bool flip = unit(rng) < config.flip_probability;
      const double degrees = angle(rng);
      Vector v = flip ? flip_horizontal(descriptor, h, w, c)
                      : Vector(descriptor.begin(), descriptor.end());
      return rotate_bilinear(v, h, w, c, degrees);
    }
    case AugmentMode::abstract: {
      Vector v(descriptor.begin(), descriptor.end());
      std::normal_distribution<double> noise(0.0, 1.0);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (double& x : v) {
        x += config.jitter * noise(rng);
        if (unit(rng) < config.dropout) x = 0.0;
      }
      return v;
    }
  }
  return Vector(descriptor.begin(), descriptor.end());
}

}  // namespace react
