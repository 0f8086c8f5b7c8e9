#pragma once

// Procedural indoor-like scenes for tests and sweeps: a slanted back wall,
// a floor, and a few fronto-parallel or tilted boxes. All pixels are valid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dtof/core.hpp"
#include "dtof/rng.hpp"

namespace dtof::testing {

/// Back-wall depth range in metres. The default gives room depths typical of
/// indoor RGB-D captures (mean around 3 m).
struct SceneDepth {
  double wall_min = 2.5;
  double wall_max = 5.0;
};

inline DenseDepthMap make_scene(std::uint64_t seed, int height = 480, int width = 640, SceneDepth depth_range = {}) {
  Rng rng(Rng::splitmix64(seed ^ 0x5ce7e5ce7e5ce7eULL));
  const double wall = rng.uniform(depth_range.wall_min, depth_range.wall_max);
  const double wall_tilt = rng.uniform(-1.2, 1.2);  // depth change across the width
  const double horizon = rng.uniform(0.55, 0.7);    // floor starts below this row fraction

  struct Box {
    double top, left, bottom, right, depth, tilt_x, tilt_y;
  };
  std::vector<Box> boxes;
  const int box_count = static_cast<int>(rng.uniform_int(2, 4));
  for (int b = 0; b < box_count; ++b) {
    Box box{};
    box.top = rng.uniform(0.1, 0.6);
    box.left = rng.uniform(0.05, 0.7);
    box.bottom = std::min(0.98, box.top + rng.uniform(0.15, 0.4));
    box.right = std::min(0.98, box.left + rng.uniform(0.12, 0.35));
    box.depth = rng.uniform(1.2, std::min(3.2, wall - 0.3));
    box.tilt_x = rng.uniform(-0.4, 0.4);
    box.tilt_y = rng.uniform(-0.3, 0.3);
    boxes.push_back(box);
  }

  DenseDepthMap gt(height, width);
  for (int row = 0; row < height; ++row) {
    const double y = (row + 0.5) / height;
    for (int col = 0; col < width; ++col) {
      const double x = (col + 0.5) / width;
      double depth = wall + wall_tilt * (x - 0.5);
      if (y > horizon) {
        const double floor_depth = 1.0 + (wall - 1.0) * (1.0 - (y - horizon) / (1.0 - horizon)) * 0.9;
        depth = std::min(depth, floor_depth);
      }
      for (const Box& box : boxes) {
        if (y >= box.top && y < box.bottom && x >= box.left && x < box.right) {
          const double d = box.depth + box.tilt_x * (x - box.left) + box.tilt_y * (y - box.top);
          depth = std::min(depth, d);
        }
      }
      gt.set(row, col, depth);
    }
  }
  return gt;
}

/// Monocular stand-in: affine inverse depth of GT (scale 0.7, shift 0.05)
/// times a smooth multiplicative distortion of the given amplitude. With
/// zero distortion the result is a strictly decreasing function of depth.
inline RelativeDepthMap make_inverse_relative(const DenseDepthMap& gt, double distortion = 0.0,
                                              std::uint64_t seed = 0) {
  Rng rng(Rng::splitmix64(seed ^ 0xd157u));
  const double fx = rng.uniform(1.0, 3.0), fy = rng.uniform(1.0, 3.0);
  const double phase = rng.uniform(0.0, 6.28);
  std::vector<double> v(gt.size());
  for (int row = 0; row < gt.height(); ++row) {
    for (int col = 0; col < gt.width(); ++col) {
      const double x = static_cast<double>(col) / gt.width(), y = static_cast<double>(row) / gt.height();
      const double warp = 1.0 + distortion * std::sin(fx * 6.28 * x + phase) * std::cos(fy * 6.28 * y);
      const std::size_t i = static_cast<std::size_t>(row) * gt.width() + col;
      v[i] = gt.valid(i) ? (0.7 / gt[i] + 0.05) * warp : 0.0;
    }
  }
  return RelativeDepthMap(gt.height(), gt.width(), std::move(v), Orientation::kInverseDepth);
}

}  // namespace dtof::testing
