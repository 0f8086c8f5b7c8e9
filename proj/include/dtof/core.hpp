#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dtof/error.hpp"

namespace dtof {

/// Per-pixel boolean mask, row-major.
class PixelMask {
 public:
  PixelMask() = default;
  PixelMask(int height, int width, bool fill = false)
      : height_(height), width_(width), bits_(checked_size(height, width), fill ? 1 : 0) {}

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool operator()(int row, int col) const { return bits_[index(row, col)] != 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(int row, int col, bool v) { bits_[index(row, col)] = v ? 1 : 0; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }

  PixelMask complement() const {
    PixelMask out = *this;
    for (auto& b : out.bits_) b = b ? 0 : 1;
    return out;
  }

  bool operator==(const PixelMask&) const = default;

  static std::size_t checked_size(int height, int width) {
    if (height < 1 || width < 1) {
      throw DataError("image dimensions must be positive, got " + std::to_string(height) + "x" +
                      std::to_string(width));
    }
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Metric depth image with a validity mask. Invalid pixels hold exactly 0.
class DenseDepthMap {
 public:
  DenseDepthMap() = default;

  /// All pixels start invalid.
  DenseDepthMap(int height, int width)
      : height_(height),
        width_(width),
        values_(PixelMask::checked_size(height, width), 0.0),
        valid_(height, width, false) {}

  /// Pixels with a finite positive value become valid; everything else is
  /// stored as the 0 sentinel.
  static DenseDepthMap from_values(int height, int width, std::span<const double> values) {
    DenseDepthMap map(height, width);
    if (values.size() != map.values_.size()) {
      throw DataError("depth buffer has " + std::to_string(values.size()) + " entries, expected " +
                      std::to_string(map.values_.size()));
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (std::isfinite(values[i]) && values[i] > 0.0) {
        map.values_[i] = values[i];
        map.valid_.set(i, true);
      }
    }
    return map;
  }

  static DenseDepthMap constant(int height, int width, double depth) {
    DenseDepthMap map(height, width);
    for (std::size_t i = 0; i < map.values_.size(); ++i) map.set(i, depth);
    return map;
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator()(int row, int col) const { return values_[index(row, col)]; }
  double operator[](std::size_t i) const { return values_[i]; }
  bool valid(int row, int col) const { return valid_(row, col); }
  bool valid(std::size_t i) const { return valid_[i]; }

  /// Nonpositive or non-finite depths invalidate the pixel.
  void set(int row, int col, double depth) { set(index(row, col), depth); }
  void set(std::size_t i, double depth) {
    const bool ok = std::isfinite(depth) && depth > 0.0;
    values_[i] = ok ? depth : 0.0;
    valid_.set(i, ok);
  }
  void invalidate(std::size_t i) { set(i, 0.0); }

  const std::vector<double>& values() const noexcept { return values_; }
  const PixelMask& valid_mask() const noexcept { return valid_; }
  std::size_t valid_count() const noexcept { return valid_.count(); }

  bool in_bounds(int row, int col) const noexcept {
    return row >= 0 && col >= 0 && row < height_ && col < width_;
  }

  bool operator==(const DenseDepthMap&) const = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
  PixelMask valid_;
};

enum class Orientation { kDepthLike, kInverseDepth };

/// Guard added before reciprocating inverse-depth samples.
inline constexpr double kInverseGuard = 1e-6;

/// Unitless monocular prediction. Values are finite and nonnegative.
class RelativeDepthMap {
 public:
  RelativeDepthMap() = default;

  RelativeDepthMap(int height, int width, std::vector<double> values, Orientation orientation)
      : height_(height), width_(width), values_(std::move(values)), orientation_(orientation) {
    const std::size_t expected = PixelMask::checked_size(height, width);
    if (values_.size() != expected) {
      throw DataError("relative depth buffer has " + std::to_string(values_.size()) +
                      " entries, expected " + std::to_string(expected));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i]) || values_[i] < 0.0) {
        throw DataError("relative depth at pixel " + std::to_string(i) +
                        " is not finite and nonnegative");
      }
    }
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  Orientation orientation() const noexcept { return orientation_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double operator()(int row, int col) const {
    return values_[static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
                   static_cast<std::size_t>(col)];
  }

  /// Sample in depth-like orientation (larger = farther).
  double depth_like(int row, int col) const {
    const double v = (*this)(row, col);
    return orientation_ == Orientation::kInverseDepth ? 1.0 / (v + kInverseGuard) : v;
  }

  bool in_bounds(int row, int col) const noexcept {
    return row >= 0 && col >= 0 && row < height_ && col < width_;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
  Orientation orientation_ = Orientation::kDepthLike;
};

struct NormalizedCoord {
  double x = 0.0;  // col / width
  double y = 0.0;  // row / height

  bool operator==(const NormalizedCoord&) const = default;
};

inline NormalizedCoord normalize_coords(int row, int col, int height, int width) {
  return {static_cast<double>(col) / static_cast<double>(width),
          static_cast<double>(row) / static_cast<double>(height)};
}

struct DepthPoint {
  int row = 0;
  int col = 0;
  double d = 0.0;  // sensor depth, meters
  double r = 0.0;  // relative depth, depth-like orientation
  NormalizedCoord p;

  bool operator==(const DepthPoint&) const = default;
};

/// Row-major ordered set of sparse depth points, unique per pixel.
class SparsePointSet {
 public:
  SparsePointSet() = default;

  /// Sorts the points, recomputes their normalized coordinates, and rejects
  /// duplicates, out-of-range pixels and nonpositive depths.
  SparsePointSet(std::vector<DepthPoint> points, int source_height, int source_width)
      : points_(std::move(points)), height_(source_height), width_(source_width) {
    PixelMask::checked_size(source_height, source_width);
    std::stable_sort(points_.begin(), points_.end(), row_major_less);
    for (std::size_t i = 0; i < points_.size(); ++i) {
      DepthPoint& pt = points_[i];
      if (pt.row < 0 || pt.col < 0 || pt.row >= height_ || pt.col >= width_) {
        throw DataError("point (" + std::to_string(pt.row) + ", " + std::to_string(pt.col) +
                        ") lies outside the " + std::to_string(height_) + "x" +
                        std::to_string(width_) + " image");
      }
      if (!(std::isfinite(pt.d) && pt.d > 0.0)) {
        throw DataError("point (" + std::to_string(pt.row) + ", " + std::to_string(pt.col) +
                        ") has nonpositive depth");
      }
      if (!(std::isfinite(pt.r) && pt.r >= 0.0)) {
        throw DataError("point (" + std::to_string(pt.row) + ", " + std::to_string(pt.col) +
                        ") has invalid relative depth");
      }
      if (i > 0 && points_[i - 1].row == pt.row && points_[i - 1].col == pt.col) {
        throw DataError("duplicate point at (" + std::to_string(pt.row) + ", " +
                        std::to_string(pt.col) + ")");
      }
      pt.p = normalize_coords(pt.row, pt.col, height_, width_);
    }
  }

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  int source_height() const noexcept { return height_; }
  int source_width() const noexcept { return width_; }

  const DepthPoint& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<DepthPoint>& points() const noexcept { return points_; }
  auto begin() const noexcept { return points_.begin(); }
  auto end() const noexcept { return points_.end(); }

  bool operator==(const SparsePointSet&) const = default;

  static bool row_major_less(const DepthPoint& a, const DepthPoint& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  }

 private:
  std::vector<DepthPoint> points_;
  int height_ = 1;
  int width_ = 1;
};

/// Geometry and noise model of a lightweight dToF sensor.
struct SensorSpec {
  int dtof_rows = 30;
  int dtof_cols = 40;
  double fov_fraction = 1.0;
  double d_min = 0.1;
  double d_max = 10.0;
  double noise_rate = 0.05;
  double blank_rate = 0.05;
  double background_percentile = 70.0;
  double max_shift_dtof_px = 2.0;

  int cell_count() const noexcept { return dtof_rows * dtof_cols; }

  void validate() const {
    if (dtof_rows < 1 || dtof_cols < 1) throw ConfigError("dToF grid must be at least 1x1");
    if (!(fov_fraction > 0.0 && fov_fraction <= 1.0))
      throw ConfigError("fov_fraction must lie in (0, 1]");
    if (!(d_min > 0.0 && d_min < d_max)) throw ConfigError("need 0 < d_min < d_max");
    if (!(noise_rate >= 0.0 && noise_rate <= 1.0 && blank_rate >= 0.0 && blank_rate <= 1.0))
      throw ConfigError("noise_rate and blank_rate must lie in [0, 1]");
    if (!(background_percentile > 0.0 && background_percentile < 100.0))
      throw ConfigError("background_percentile must lie in (0, 100)");
    if (!(max_shift_dtof_px >= 0.0)) throw ConfigError("max_shift_dtof_px must be >= 0");
  }

  bool operator==(const SensorSpec&) const = default;
};

struct PairingResult {
  SparsePointSet points;
  std::vector<std::size_t> rejected;  // input indices outside the relative map
};

/// Attaches relative depth (converted to depth-like orientation) to each
/// sensor point. Points outside `rel` are rejected by input index.
inline PairingResult pair_points(std::span<const DepthPoint> sensor, const RelativeDepthMap& rel) {
  PairingResult result;
  std::vector<DepthPoint> kept;
  kept.reserve(sensor.size());
  for (std::size_t i = 0; i < sensor.size(); ++i) {
    const DepthPoint& src = sensor[i];
    if (!rel.in_bounds(src.row, src.col)) {
      result.rejected.push_back(i);
      continue;
    }
    DepthPoint pt = src;
    pt.r = rel.depth_like(src.row, src.col);
    kept.push_back(pt);
  }
  result.points = SparsePointSet(std::move(kept), rel.height(), rel.width());
  return result;
}

inline PairingResult pair_points(const SparsePointSet& sensor, const RelativeDepthMap& rel) {
  return pair_points(std::span<const DepthPoint>(sensor.points()), rel);
}

/// Treats every valid pixel of a sparse raster as a sensor point.
inline PairingResult pair_points(const DenseDepthMap& raster, const RelativeDepthMap& rel) {
  std::vector<DepthPoint> pts;
  for (int row = 0; row < raster.height(); ++row) {
    for (int col = 0; col < raster.width(); ++col) {
      if (raster.valid(row, col)) pts.push_back({row, col, raster(row, col), 0.0, {}});
    }
  }
  return pair_points(std::span<const DepthPoint>(pts), rel);
}

}  // namespace dtof
