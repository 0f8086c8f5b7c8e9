#pragma once

// Synthetic lightweight-dToF measurements from dense ground truth.
//
// A frame is produced in four stages, each drawing from its own random
// stream derived from the config seed:
//
//   sample_grid               one return per sensor cell on a slightly rotated,
//                             translated and jittered lattice
//   inject_region_anomalies   irregular blobs (unions of ellipses in cell
//                             space) that either lose their returns or report
//                             wrong depths
//   inject_calibration_error  background points (deeper than a GT percentile)
//                             re-sampled at a frame-wide shifted location
//   inject_random_noise       isolated noise points and blanks
//
// Every stage preserves |points| + |dropped| == rows * cols.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include "dtof/core.hpp"
#include "dtof/error.hpp"
#include "dtof/rng.hpp"

namespace dtof {

enum class PointLabel { kClean, kError, kShifted };

inline const char* to_string(PointLabel label) {
  switch (label) {
    case PointLabel::kClean: return "clean";
    case PointLabel::kError: return "error";
    case PointLabel::kShifted: return "shifted";
  }
  return "clean";
}

enum class ErrorPolicy {
  kUniformRedraw,   // depth redrawn uniformly in [d_min, d_max]
  kMultiplicative,  // depth scaled by U[error_scale_min, error_scale_max], capped at d_max
};

enum class RegionType { kAbsence, kError };

struct SimConfig {
  SensorSpec spec;
  std::uint64_t seed = 0;
  int region_count_min = 0;
  int region_count_max = 0;
  double region_area_min = 0.02;  // fraction of sensor cells per blob
  double region_area_max = 0.10;
  double error_region_probability = 0.5;
  ErrorPolicy error_policy = ErrorPolicy::kUniformRedraw;
  double error_scale_min = 1.5;
  double error_scale_max = 3.0;
  double jitter = 0.25;            // per-cell jitter, fraction of a cell
  double max_translation = 0.5;    // global lattice shift per axis, cells
  double max_rotation_deg = 1.0;   // global lattice rotation

  void validate() const {
    spec.validate();
    if (spec.noise_rate + spec.blank_rate > 1.0)
      throw ConfigError("noise_rate + blank_rate must not exceed 1");
    if (region_count_min < 0 || region_count_max < region_count_min)
      throw ConfigError("region count range must satisfy 0 <= min <= max");
    if (!(region_area_min > 0.0 && region_area_min <= region_area_max && region_area_max <= 0.5))
      throw ConfigError("region area range must lie within (0, 0.5]");
    if (!(error_region_probability >= 0.0 && error_region_probability <= 1.0))
      throw ConfigError("error_region_probability must lie in [0, 1]");
    if (!(error_scale_min > 0.0 && error_scale_min <= error_scale_max))
      throw ConfigError("error scale range must satisfy 0 < min <= max");
    if (!(jitter >= 0.0 && jitter <= 0.5)) throw ConfigError("jitter must lie in [0, 0.5]");
    if (!(max_translation >= 0.0 && max_translation <= 1.0))
      throw ConfigError("max_translation must lie in [0, 1]");
    if (!(max_rotation_deg >= 0.0 && max_rotation_deg <= 45.0))
      throw ConfigError("max_rotation_deg must lie in [0, 45]");
  }

  bool operator==(const SimConfig&) const = default;
};

struct PixelRect {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  bool contains(int row, int col) const noexcept {
    return row >= top && col >= left && row < top + height && col < left + width;
  }
  bool operator==(const PixelRect&) const = default;
};

/// Maps sensor cells onto the image plane. The FoV rectangle is centered.
struct GridGeometry {
  int image_height = 0;
  int image_width = 0;
  int rows = 0;
  int cols = 0;
  PixelRect fov;
  double cell_h = 0.0;  // image pixels per sensor cell
  double cell_w = 0.0;

  GridGeometry() = default;
  GridGeometry(int height, int width, const SensorSpec& spec)
      : image_height(height), image_width(width), rows(spec.dtof_rows), cols(spec.dtof_cols) {
    PixelMask::checked_size(height, width);
    fov.height = std::max(1, static_cast<int>(std::lround(spec.fov_fraction * height)));
    fov.width = std::max(1, static_cast<int>(std::lround(spec.fov_fraction * width)));
    fov.top = (height - fov.height) / 2;
    fov.left = (width - fov.width) / 2;
    cell_h = static_cast<double>(fov.height) / rows;
    cell_w = static_cast<double>(fov.width) / cols;
  }

  /// Sensor cell covering an image pixel, or -1 outside the FoV.
  int cell_of_pixel(int row, int col) const {
    if (!fov.contains(row, col)) return -1;
    const int i = std::min(rows - 1, static_cast<int>((row - fov.top + 0.5) / cell_h));
    const int j = std::min(cols - 1, static_cast<int>((col - fov.left + 0.5) / cell_w));
    return i * cols + j;
  }

  bool operator==(const GridGeometry&) const = default;
};

struct AnomalyRegion {
  RegionType type = RegionType::kAbsence;
  std::vector<int> cells;  // ascending sensor-cell indices

  bool operator==(const AnomalyRegion&) const = default;
};

struct CalibrationShift {
  bool applied = false;
  double threshold = 0.0;  // background depth percentile
  double dy_cells = 0.0;
  double dx_cells = 0.0;
  int dy_px = 0;
  int dx_px = 0;

  double magnitude_cells() const { return std::hypot(dy_cells, dx_cells); }
  bool operator==(const CalibrationShift&) const = default;
};

struct SimOutput {
  SparsePointSet points;
  std::vector<PointLabel> labels;  // one per point
  std::vector<int> cells;          // originating sensor cell per point
  std::vector<int> dropped;        // ascending cells with no return
  PixelRect fov_rect;
  GridGeometry geometry;
  std::vector<AnomalyRegion> regions;
  CalibrationShift shift;

  bool operator==(const SimOutput&) const = default;
};

/// Image pixels whose sensor cell lies in a region of the given type.
inline PixelMask region_pixel_mask(const SimOutput& sim, RegionType type) {
  const GridGeometry& g = sim.geometry;
  std::vector<std::uint8_t> in_region(static_cast<std::size_t>(g.rows * g.cols), 0);
  for (const auto& region : sim.regions) {
    if (region.type != type) continue;
    for (int c : region.cells) in_region[static_cast<std::size_t>(c)] = 1;
  }
  PixelMask mask(g.image_height, g.image_width, false);
  for (int row = g.fov.top; row < g.fov.top + g.fov.height; ++row) {
    for (int col = g.fov.left; col < g.fov.left + g.fov.width; ++col) {
      const int cell = g.cell_of_pixel(row, col);
      if (cell >= 0 && in_region[static_cast<std::size_t>(cell)]) mask.set(row, col, true);
    }
  }
  return mask;
}

namespace detail {

enum SimStream : std::uint64_t { kGridStream = 1, kRegionStream = 2, kCalibStream = 3, kNoiseStream = 4 };

struct SimRecord {
  int row = 0;
  int col = 0;
  double d = 0.0;
  PointLabel label = PointLabel::kClean;
  int cell = 0;
};

inline std::vector<SimRecord> records_of(const SimOutput& sim) {
  std::vector<SimRecord> out;
  out.reserve(sim.points.size());
  for (std::size_t i = 0; i < sim.points.size(); ++i) {
    const DepthPoint& p = sim.points[i];
    out.push_back({p.row, p.col, p.d, sim.labels[i], sim.cells[i]});
  }
  return out;
}

/// Rebuilds a SimOutput from unordered records. When two returns land on the
/// same pixel, the one from the higher-numbered cell loses and its cell is
/// recorded as dropped.
inline SimOutput assemble(std::vector<SimRecord> records, std::vector<int> dropped,
                          const SimOutput& like) {
  std::sort(records.begin(), records.end(), [](const SimRecord& a, const SimRecord& b) {
    return std::tie(a.row, a.col, a.cell) < std::tie(b.row, b.col, b.cell);
  });
  SimOutput out;
  out.fov_rect = like.fov_rect;
  out.geometry = like.geometry;
  out.regions = like.regions;
  out.shift = like.shift;
  std::vector<DepthPoint> pts;
  pts.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const SimRecord& rec = records[i];
    if (!pts.empty() && pts.back().row == rec.row && pts.back().col == rec.col) {
      dropped.push_back(rec.cell);
      continue;
    }
    pts.push_back({rec.row, rec.col, rec.d, 0.0, {}});
    out.labels.push_back(rec.label);
    out.cells.push_back(rec.cell);
  }
  std::sort(dropped.begin(), dropped.end());
  out.dropped = std::move(dropped);
  out.points = SparsePointSet(std::move(pts), like.geometry.image_height, like.geometry.image_width);
  return out;
}

/// Linear-interpolated percentile (q in [0, 100]) of an unsorted sample.
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

struct Ellipse {
  double cy, cx;  // relative to blob center, unit scale
  double a, b;    // semi-axes, unit scale
  double angle;
};

inline std::vector<int> blob_cells(double cy, double cx, const std::vector<Ellipse>& parts,
                                   double scale, int rows, int cols) {
  std::vector<int> cells;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double y = i + 0.5;
      const double x = j + 0.5;
      for (const Ellipse& e : parts) {
        const double dy = y - (cy + scale * e.cy);
        const double dx = x - (cx + scale * e.cx);
        const double c = std::cos(e.angle), s = std::sin(e.angle);
        const double u = (c * dx + s * dy) / (scale * e.a);
        const double v = (-s * dx + c * dy) / (scale * e.b);
        if (u * u + v * v <= 1.0) {
          cells.push_back(i * cols + j);
          break;
        }
      }
    }
  }
  return cells;
}

/// Random irregular blob whose cell count is as close as the lattice allows to
/// a target drawn from [area_min, area_max] of the grid.
inline std::vector<int> random_blob(Rng& rng, int rows, int cols, double area_min, double area_max) {
  const double total = static_cast<double>(rows) * cols;
  const double target = std::max(1.0, std::round(rng.uniform(area_min, area_max) * total));
  const auto parts_n = static_cast<int>(rng.uniform_int(2, 5));
  const double cy = rng.uniform(0.0, rows);
  const double cx = rng.uniform(0.0, cols);
  std::vector<Ellipse> parts;
  for (int k = 0; k < parts_n; ++k) {
    Ellipse e{};
    if (k > 0) {
      const double radius = 0.8 * rng.uniform01();
      const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
      e.cy = radius * std::sin(theta);
      e.cx = radius * std::cos(theta);
    }
    e.a = rng.uniform(0.4, 1.0);
    e.b = rng.uniform(0.4, 1.0);
    e.angle = rng.uniform(0.0, std::numbers::pi);
    parts.push_back(e);
  }

  auto count_at = [&](double s) {
    return static_cast<double>(blob_cells(cy, cx, parts, s, rows, cols).size());
  };
  double hi = 1.0;
  while (count_at(hi) < target && hi < 64.0 * (rows + cols)) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 48; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (count_at(mid) >= target) hi = mid; else lo = mid;
  }
  const double below = lo > 0.0 ? count_at(lo) : 0.0;
  const double above = count_at(hi);
  const double scale = (below > 0.0 && target - below < above - target) ? lo : hi;
  return blob_cells(cy, cx, parts, scale, rows, cols);
}

inline double corrupt_depth(Rng& rng, double d, const SimConfig& cfg) {
  if (cfg.error_policy == ErrorPolicy::kMultiplicative) {
    return std::min(cfg.spec.d_max, d * rng.uniform(cfg.error_scale_min, cfg.error_scale_max));
  }
  return rng.uniform(cfg.spec.d_min, cfg.spec.d_max);
}

}  // namespace detail

/// Clean stage: one sample per sensor cell. Cells whose sample lands on
/// invalid GT, or on GT beyond d_max, report no return.
inline SimOutput sample_grid(const DenseDepthMap& gt, const SimConfig& cfg) {
  cfg.validate();
  const GridGeometry geom(gt.height(), gt.width(), cfg.spec);
  const PixelRect& fov = geom.fov;

  bool usable = false;
  for (int row = fov.top; row < fov.top + fov.height && !usable; ++row)
    for (int col = fov.left; col < fov.left + fov.width && !usable; ++col)
      usable = gt.valid(row, col);
  if (!usable) throw DataError("unusable frame: no valid ground truth inside the sensor FoV");

  Rng rng = Rng::for_stream(cfg.seed, detail::kGridStream);
  const double ty = rng.uniform(-cfg.max_translation, cfg.max_translation) * geom.cell_h;
  const double tx = rng.uniform(-cfg.max_translation, cfg.max_translation) * geom.cell_w;
  const double theta =
      rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg) * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);
  const double center_y = fov.top + 0.5 * fov.height;
  const double center_x = fov.left + 0.5 * fov.width;

  std::vector<detail::SimRecord> records;
  std::vector<int> dropped;
  for (int i = 0; i < geom.rows; ++i) {
    for (int j = 0; j < geom.cols; ++j) {
      const int cell = i * geom.cols + j;
      const double y0 = fov.top + (i + 0.5) * geom.cell_h - center_y;
      const double x0 = fov.left + (j + 0.5) * geom.cell_w - center_x;
      const double jy = rng.uniform(-cfg.jitter, cfg.jitter) * geom.cell_h;
      const double jx = rng.uniform(-cfg.jitter, cfg.jitter) * geom.cell_w;
      const double y = center_y + cos_t * y0 - sin_t * x0 + ty + jy;
      const double x = center_x + sin_t * y0 + cos_t * x0 + tx + jx;
      const int row = std::clamp(static_cast<int>(std::floor(y)), fov.top, fov.top + fov.height - 1);
      const int col = std::clamp(static_cast<int>(std::floor(x)), fov.left, fov.left + fov.width - 1);
      if (!gt.valid(row, col) || gt(row, col) > cfg.spec.d_max) {
        dropped.push_back(cell);
        continue;
      }
      records.push_back({row, col, gt(row, col), PointLabel::kClean, cell});
    }
  }
  SimOutput like;
  like.fov_rect = fov;
  like.geometry = geom;
  return detail::assemble(std::move(records), std::move(dropped), like);
}

inline SimOutput inject_region_anomalies(const SimOutput& sim, const SimConfig& cfg) {
  if (cfg.region_count_max == 0) return sim;
  Rng rng = Rng::for_stream(cfg.seed, detail::kRegionStream);
  const int rows = sim.geometry.rows, cols = sim.geometry.cols;
  const auto count = static_cast<int>(rng.uniform_int(cfg.region_count_min, cfg.region_count_max));

  std::vector<detail::SimRecord> records = detail::records_of(sim);
  std::vector<int> dropped = sim.dropped;
  SimOutput like = sim;
  for (int k = 0; k < count; ++k) {
    AnomalyRegion region;
    region.cells = detail::random_blob(rng, rows, cols, cfg.region_area_min, cfg.region_area_max);
    region.type = rng.bernoulli(cfg.error_region_probability) ? RegionType::kError
                                                              : RegionType::kAbsence;
    std::vector<std::uint8_t> in_blob(static_cast<std::size_t>(rows * cols), 0);
    for (int c : region.cells) in_blob[static_cast<std::size_t>(c)] = 1;

    std::vector<detail::SimRecord> kept;
    kept.reserve(records.size());
    for (detail::SimRecord rec : records) {
      if (!in_blob[static_cast<std::size_t>(rec.cell)]) {
        kept.push_back(rec);
      } else if (region.type == RegionType::kAbsence) {
        dropped.push_back(rec.cell);
      } else {
        rec.d = detail::corrupt_depth(rng, rec.d, cfg);
        rec.label = PointLabel::kError;
        kept.push_back(rec);
      }
    }
    records = std::move(kept);
    like.regions.push_back(std::move(region));
  }
  return detail::assemble(std::move(records), std::move(dropped), like);
}

inline SimOutput inject_calibration_error(const SimOutput& sim, const DenseDepthMap& gt,
                                          const SimConfig& cfg) {
  if (cfg.spec.max_shift_dtof_px <= 0.0) return sim;
  const GridGeometry& geom = sim.geometry;
  const PixelRect& fov = geom.fov;

  std::vector<double> depths;
  for (int row = fov.top; row < fov.top + fov.height; ++row)
    for (int col = fov.left; col < fov.left + fov.width; ++col)
      if (gt.valid(row, col)) depths.push_back(gt(row, col));
  if (depths.empty()) return sim;

  Rng rng = Rng::for_stream(cfg.seed, detail::kCalibStream);
  SimOutput like = sim;
  CalibrationShift& shift = like.shift;
  shift.applied = true;
  shift.threshold = detail::percentile(std::move(depths), cfg.spec.background_percentile);
  const double magnitude = rng.uniform(0.0, cfg.spec.max_shift_dtof_px);
  const double direction = rng.uniform(0.0, 2.0 * std::numbers::pi);
  shift.dy_cells = magnitude * std::sin(direction);
  shift.dx_cells = magnitude * std::cos(direction);
  // Truncation keeps the pixel displacement within the drawn magnitude.
  shift.dy_px = static_cast<int>(std::trunc(shift.dy_cells * geom.cell_h));
  shift.dx_px = static_cast<int>(std::trunc(shift.dx_cells * geom.cell_w));

  std::vector<detail::SimRecord> records;
  std::vector<int> dropped = sim.dropped;
  for (detail::SimRecord rec : detail::records_of(sim)) {
    if (rec.label != PointLabel::kClean || !(rec.d > shift.threshold)) {
      records.push_back(rec);
      continue;
    }
    const int row = rec.row + shift.dy_px;
    const int col = rec.col + shift.dx_px;
    if (!fov.contains(row, col) || !gt.valid(row, col) || gt(row, col) > cfg.spec.d_max) {
      dropped.push_back(rec.cell);
      continue;
    }
    rec.row = row;
    rec.col = col;
    rec.d = gt(row, col);
    rec.label = PointLabel::kShifted;
    records.push_back(rec);
  }
  return detail::assemble(std::move(records), std::move(dropped), like);
}

inline SimOutput inject_random_noise(const SimOutput& sim, const SimConfig& cfg) {
  const double noise = cfg.spec.noise_rate, blank = cfg.spec.blank_rate;
  if (noise + blank > 1.0) throw ConfigError("noise_rate + blank_rate must not exceed 1");
  if (noise == 0.0 && blank == 0.0) return sim;
  Rng rng = Rng::for_stream(cfg.seed, detail::kNoiseStream);
  std::vector<detail::SimRecord> records;
  std::vector<int> dropped = sim.dropped;
  for (detail::SimRecord rec : detail::records_of(sim)) {
    const double u = rng.uniform01();
    if (u < noise) {
      rec.d = rng.uniform(cfg.spec.d_min, cfg.spec.d_max);
      rec.label = PointLabel::kError;
      records.push_back(rec);
    } else if (u < noise + blank) {
      dropped.push_back(rec.cell);
    } else {
      records.push_back(rec);
    }
  }
  return detail::assemble(std::move(records), std::move(dropped), sim);
}

/// Full pipeline: grid sampling, region anomalies, calibration shift, then
/// random noise. Deterministic in (gt, cfg).
inline SimOutput simulate(const DenseDepthMap& gt, const SimConfig& cfg) {
  SimOutput sim = sample_grid(gt, cfg);
  sim = inject_region_anomalies(sim, cfg);
  sim = inject_calibration_error(sim, gt, cfg);
  return inject_random_noise(sim, cfg);
}

}  // namespace dtof
