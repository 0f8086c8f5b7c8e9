#pragma once

// Affine alignment of a monocular relative-depth map to sparse metric points,
// and dense completion from the fitted map.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dtof/core.hpp"
#include "dtof/error.hpp"

namespace dtof {

enum class FitDomain {
  kDepth,         // d ~ a * r + b, r depth-like
  kInverseDepth,  // 1/d ~ a * v + b, v the raw (inverse-depth) map value
};

struct AffineFit {
  double a = 1.0;
  double b = 0.0;
  FitDomain domain = FitDomain::kInverseDepth;
  double rmse_fit = 0.0;  // RMS residual in the fit's target space (m or 1/m)
  std::size_t support = 0;
  bool robust = false;
};

namespace detail {

struct LineFit {
  double a = 0.0;
  double b = 0.0;
};

/// Weighted least squares line through centered sums. Fails when the
/// positively weighted x values are all equal.
inline LineFit weighted_line(const std::vector<double>& x, const std::vector<double>& y,
                             const std::vector<double>& w) {
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  if (!(sw > 0.0)) throw DataError("affine fit: all weights vanished");
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  bool distinct = false;
  double first = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(w[i] > 0.0)) continue;
    if (std::isnan(first)) first = x[i]; else if (x[i] != first) distinct = true;
    const double dx = x[i] - mx;
    sxx += w[i] * dx * dx;
    sxy += w[i] * dx * (y[i] - my);
  }
  if (!distinct || !(sxx > 0.0))
    throw DataError("affine fit is rank deficient: all relative depth samples are equal");
  const double a = sxy / sxx;
  return {a, my - a * mx};
}

inline double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace detail

inline constexpr int kHuberRounds = 5;
inline constexpr double kHuberTuning = 1.345;

/// Least-squares (or Huber-IRLS) fit of relative depth to the sensor points.
inline AffineFit fit_affine(const SparsePointSet& pts, const RelativeDepthMap& rel,
                            FitDomain domain = FitDomain::kInverseDepth, bool robust = false) {
  if (pts.size() < 2) throw DataError("affine fit needs at least 2 points, got " + std::to_string(pts.size()));
  const std::size_t n = pts.size();
  std::vector<double> x(n), y(n), w(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const DepthPoint& pt = pts[i];
    if (domain == FitDomain::kDepth) {
      x[i] = pt.r;
      y[i] = pt.d;
    } else {
      if (!rel.in_bounds(pt.row, pt.col))
        throw DataError("point (" + std::to_string(pt.row) + ", " + std::to_string(pt.col) +
                        ") lies outside the relative depth map");
      x[i] = rel(pt.row, pt.col);
      y[i] = 1.0 / pt.d;
    }
  }

  detail::LineFit line = detail::weighted_line(x, y, w);
  if (robust) {
    std::vector<double> res(n), dev(n);
    for (int round = 0; round < kHuberRounds; ++round) {
      for (std::size_t i = 0; i < n; ++i) res[i] = y[i] - (line.a * x[i] + line.b);
      const double med = detail::median(res);
      for (std::size_t i = 0; i < n; ++i) dev[i] = std::abs(res[i] - med);
      const double cutoff = kHuberTuning * detail::median(dev);
      for (std::size_t i = 0; i < n; ++i) {
        const double e = std::abs(res[i]);
        w[i] = e <= cutoff ? 1.0 : cutoff / e;
      }
      try {
        line = detail::weighted_line(x, y, w);
      } catch (const DataError&) {
        break;  // too few points kept any weight; keep the previous round
      }
    }
  }

  AffineFit fit;
  fit.a = line.a;
  fit.b = line.b;
  fit.domain = domain;
  fit.support = n;
  fit.robust = robust;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (line.a * x[i] + line.b);
    ss += e * e;
  }
  fit.rmse_fit = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

/// Metric depth predicted for one relative-depth sample, clamped to the
/// sensor range. A nonpositive inverse depth maps to the far limit.
inline double fitted_depth(const AffineFit& fit, double rel_value, const SensorSpec& spec) {
  double depth = 0.0;
  if (fit.domain == FitDomain::kDepth) {
    depth = fit.a * rel_value + fit.b;
  } else {
    const double inv = fit.a * rel_value + fit.b;
    depth = inv > 0.0 ? 1.0 / inv : spec.d_max;
  }
  if (!std::isfinite(depth)) depth = spec.d_max;
  return std::clamp(depth, spec.d_min, spec.d_max);
}

/// Dense depth from the global fit; every pixel is valid.
inline DenseDepthMap complete(const RelativeDepthMap& rel, const AffineFit& fit, const SensorSpec& spec) {
  DenseDepthMap out(rel.height(), rel.width());
  const auto& values = rel.values();
  for (std::size_t i = 0; i < values.size(); ++i) out.set(i, fitted_depth(fit, values[i], spec));
  return out;
}

namespace detail {

/// Uniform bucket grid over normalized coordinates for k-nearest queries.
class PointGrid {
 public:
  explicit PointGrid(std::vector<NormalizedCoord> pts) : pts_(std::move(pts)) {
    side_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(pts_.size()) / 2.0)));
    buckets_.assign(static_cast<std::size_t>(side_ * side_), {});
    for (std::size_t i = 0; i < pts_.size(); ++i) buckets_[bucket_index(pts_[i])].push_back(i);
  }

  /// Indices and squared distances of the k nearest points, nearest first.
  /// Equal distances resolve toward the lower index.
  std::vector<std::pair<double, std::size_t>> nearest(NormalizedCoord q, std::size_t k) const {
    std::vector<std::pair<double, std::size_t>> best;
    k = std::min(k, pts_.size());
    const int qi = cell(q.y), qj = cell(q.x);
    const double size = 1.0 / side_;
    for (int ring = 0; ring <= side_; ++ring) {
      for (int i = qi - ring; i <= qi + ring; ++i) {
        if (i < 0 || i >= side_) continue;
        for (int j = qj - ring; j <= qj + ring; ++j) {
          if (j < 0 || j >= side_) continue;
          if (std::max(std::abs(i - qi), std::abs(j - qj)) != ring) continue;
          for (std::size_t idx : buckets_[static_cast<std::size_t>(i * side_ + j)]) {
            const double dx = pts_[idx].x - q.x, dy = pts_[idx].y - q.y;
            insert(best, {dx * dx + dy * dy, idx}, k);
          }
        }
      }
      if (best.size() == k) {
        const double reach = ring * size;  // every unvisited point is at least this far
        if (best.back().first <= reach * reach) break;
      }
    }
    return best;
  }

 private:
  int cell(double v) const { return std::clamp(static_cast<int>(v * side_), 0, side_ - 1); }
  std::size_t bucket_index(NormalizedCoord p) const {
    return static_cast<std::size_t>(cell(p.y) * side_ + cell(p.x));
  }

  static void insert(std::vector<std::pair<double, std::size_t>>& best,
                     std::pair<double, std::size_t> cand, std::size_t k) {
    if (best.size() == k && !(cand < best.back())) return;
    best.insert(std::upper_bound(best.begin(), best.end(), cand), cand);
    if (best.size() > k) best.pop_back();
  }

  std::vector<NormalizedCoord> pts_;
  int side_ = 1;
  std::vector<std::vector<std::size_t>> buckets_;
};

}  // namespace detail

inline constexpr std::size_t kResidualNeighbors = 8;

/// Global fit plus a local correction interpolated from the per-point
/// residuals d_i - base(p_i). With the 8 nearest points at normalized
/// distances dist_i and w_i = 1/dist_i^2, the correction is
///   sum_i w_i res_i / (1 + sum_i w_i),
/// i.e. inverse-distance weighting anchored to a zero residual of unit
/// weight. A lone point therefore contributes res / (1 + dist^2), and a pixel
/// holding a point takes that point's residual exactly.
inline DenseDepthMap complete_with_residuals(const RelativeDepthMap& rel, const AffineFit& fit,
                                             const SparsePointSet& pts, const SensorSpec& spec) {
  if (pts.empty()) throw DataError("residual completion needs at least one point");
  DenseDepthMap base = complete(rel, fit, spec);
  const int h = rel.height(), w = rel.width();

  std::vector<NormalizedCoord> coords;
  std::vector<double> residual;
  coords.reserve(pts.size());
  residual.reserve(pts.size());
  for (const DepthPoint& pt : pts) {
    if (!base.in_bounds(pt.row, pt.col))
      throw DataError("point (" + std::to_string(pt.row) + ", " + std::to_string(pt.col) +
                      ") lies outside the relative depth map");
    coords.push_back(normalize_coords(pt.row, pt.col, h, w));
    residual.push_back(pt.d - base(pt.row, pt.col));
  }
  const detail::PointGrid grid(std::move(coords));

  DenseDepthMap out(h, w);
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      const auto near = grid.nearest(normalize_coords(row, col, h, w), kResidualNeighbors);
      double correction = 0.0;
      if (near.front().first == 0.0) {
        correction = residual[near.front().second];
      } else {
        double num = 0.0, den = 1.0;
        for (const auto& [dist2, idx] : near) {
          num += residual[idx] / dist2;
          den += 1.0 / dist2;
        }
        correction = num / den;
      }
      out.set(row, col, std::clamp(base(row, col) + correction, spec.d_min, spec.d_max));
    }
  }
  return out;
}

}  // namespace dtof
