#pragma once

// Parameter-free anomaly detection for sparse depth points.
//
// Each point carries a sensor depth d, a monocular relative depth r (depth-like)
// and a normalized image position p. Two inconsistency scores are combined:
//
//   global    tanh(|rank_d(i) - rank_r(i)| / delta), where rank is the mean
//             sign of pairwise differences, in [-1, 1]
//   region    mean over j of exp(-alpha |p_i - p_j|) * |v_d(i,j) - v_r(i,j)|,
//             with v the scale-free difference |a - b| / (a + b + eps)
//
// Their sum is thresholded with Otsu's method, softened by a percentile
// threshold and gated by the Spearman correlation between d and r: when the
// two orderings agree the frame is trusted outright.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "dtof/core.hpp"
#include "dtof/error.hpp"

namespace dtof {

enum class ThresholdMode {
  kAdaptive,  // Spearman-gated blend of Otsu and percentile thresholds
  kOtsuOnly,  // plain Otsu, for ablation
};

enum class ScoreComponents { kBoth, kRegionOnly, kRankOnly };

struct DetectorConfig {
  double delta = 0.5;
  double alpha = 15.0;
  double epsilon = 1e-6;
  double p = 0.04;
  double k = 40.0;
  double u = 0.9;
  double gamma_hi = 0.95;
  double gamma_lo = 0.85;
  int otsu_bins = 256;
  ThresholdMode threshold_mode = ThresholdMode::kAdaptive;
  ScoreComponents components = ScoreComponents::kBoth;

  void validate() const {
    if (!(delta > 0.0)) throw ConfigError("delta must be > 0");
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("p must lie in (0, 1)");
    if (!(k > 0.0)) throw ConfigError("k must be > 0");
    if (!std::isfinite(u)) throw ConfigError("u must be finite");
    if (!(gamma_lo > 0.0 && gamma_lo < gamma_hi && gamma_hi < 1.0))
      throw ConfigError("need 0 < gamma_lo < gamma_hi < 1");
    if (otsu_bins < 2) throw ConfigError("otsu_bins must be >= 2");
  }

  bool operator==(const DetectorConfig&) const = default;
};

struct AnomalyResult {
  std::vector<double> global;  // rank inconsistency, [0, 1)
  std::vector<double> region;  // region inconsistency, >= 0
  std::vector<double> score;   // global + region
  double gamma = 1.0;
  double t_otsu = 0.0;
  double t_stat = std::numeric_limits<double>::infinity();
  double t = std::numeric_limits<double>::infinity();
  std::vector<bool> inlier;

  std::size_t flagged_count() const {
    return static_cast<std::size_t>(std::count(inlier.begin(), inlier.end(), false));
  }
  std::vector<bool> flagged() const {
    std::vector<bool> out(inlier.size());
    for (std::size_t i = 0; i < inlier.size(); ++i) out[i] = !inlier[i];
    return out;
  }
};

namespace detail {

inline void require_points(const SparsePointSet& pts) {
  if (pts.empty()) throw DataError("anomaly detection needs at least one point");
}

/// Mean pairwise sign, (1/N) sum_j sgn(v_i - v_j), via counting on a sorted
/// copy. The integer counts make this exactly equal to the direct sum.
inline std::vector<double> mean_sign_ranks(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(values.size());
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto lower = std::lower_bound(sorted.begin(), sorted.end(), values[i]);
    const auto upper = std::upper_bound(lower, sorted.end(), values[i]);
    const auto less = static_cast<long long>(lower - sorted.begin());
    const auto greater = static_cast<long long>(sorted.end() - upper);
    out[i] = static_cast<double>(less - greater) / n;
  }
  return out;
}

/// 1-based average ranks; tied values share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1 .. j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

inline std::vector<double> global_rank_scores(const SparsePointSet& pts, const DetectorConfig& cfg) {
  detail::require_points(pts);
  std::vector<double> d(pts.size()), r(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    d[i] = pts[i].d;
    r[i] = pts[i].r;
  }
  const std::vector<double> rank_d = detail::mean_sign_ranks(d);
  const std::vector<double> rank_r = detail::mean_sign_ranks(r);
  std::vector<double> g(pts.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::tanh(std::abs(rank_d[i] - rank_r[i]) / cfg.delta);
  return g;
}

/// O(N^2) time, O(N) memory. Each unordered pair is evaluated once and added
/// to both endpoints; every accumulator still receives its terms in ascending
/// partner order.
inline std::vector<double> region_similarity_scores(const SparsePointSet& pts,
                                                    const DetectorConfig& cfg) {
  detail::require_points(pts);
  const std::size_t n = pts.size();
  std::vector<double> sum(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const DepthPoint& a = pts[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      const DepthPoint& b = pts[j];
      const double v_abs = std::abs(a.d - b.d) / (a.d + b.d + cfg.epsilon);
      const double v_rel = std::abs(a.r - b.r) / (a.r + b.r + cfg.epsilon);
      const double dx = a.p.x - b.p.x;
      const double dy = a.p.y - b.p.y;
      const double w = std::exp(-cfg.alpha * std::sqrt(dx * dx + dy * dy));
      const double s = w * std::abs(v_abs - v_rel);
      sum[i] += s;
      sum[j] += s;
    }
  }
  for (double& s : sum) s /= static_cast<double>(n);
  return sum;
}

/// Spearman rank correlation with average ranks for ties. Fewer than two
/// points, or both sequences constant, count as perfectly consistent; a
/// constant sequence against a varying one has no correlation.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("spearman: sequences differ in length");
  if (x.size() < 2) return 1.0;
  const std::vector<double> rx = detail::average_ranks(x);
  const std::vector<double> ry = detail::average_ranks(y);
  const double mean = 0.5 * static_cast<double>(x.size() + 1);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double a = rx[i] - mean, b = ry[i] - mean;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx == 0.0 && syy == 0.0) return 1.0;
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double spearman(const SparsePointSet& pts) {
  std::vector<double> d(pts.size()), r(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    d[i] = pts[i].d;
    r[i] = pts[i].r;
  }
  return spearman(d, r);
}

/// Histogram Otsu over [min, max] with `bins` equal bins. Returns the bin edge
/// maximizing between-class variance (lowest edge on ties), or max when the
/// input is constant.
inline double otsu_threshold(std::span<const double> scores, int bins) {
  if (scores.empty()) throw DataError("otsu_threshold needs at least one score");
  const auto [min_it, max_it] = std::minmax_element(scores.begin(), scores.end());
  const double lo = *min_it, hi = *max_it;
  if (!(hi > lo)) return hi;

  const double width = (hi - lo) / bins;
  std::vector<double> hist(static_cast<std::size_t>(bins), 0.0);
  for (double v : scores) {
    const int b = std::min(bins - 1, static_cast<int>((v - lo) / width));
    hist[static_cast<std::size_t>(b)] += 1.0;
  }
  const double n = static_cast<double>(scores.size());
  double total_moment = 0.0;
  for (int b = 0; b < bins; ++b) total_moment += hist[static_cast<std::size_t>(b)] * (lo + (b + 0.5) * width);
  const double mean = total_moment / n;

  double best = -1.0;
  int best_edge = 1;
  double w0 = 0.0, m0 = 0.0;
  for (int edge = 1; edge < bins; ++edge) {
    const double count = hist[static_cast<std::size_t>(edge - 1)];
    w0 += count / n;
    m0 += count * (lo + (edge - 0.5) * width) / n;
    if (w0 <= 0.0 || w0 >= 1.0) continue;
    const double diff = mean * w0 - m0;
    const double between = diff * diff / (w0 * (1.0 - w0));
    if (between > best) {
      best = between;
      best_edge = edge;
    }
  }
  return lo + best_edge * width;
}

struct ThresholdDecision {
  double t_otsu = 0.0;
  double t_stat = std::numeric_limits<double>::infinity();
  double weight = 0.0;  // sigmoid(k (gamma - u))
  double t = std::numeric_limits<double>::infinity();
};

/// Largest-m score (1-based), or +inf when floor(p N) is zero.
inline double percentile_threshold(std::span<const double> scores, double p) {
  // The 1e-9 nudge keeps products such as 0.29 * 100 from flooring to 28.
  const auto m = static_cast<std::size_t>(std::floor(p * static_cast<double>(scores.size()) + 1e-9));
  if (m == 0) return std::numeric_limits<double>::infinity();
  std::vector<double> copy(scores.begin(), scores.end());
  std::nth_element(copy.begin(), copy.begin() + static_cast<std::ptrdiff_t>(m - 1), copy.end(),
                   std::greater<>());
  return copy[m - 1];
}

inline ThresholdDecision adaptive_threshold(std::span<const double> scores, double gamma,
                                            const DetectorConfig& cfg) {
  ThresholdDecision out;
  out.t_otsu = otsu_threshold(scores, cfg.otsu_bins);
  out.t_stat = percentile_threshold(scores, cfg.p);
  out.weight = detail::sigmoid(cfg.k * (gamma - cfg.u));
  if (cfg.threshold_mode == ThresholdMode::kOtsuOnly) {
    out.t = out.t_otsu;
  } else if (gamma > cfg.gamma_hi) {
    out.t = std::numeric_limits<double>::infinity();
  } else if (gamma > cfg.gamma_lo) {
    out.t = out.weight * out.t_stat + (1.0 - out.weight) * out.t_otsu;
  } else {
    out.t = out.t_otsu;
  }
  return out;
}

/// Scores every point and flags those whose score exceeds the adaptive
/// threshold. Equality keeps the point.
inline AnomalyResult detect(const SparsePointSet& pts, const DetectorConfig& cfg = {}) {
  cfg.validate();
  detail::require_points(pts);
  const std::size_t n = pts.size();
  AnomalyResult res;
  res.global = cfg.components == ScoreComponents::kRegionOnly ? std::vector<double>(n, 0.0)
                                                              : global_rank_scores(pts, cfg);
  res.region = cfg.components == ScoreComponents::kRankOnly ? std::vector<double>(n, 0.0)
                                                            : region_similarity_scores(pts, cfg);
  res.score.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.score[i] = res.region[i] + res.global[i];
  res.gamma = spearman(pts);
  const ThresholdDecision th = adaptive_threshold(res.score, res.gamma, cfg);
  res.t_otsu = th.t_otsu;
  res.t_stat = th.t_stat;
  res.t = th.t;
  res.inlier.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.inlier[i] = !(res.score[i] > res.t);
  return res;
}

/// Keeps the inlier points in their original order.
inline SparsePointSet mask_points(const SparsePointSet& pts, const AnomalyResult& result) {
  if (result.inlier.size() != pts.size()) {
    throw DataError("anomaly result covers " + std::to_string(result.inlier.size()) +
                    " points but the set has " + std::to_string(pts.size()));
  }
  std::vector<DepthPoint> kept;
  kept.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (result.inlier[i]) kept.push_back(pts[i]);
  return SparsePointSet(std::move(kept), pts.source_height(), pts.source_width());
}

}  // namespace dtof
