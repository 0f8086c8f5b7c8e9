#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtof/core.hpp"
#include "dtof/dtof_sim.hpp"
#include "dtof/error.hpp"

namespace dtof {

enum class EvalRegion { kAll, kMask, kComplement };

inline const char* to_string(EvalRegion region) {
  switch (region) {
    case EvalRegion::kAll: return "all";
    case EvalRegion::kMask: return "mask";
    case EvalRegion::kComplement: return "complement";
  }
  return "all";
}

struct EvalReport {
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  double rel = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double log10 = 0.0;
  double ewmae = 0.0;
  std::size_t n_pixels = 0;
  EvalRegion region = EvalRegion::kAll;
};

namespace detail {

/// Indices of valid GT pixels (inside `mask` when given); checks shapes and
/// that the prediction is positive everywhere in the set.
inline std::vector<std::size_t> evaluation_set(const DenseDepthMap& pred, const DenseDepthMap& gt,
                                               const PixelMask* mask) {
  if (pred.height() != gt.height() || pred.width() != gt.width())
    throw DataError("prediction is " + std::to_string(pred.height()) + "x" + std::to_string(pred.width()) +
                    " but ground truth is " + std::to_string(gt.height()) + "x" + std::to_string(gt.width()));
  if (mask && (mask->height() != gt.height() || mask->width() != gt.width()))
    throw DataError("evaluation mask does not match the ground truth shape");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt.valid(i) || (mask && !(*mask)[i])) continue;
    if (!(pred[i] > 0.0) || !std::isfinite(pred[i]))
      throw DataError("prediction is nonpositive at pixel " + std::to_string(i) + " of the evaluation set");
    idx.push_back(i);
  }
  if (idx.empty()) throw DataError("evaluation set is empty");
  return idx;
}

/// Central-difference gradient magnitude of GT. Borders and invalid
/// neighbours replicate the centre pixel.
inline std::vector<double> gradient_magnitude(const DenseDepthMap& gt) {
  const int h = gt.height(), w = gt.width();
  std::vector<double> g(gt.size(), 0.0);
  auto sample = [&](int row, int col, double fallback) {
    return (gt.in_bounds(row, col) && gt.valid(row, col)) ? gt(row, col) : fallback;
  };
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      const double c = gt(row, col);
      const double gx = 0.5 * (sample(row, col + 1, c) - sample(row, col - 1, c));
      const double gy = 0.5 * (sample(row + 1, col, c) - sample(row - 1, col, c));
      g[static_cast<std::size_t>(row) * static_cast<std::size_t>(w) + static_cast<std::size_t>(col)] =
          std::sqrt(gx * gx + gy * gy);
    }
  }
  return g;
}

inline double ewmae_over(const DenseDepthMap& pred, const DenseDepthMap& gt,
                         const std::vector<std::size_t>& idx) {
  const std::vector<double> g = gradient_magnitude(gt);
  double mean_g = 0.0;
  for (std::size_t i : idx) mean_g += g[i];
  mean_g /= static_cast<double>(idx.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i : idx) {
    const double w = mean_g > 0.0 ? 1.0 + g[i] / mean_g : 1.0;
    num += w * std::abs(pred[i] - gt[i]);
    den += w;
  }
  return num / den;
}

}  // namespace detail

/// Edge-weighted MAE: weight 1 + |grad GT| / mean |grad GT| over the
/// evaluated pixels (all ones for flat GT).
inline double ewmae(const DenseDepthMap& pred, const DenseDepthMap& gt, const PixelMask* mask = nullptr) {
  return detail::ewmae_over(pred, gt, detail::evaluation_set(pred, gt, mask));
}

inline EvalReport evaluate(const DenseDepthMap& pred, const DenseDepthMap& gt,
                           const PixelMask* mask = nullptr, EvalRegion region = EvalRegion::kAll) {
  const std::vector<std::size_t> idx = detail::evaluation_set(pred, gt, mask);
  EvalReport rep;
  rep.region = mask ? region : EvalRegion::kAll;
  rep.n_pixels = idx.size();
  std::size_t d1 = 0, d2 = 0, d3 = 0;
  double rel = 0.0, sq = 0.0, abs_err = 0.0, lg = 0.0;
  for (std::size_t i : idx) {
    const double y = pred[i], t = gt[i];
    const double ratio = std::max(y / t, t / y);
    d1 += ratio < 1.25;
    d2 += ratio < 1.25 * 1.25;
    d3 += ratio < 1.25 * 1.25 * 1.25;
    const double e = y - t;
    rel += std::abs(e) / t;
    sq += e * e;
    abs_err += std::abs(e);
    lg += std::abs(std::log10(y / t));
  }
  const double n = static_cast<double>(idx.size());
  rep.delta1 = static_cast<double>(d1) / n;
  rep.delta2 = static_cast<double>(d2) / n;
  rep.delta3 = static_cast<double>(d3) / n;
  rep.rel = rel / n;
  rep.rmse = std::sqrt(sq / n);
  rep.mae = abs_err / n;
  rep.log10 = lg / n;
  rep.ewmae = detail::ewmae_over(pred, gt, idx);
  return rep;
}

inline EvalReport evaluate(const DenseDepthMap& pred, const DenseDepthMap& gt, const PixelMask& mask,
                           EvalRegion region = EvalRegion::kMask) {
  return evaluate(pred, gt, &mask, region);
}

struct DetectionScore {
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
  std::size_t true_positives = 0;
  std::size_t flagged = 0;
  std::size_t positives = 0;
};

/// Scores flags against simulator labels. Only `error` points are positives;
/// shifted points are misaligned, not wrong. Precision is 1 when nothing is
/// flagged and recall is 1 when there are no positives.
inline DetectionScore detector_prf(const std::vector<bool>& flagged, std::span<const PointLabel> labels) {
  if (flagged.size() != labels.size())
    throw DataError("detector_prf: " + std::to_string(flagged.size()) + " flags for " +
                    std::to_string(labels.size()) + " labels");
  DetectionScore s;
  for (std::size_t i = 0; i < flagged.size(); ++i) {
    const bool positive = labels[i] == PointLabel::kError;
    s.positives += positive;
    s.flagged += flagged[i];
    s.true_positives += positive && flagged[i];
  }
  s.precision = s.flagged == 0 ? 1.0 : static_cast<double>(s.true_positives) / static_cast<double>(s.flagged);
  s.recall = s.positives == 0 ? 1.0 : static_cast<double>(s.true_positives) / static_cast<double>(s.positives);
  s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

}  // namespace dtof
