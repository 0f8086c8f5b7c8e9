#pragma once

// Flat `key=value` records, one per line, in insertion order. Doubles use the
// shortest round-trip decimal, so identical inputs give identical bytes.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "dtof/align.hpp"
#include "dtof/anomaly.hpp"
#include "dtof/io.hpp"
#include "dtof/metrics.hpp"

namespace dtof {

class Report {
 public:
  void add(const std::string& key, double v) {
    std::string text;
    if (std::isinf(v)) text = v > 0 ? "inf" : "-inf";
    else if (std::isnan(v)) text = "nan";
    else text = io::format_double(v);
    entries_.emplace_back(key, std::move(text));
  }
  void add(const std::string& key, std::size_t v) { entries_.emplace_back(key, std::to_string(v)); }
  void add(const std::string& key, int v) { entries_.emplace_back(key, std::to_string(v)); }
  void add(const std::string& key, const char* v) { entries_.emplace_back(key, v); }
  void add(const std::string& key, const std::string& v) { entries_.emplace_back(key, v); }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string str() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
    return out;
  }

  void write(const std::string& path) const {
    const std::string text = str();
    io::write_file(path, text.data(), text.size());
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

inline void append(Report& rep, const EvalReport& e, const std::string& prefix = "") {
  rep.add(prefix + "region", to_string(e.region));
  rep.add(prefix + "n_pixels", e.n_pixels);
  rep.add(prefix + "delta1", e.delta1);
  rep.add(prefix + "delta2", e.delta2);
  rep.add(prefix + "delta3", e.delta3);
  rep.add(prefix + "rel", e.rel);
  rep.add(prefix + "rmse", e.rmse);
  rep.add(prefix + "mae", e.mae);
  rep.add(prefix + "log10", e.log10);
  rep.add(prefix + "ewmae", e.ewmae);
}

inline void append(Report& rep, const AnomalyResult& a, const std::string& prefix = "") {
  rep.add(prefix + "n_points", a.inlier.size());
  rep.add(prefix + "gamma", a.gamma);
  rep.add(prefix + "t_otsu", a.t_otsu);
  rep.add(prefix + "t_stat", a.t_stat);
  rep.add(prefix + "t", a.t);
  rep.add(prefix + "flagged", a.flagged_count());
  rep.add(prefix + "inliers", a.inlier.size() - a.flagged_count());
}

inline void append(Report& rep, const AffineFit& f, const std::string& prefix = "") {
  rep.add(prefix + "domain", f.domain == FitDomain::kDepth ? "depth" : "inverse");
  rep.add(prefix + "robust", f.robust ? "true" : "false");
  rep.add(prefix + "a", f.a);
  rep.add(prefix + "b", f.b);
  rep.add(prefix + "rmse_fit", f.rmse_fit);
  rep.add(prefix + "support", f.support);
}

}  // namespace dtof
