#pragma once

// Command-line front end. Exit status: 0 success, 1 usage error, 2 data error.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dtof/dtof.hpp"

namespace dtof::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

namespace detail {

inline RunConfig load_optional_config(const std::string& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

/// Reads a point CSV and attaches relative depth; rejected points are
/// reported and dropped.
inline SparsePointSet load_paired_points(const std::string& points_path, const RelativeDepthMap& rel,
                                         std::ostream& err, std::vector<PointLabel>* labels = nullptr) {
  io::PointRecords rec = io::read_points(points_path);
  PairingResult paired = pair_points(std::span<const DepthPoint>(rec.points), rel);
  if (!paired.rejected.empty()) {
    err << "warning: " << paired.rejected.size() << " point(s) outside the " << rel.height() << "x"
        << rel.width() << " relative map were ignored (first input index " << paired.rejected.front() << ")\n";
  }
  if (labels && rec.has_labels) {
    std::size_t next = 0;
    labels->clear();
    for (std::size_t i = 0; i < rec.labels.size(); ++i) {
      if (next < paired.rejected.size() && paired.rejected[next] == i) {
        ++next;
        continue;
      }
      labels->push_back(rec.labels[i]);
    }
  }
  return std::move(paired.points);
}

inline int cmd_simulate(const std::string& gt_path, const std::string& config_path,
                        const std::string& out_points, const std::string& out_labels,
                        std::optional<std::uint64_t> seed_flag, const std::string& out_mask,
                        const std::string& report_path) {
  RunConfig cfg = detail::load_optional_config(config_path);
  cfg.sim.seed = resolve_seed(seed_flag, cfg.sim.seed);
  const DenseDepthMap gt = io::read_dense_depth(gt_path);
  const SimOutput sim = simulate(gt, cfg.sim);
  io::write_points(out_points, sim.points);
  if (!out_labels.empty()) io::write_points(out_labels, sim.points, &sim.labels);
  if (!out_mask.empty()) io::write_mask(out_mask, region_pixel_mask(sim, RegionType::kError));
  if (!report_path.empty()) {
    Report rep;
    rep.add("seed", std::to_string(cfg.sim.seed));
    rep.add("points", sim.points.size());
    rep.add("dropped", sim.dropped.size());
    std::size_t counts[3] = {0, 0, 0};
    for (PointLabel l : sim.labels) ++counts[static_cast<int>(l)];
    rep.add("clean", counts[0]);
    rep.add("error", counts[1]);
    rep.add("shifted", counts[2]);
    rep.add("regions", sim.regions.size());
    rep.add("shift_applied", sim.shift.applied ? "true" : "false");
    rep.add("shift_threshold", sim.shift.threshold);
    rep.add("shift_dy_cells", sim.shift.dy_cells);
    rep.add("shift_dx_cells", sim.shift.dx_cells);
    rep.write(report_path);
  }
  return kExitOk;
}

inline int cmd_detect(const std::string& points_path, const std::string& rel_path, bool rel_inverse,
                      const std::string& out_path, const std::string& report_path,
                      const std::string& scores_path, const std::string& config_path, std::ostream& err) {
  const RunConfig cfg = detail::load_optional_config(config_path);
  const RelativeDepthMap rel =
      io::read_relative_depth(rel_path, rel_inverse ? Orientation::kInverseDepth : Orientation::kDepthLike);
  std::vector<PointLabel> labels;
  const SparsePointSet pts = load_paired_points(points_path, rel, err, &labels);
  const AnomalyResult res = detect(pts, cfg.detector);
  io::write_points(out_path, mask_points(pts, res));
  if (!scores_path.empty()) {
    std::string text = "row,col,depth_m,rel,global,region,score,flagged\n";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      text += std::to_string(pts[i].row) + "," + std::to_string(pts[i].col) + "," + io::format_double(pts[i].d) +
              "," + io::format_double(pts[i].r) + "," + io::format_double(res.global[i]) + "," +
              io::format_double(res.region[i]) + "," + io::format_double(res.score[i]) + "," +
              (res.inlier[i] ? "0" : "1") + "\n";
    }
    io::write_file(scores_path, text.data(), text.size());
  }
  if (!report_path.empty()) {
    Report rep;
    append(rep, res);
    if (!labels.empty()) {
      const DetectionScore s = detector_prf(res.flagged(), labels);
      rep.add("positives", s.positives);
      rep.add("true_positives", s.true_positives);
      rep.add("precision", s.precision);
      rep.add("recall", s.recall);
      rep.add("f1", s.f1);
    }
    rep.write(report_path);
  }
  return kExitOk;
}

inline int cmd_complete(const std::string& points_path, const std::string& rel_path, bool rel_inverse,
                        bool run_detect, bool robust, bool residuals, const std::string& domain_flag,
                        const std::string& out_path, const std::string& report_path,
                        const std::string& config_path, std::ostream& err) {
  const RunConfig cfg = detail::load_optional_config(config_path);
  const RelativeDepthMap rel =
      io::read_relative_depth(rel_path, rel_inverse ? Orientation::kInverseDepth : Orientation::kDepthLike);
  SparsePointSet pts = load_paired_points(points_path, rel, err);

  FitDomain domain = rel_inverse ? FitDomain::kInverseDepth : FitDomain::kDepth;
  if (!config_path.empty()) domain = cfg.fit_domain;
  if (domain_flag == "inverse") domain = FitDomain::kInverseDepth;
  else if (domain_flag == "depth") domain = FitDomain::kDepth;

  Report rep;
  rep.add("input_points", pts.size());
  if (run_detect) {
    const AnomalyResult res = detect(pts, cfg.detector);
    append(rep, res, "detect.");
    pts = mask_points(pts, res);
  }
  const AffineFit fit = fit_affine(pts, rel, domain, robust || cfg.robust);
  append(rep, fit, "fit.");
  const DenseDepthMap dense = (residuals || cfg.residuals) ? complete_with_residuals(rel, fit, pts, cfg.sim.spec)
                                                           : complete(rel, fit, cfg.sim.spec);
  io::write_dense_depth(out_path, dense);
  if (!report_path.empty()) rep.write(report_path);
  return kExitOk;
}

inline int cmd_evaluate(const std::string& pred_path, const std::string& gt_path, const std::string& mask_path,
                        bool complement, const std::string& report_path) {
  const DenseDepthMap pred = io::read_dense_depth(pred_path);
  const DenseDepthMap gt = io::read_dense_depth(gt_path);
  Report rep;
  if (mask_path.empty()) {
    append(rep, evaluate(pred, gt));
  } else {
    PixelMask mask = io::read_mask(mask_path);
    if (complement) mask = mask.complement();
    append(rep, evaluate(pred, gt, mask, complement ? EvalRegion::kComplement : EvalRegion::kMask));
  }
  rep.write(report_path);
  return kExitOk;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Sparse dToF simulation, anomaly detection, completion and evaluation", "dtof"};
  app.require_subcommand(1);

  std::string gt, config, out_points, out_labels, out_mask, report, points, rel, out_path, pred, mask, input,
      scores, domain;
  std::optional<std::uint64_t> seed;
  bool rel_inverse = false, run_detect = false, robust = false, residuals = false, complement = false;
  double lo = 0.0, hi = 0.0;

  auto* sim = app.add_subcommand("simulate", "Simulate sparse dToF points from dense ground truth");
  sim->add_option("--gt", gt, "Ground-truth depth (.pfm or 16-bit mm .png)")->required();
  sim->add_option("--config", config, "Run configuration (JSON)")->required();
  sim->add_option("--out-points", out_points, "Output point CSV")->required();
  sim->add_option("--out-labels", out_labels, "Output point CSV with labels")->required();
  sim->add_option("--seed", seed, "Seed (overrides DTOF_SEED and the config)");
  sim->add_option("--out-mask", out_mask, "Optional PNG mask of error-region pixels");
  sim->add_option("--report", report, "Optional summary report");

  auto* det = app.add_subcommand("detect", "Flag anomalous sparse depth points");
  det->add_option("--points", points, "Point CSV")->required();
  det->add_option("--rel", rel, "Relative depth map (.pfm or .png)")->required();
  det->add_flag("--rel-inverse", rel_inverse, "Relative map stores inverse depth");
  det->add_option("--out", out_path, "Output CSV of inlier points")->required();
  det->add_option("--report", report, "Report with detector scalars");
  det->add_option("--scores", scores, "Per-point score CSV");
  det->add_option("--config", config, "Run configuration (JSON)");

  auto* comp = app.add_subcommand("complete", "Align relative depth to the points and densify");
  comp->add_option("--points", points, "Point CSV")->required();
  comp->add_option("--rel", rel, "Relative depth map (.pfm or .png)")->required();
  comp->add_flag("--rel-inverse", rel_inverse, "Relative map stores inverse depth");
  comp->add_flag("--detect", run_detect, "Drop detected anomalies before fitting");
  comp->add_flag("--robust", robust, "Huber IRLS fit");
  comp->add_flag("--residuals", residuals, "Add interpolated per-point residual correction");
  comp->add_option("--domain", domain, "Fit domain (default: inverse with --rel-inverse, else depth)")
      ->check(CLI::IsMember({"inverse", "depth"}));
  comp->add_option("--out", out_path, "Output dense depth (.pfm or .png)")->required();
  comp->add_option("--report", report, "Report with fit diagnostics");
  comp->add_option("--config", config, "Run configuration (JSON)");

  auto* eval = app.add_subcommand("evaluate", "Compare a depth prediction with ground truth");
  eval->add_option("--pred", pred, "Predicted depth")->required();
  eval->add_option("--gt", gt, "Ground-truth depth")->required();
  eval->add_option("--mask", mask, "Optional region mask (.png nonzero or .pfm positive)");
  eval->add_flag("--complement", complement, "Evaluate outside the mask instead");
  eval->add_option("--report", report, "Output report")->required();

  auto* color = app.add_subcommand("colorize", "Render a depth map through a fixed colour table");
  color->add_option("--in", input, "Depth map")->required();
  color->add_option("--min", lo, "Depth mapped to the first table entry")->required();
  color->add_option("--max", hi, "Depth mapped to the last table entry")->required();
  color->add_option("--out", out_path, "Output RGB PNG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  if (complement && mask.empty()) {
    err << "error: --complement requires --mask\n";
    return kExitUsage;
  }

  try {
    if (*sim) return detail::cmd_simulate(gt, config, out_points, out_labels, seed, out_mask, report);
    if (*det) return detail::cmd_detect(points, rel, rel_inverse, out_path, report, scores, config, err);
    if (*comp)
      return detail::cmd_complete(points, rel, rel_inverse, run_detect, robust, residuals, domain, out_path, report,
                                  config, err);
    if (*eval) return detail::cmd_evaluate(pred, gt, mask, complement, report);
    if (*color) {
      io::colorize(io::read_dense_depth(input), lo, hi, out_path);
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace dtof::cli
