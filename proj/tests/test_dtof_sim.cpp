#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dtof/dtof_sim.hpp"
#include "dtof/io.hpp"
#include "scenes.hpp"

namespace dtof {
namespace {

SimConfig quiet_config(std::uint64_t seed = 1) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.spec.noise_rate = 0.0;
  cfg.spec.blank_rate = 0.0;
  cfg.spec.max_shift_dtof_px = 0.0;
  return cfg;
}

std::size_t count_label(const SimOutput& sim, PointLabel l) {
  return static_cast<std::size_t>(std::count(sim.labels.begin(), sim.labels.end(), l));
}

void expect_conserved(const SimOutput& sim) {
  EXPECT_EQ(sim.points.size() + sim.dropped.size(), static_cast<std::size_t>(sim.geometry.rows * sim.geometry.cols));
  EXPECT_EQ(sim.labels.size(), sim.points.size());
  EXPECT_EQ(sim.cells.size(), sim.points.size());
}

TEST(SampleGrid, ConstantFieldEightByEight) {
  SimConfig cfg = quiet_config();
  cfg.spec.dtof_rows = 8;
  cfg.spec.dtof_cols = 8;
  cfg.jitter = 0.0;
  const SimOutput sim = sample_grid(DenseDepthMap::constant(64, 64, 2.0), cfg);
  ASSERT_EQ(sim.points.size(), 64u);
  for (const DepthPoint& p : sim.points) EXPECT_EQ(p.d, 2.0);
  EXPECT_EQ(count_label(sim, PointLabel::kClean), 64u);
}

TEST(SampleGrid, CellSizeAndContainment) {
  SimConfig cfg = quiet_config(3);
  cfg.max_translation = 0.0;
  cfg.max_rotation_deg = 0.0;
  const SimOutput sim = sample_grid(testing::make_scene(3), cfg);
  EXPECT_DOUBLE_EQ(sim.geometry.cell_h, 16.0);
  EXPECT_DOUBLE_EQ(sim.geometry.cell_w, 16.0);
  ASSERT_EQ(sim.points.size(), 1200u);
  for (std::size_t k = 0; k < sim.points.size(); ++k) {
    const int cell = sim.cells[k];
    const double cy = (cell / 40 + 0.5) * 16.0, cx = (cell % 40 + 0.5) * 16.0;
    EXPECT_LE(std::abs(sim.points[k].row + 0.5 - cy), 8.0 + cfg.jitter * 16.0 + 0.5);
    EXPECT_LE(std::abs(sim.points[k].col + 0.5 - cx), 8.0 + cfg.jitter * 16.0 + 0.5);
  }
}

TEST(SampleGrid, PointsInsideFov) {
  SimConfig cfg;
  cfg.seed = 5;
  cfg.spec.fov_fraction = 0.8;
  const SimOutput sim = simulate(testing::make_scene(5, 240, 320), cfg);
  for (const DepthPoint& p : sim.points) EXPECT_TRUE(sim.fov_rect.contains(p.row, p.col));
  expect_conserved(sim);
}

TEST(SampleGrid, InvalidGroundTruthIsDropped) {
  DenseDepthMap gt = DenseDepthMap::constant(60, 80, 3.0);
  for (int r = 0; r < 30; ++r)
    for (int c = 0; c < 80; ++c) gt.set(r, c, 0.0);
  SimConfig cfg = quiet_config();
  cfg.max_translation = 0.0;
  cfg.max_rotation_deg = 0.0;
  cfg.jitter = 0.0;
  const SimOutput sim = sample_grid(gt, cfg);
  EXPECT_EQ(sim.points.size(), 600u);
  EXPECT_EQ(sim.dropped.size(), 600u);
  EXPECT_TRUE(std::is_sorted(sim.dropped.begin(), sim.dropped.end()));
}

TEST(SampleGrid, EmptyFovIsUnusable) {
  EXPECT_THROW(sample_grid(DenseDepthMap(48, 64), quiet_config()), DataError);
}

TEST(SampleGrid, Deterministic) {
  const DenseDepthMap gt = testing::make_scene(9, 240, 320);
  EXPECT_EQ(sample_grid(gt, quiet_config(11)), sample_grid(gt, quiet_config(11)));
  EXPECT_NE(sample_grid(gt, quiet_config(11)).points, sample_grid(gt, quiet_config(12)).points);
}

TEST(RegionAnomalies, ZeroRegionsIsIdentity) {
  const SimOutput base = sample_grid(testing::make_scene(2, 240, 320), quiet_config(2));
  EXPECT_EQ(inject_region_anomalies(base, quiet_config(2)), base);
}

TEST(RegionAnomalies, AbsenceBlobRemovesItsCells) {
  SimConfig cfg = quiet_config(4);
  cfg.region_count_min = cfg.region_count_max = 1;
  cfg.region_area_min = cfg.region_area_max = 0.10;
  cfg.error_region_probability = 0.0;
  const SimOutput base = sample_grid(testing::make_scene(4, 240, 320), cfg);
  const SimOutput out = inject_region_anomalies(base, cfg);
  ASSERT_EQ(out.regions.size(), 1u);
  EXPECT_EQ(out.regions[0].type, RegionType::kAbsence);
  const std::size_t blob = out.regions[0].cells.size();
  EXPECT_NEAR(static_cast<double>(blob), 120.0, 12.0);
  EXPECT_EQ(base.points.size() - out.points.size(), blob);
  EXPECT_EQ(count_label(out, PointLabel::kError), 0u);
  for (int c : out.regions[0].cells) EXPECT_TRUE(std::binary_search(out.dropped.begin(), out.dropped.end(), c));
  expect_conserved(out);
}

TEST(RegionAnomalies, ErrorBlobUniformRedraw) {
  SimConfig cfg = quiet_config(6);
  cfg.region_count_min = cfg.region_count_max = 1;
  cfg.error_region_probability = 1.0;
  const SimOutput out = inject_region_anomalies(sample_grid(testing::make_scene(6, 240, 320), cfg), cfg);
  ASSERT_EQ(out.regions.size(), 1u);
  EXPECT_EQ(count_label(out, PointLabel::kError), out.regions[0].cells.size());
  for (std::size_t k = 0; k < out.points.size(); ++k) {
    const bool in_blob = std::binary_search(out.regions[0].cells.begin(), out.regions[0].cells.end(), out.cells[k]);
    EXPECT_EQ(in_blob, out.labels[k] == PointLabel::kError);
    if (in_blob) {
      EXPECT_GE(out.points[k].d, cfg.spec.d_min);
      EXPECT_LE(out.points[k].d, cfg.spec.d_max);
    }
  }
}

TEST(RegionAnomalies, MultiplicativePolicyScalesDepth) {
  SimConfig cfg = quiet_config(8);
  cfg.region_count_min = cfg.region_count_max = 1;
  cfg.error_region_probability = 1.0;
  cfg.error_policy = ErrorPolicy::kMultiplicative;
  cfg.error_scale_min = cfg.error_scale_max = 2.0;
  const SimOutput base = sample_grid(DenseDepthMap::constant(240, 320, 1.5), cfg);
  const SimOutput out = inject_region_anomalies(base, cfg);
  for (std::size_t k = 0; k < out.points.size(); ++k)
    EXPECT_EQ(out.points[k].d, out.labels[k] == PointLabel::kError ? 3.0 : 1.5);
}

TEST(RegionAnomalies, BlobAreaWithinRange) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    SimConfig cfg = quiet_config(seed);
    cfg.region_count_min = 1;
    cfg.region_count_max = 3;
    cfg.region_area_min = 0.08;
    cfg.region_area_max = 0.12;
    const SimOutput out = inject_region_anomalies(sample_grid(DenseDepthMap::constant(120, 160, 2.0), cfg), cfg);
    for (const AnomalyRegion& r : out.regions) {
      EXPECT_GE(r.cells.size(), 84u) << "seed " << seed;
      EXPECT_LE(r.cells.size(), 156u) << "seed " << seed;
    }
    expect_conserved(out);
  }
}

TEST(CalibrationError, ZeroShiftIsIdentity) {
  const DenseDepthMap gt = testing::make_scene(2, 240, 320);
  const SimOutput base = sample_grid(gt, quiet_config(2));
  EXPECT_EQ(inject_calibration_error(base, gt, quiet_config(2)), base);
}

TEST(CalibrationError, ConstantFieldShiftsNothing) {
  SimConfig cfg = quiet_config(3);
  cfg.spec.max_shift_dtof_px = 2.0;
  const DenseDepthMap gt = DenseDepthMap::constant(240, 320, 2.0);
  const SimOutput out = inject_calibration_error(sample_grid(gt, cfg), gt, cfg);
  EXPECT_EQ(out.shift.threshold, 2.0);
  EXPECT_EQ(count_label(out, PointLabel::kShifted), 0u);
}

TEST(CalibrationError, DisplacementBounded) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    SimConfig cfg = quiet_config(seed);
    cfg.spec.max_shift_dtof_px = 2.0;
    const DenseDepthMap gt = testing::make_scene(seed);
    const SimOutput base = sample_grid(gt, cfg);
    const SimOutput out = inject_calibration_error(base, gt, cfg);
    EXPECT_LE(out.shift.magnitude_cells(), 2.0);
    EXPECT_LE(std::hypot(out.shift.dy_px, out.shift.dx_px), 32.0);
    std::vector<const DepthPoint*> by_cell(1200, nullptr);
    for (std::size_t k = 0; k < base.points.size(); ++k) by_cell[static_cast<std::size_t>(base.cells[k])] = &base.points[k];
    for (std::size_t k = 0; k < out.points.size(); ++k) {
      const DepthPoint& src = *by_cell[static_cast<std::size_t>(out.cells[k])];
      if (out.labels[k] == PointLabel::kShifted) {
        EXPECT_GT(src.d, out.shift.threshold);
        EXPECT_EQ(out.points[k].row - src.row, out.shift.dy_px);
        EXPECT_EQ(out.points[k].col - src.col, out.shift.dx_px);
        EXPECT_EQ(out.points[k].d, gt(out.points[k].row, out.points[k].col));
      }
    }
    expect_conserved(out);
  }
}

TEST(RandomNoise, ZeroRatesIdentity) {
  const SimOutput base = sample_grid(testing::make_scene(1, 240, 320), quiet_config(1));
  EXPECT_EQ(inject_random_noise(base, quiet_config(1)), base);
}

TEST(RandomNoise, SaturatedNoise) {
  SimConfig cfg = quiet_config(1);
  cfg.spec.noise_rate = 1.0;
  const SimOutput out = inject_random_noise(sample_grid(testing::make_scene(1, 240, 320), cfg), cfg);
  EXPECT_EQ(count_label(out, PointLabel::kError), out.points.size());
  for (const DepthPoint& p : out.points) {
    EXPECT_GE(p.d, cfg.spec.d_min);
    EXPECT_LE(p.d, cfg.spec.d_max);
  }
}

TEST(RandomNoise, RatesMustNotExceedOne) {
  SimConfig cfg = quiet_config(1);
  cfg.spec.noise_rate = 0.6;
  cfg.spec.blank_rate = 0.6;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(RandomNoise, BinomialCounts) {
  const DenseDepthMap gt = DenseDepthMap::constant(240, 320, 2.0);
  double noise = 0.0, blank = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SimConfig cfg = quiet_config(seed);
    cfg.spec.noise_rate = 0.05;
    cfg.spec.blank_rate = 0.05;
    const SimOutput out = inject_random_noise(sample_grid(gt, cfg), cfg);
    noise += static_cast<double>(count_label(out, PointLabel::kError));
    blank += static_cast<double>(out.dropped.size());
  }
  // Mean of 100 frames: sd of one frame is sqrt(1200 * 0.05 * 0.95) ~ 7.5.
  EXPECT_NEAR(noise / 100.0, 60.0, 12.0);
  EXPECT_NEAR(blank / 100.0, 60.0, 12.0);
}

TEST(Simulate, QuietKnobsArePureSampling) {
  const DenseDepthMap gt = testing::make_scene(4, 240, 320);
  EXPECT_EQ(simulate(gt, quiet_config(4)), sample_grid(gt, quiet_config(4)));
}

TEST(Simulate, DefaultsPartitionLabelsAndConserve) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SimConfig cfg;
    cfg.seed = seed;
    cfg.region_count_min = 0;
    cfg.region_count_max = 2;
    const DenseDepthMap gt = testing::make_scene(seed, 240, 320);
    const SimOutput out = simulate(gt, cfg);
    expect_conserved(out);
    EXPECT_EQ(count_label(out, PointLabel::kClean) + count_label(out, PointLabel::kError) +
                  count_label(out, PointLabel::kShifted),
              out.points.size());
    for (const DepthPoint& p : out.points) {
      EXPECT_GT(p.d, 0.0);
      EXPECT_LE(p.d, cfg.spec.d_max);
    }
    EXPECT_EQ(simulate(gt, cfg), out);
  }
}

TEST(Simulate, RegionPixelMaskCoversBlobCells) {
  SimConfig cfg = quiet_config(5);
  cfg.region_count_min = cfg.region_count_max = 1;
  cfg.error_region_probability = 1.0;
  const SimOutput out = simulate(testing::make_scene(5, 240, 320), cfg);
  const PixelMask mask = region_pixel_mask(out, RegionType::kError);
  EXPECT_EQ(mask.count(), out.regions[0].cells.size() * 64u);
  EXPECT_EQ(region_pixel_mask(out, RegionType::kAbsence).count(), 0u);
}

// Recorded output of this implementation; guards the determinism contract
// across compilers and platforms.
TEST(Simulate, GoldenFixture) {
  SimConfig cfg;
  cfg.seed = 42;
  cfg.spec.dtof_rows = 8;
  cfg.spec.dtof_cols = 8;
  cfg.region_count_min = cfg.region_count_max = 1;
  const SimOutput out = simulate(testing::make_scene(42, 64, 80), cfg);
  const std::string text = io::format_points(out.points, &out.labels);
  const std::string path = std::string(DTOF_SOURCE_DIR) + "/tests/data/golden_sim_seed42.csv";
  std::ifstream in(path, std::ios::binary);
  ASSERT_TRUE(in) << "missing " << path;
  std::stringstream golden;
  golden << in.rdbuf();
  EXPECT_EQ(text, golden.str());
}

}  // namespace
}  // namespace dtof
