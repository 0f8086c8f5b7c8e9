#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dtof_cli.hpp"
#include "scenarios.hpp"

namespace dtof {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dtof");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::map<std::string, std::string> read_report(const std::string& path) {
  const auto bytes = io::read_file(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("dtof_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write_text(const std::string& name, const std::string& text) const {
    io::write_file(path(name), text.data(), text.size());
  }

  // Scene, ideal inverse-depth prediction, and an error-blob config.
  void write_fixture(std::uint64_t seed) const {
    const DenseDepthMap gt = testing::make_scene(seed, testing::kFrameHeight, testing::kFrameWidth);
    io::write_dense_depth(path("gt.pfm"), gt);
    io::write_relative_depth(path("rel.pfm"), testing::make_inverse_relative(gt));
    write_text("blob.json", R"({"seed": 3, "sensor": {"noise_rate": 0, "blank_rate": 0, "max_shift_dtof_px": 0},
      "simulation": {"region_count": [1, 1], "region_area": [0.08, 0.12], "error_region_probability": 1.0}})");
    write_text("clean.json", R"({"sensor": {"noise_rate": 0, "blank_rate": 0, "max_shift_dtof_px": 0}})");
  }

  fs::path dir_;
};

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
  const Result unknown = run_cli({"detect", "--bogus"});
  EXPECT_EQ(unknown.code, cli::kExitUsage);
  EXPECT_NE(unknown.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"detect", "--points", "a.csv"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"evaluate", "--pred", "a", "--gt", "b", "--report", "c", "--complement"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"complete", "--points", "a", "--rel", "b", "--out", "c", "--domain", "log"}).code,
            cli::kExitUsage);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
}

TEST_F(CliTest, DataErrors) {
  const Result missing = run_cli({"evaluate", "--pred", path("none.pfm"), "--gt", path("none.pfm"), "--report", path("r.txt")});
  EXPECT_EQ(missing.code, cli::kExitData);
  EXPECT_NE(missing.err.find("none.pfm"), std::string::npos);
  write_text("bad.json", R"({"sensr": {}})");
  write_fixture(1);
  const Result bad = run_cli({"simulate", "--gt", path("gt.pfm"), "--config", path("bad.json"), "--out-points",
                              path("p.csv"), "--out-labels", path("l.csv")});
  EXPECT_EQ(bad.code, cli::kExitData);
  EXPECT_NE(bad.err.find("sensr"), std::string::npos);
  EXPECT_EQ(run_cli({"colorize", "--in", path("gt.pfm"), "--min", "3", "--max", "1", "--out", path("c.png")}).code,
            cli::kExitData);
}

TEST_F(CliTest, CleanFixtureGateHolds) {
  write_fixture(2);
  ASSERT_EQ(run_cli({"simulate", "--gt", path("gt.pfm"), "--config", path("clean.json"), "--out-points", path("p.csv"),
                     "--out-labels", path("l.csv")}).code,
            0);
  ASSERT_EQ(run_cli({"detect", "--points", path("l.csv"), "--rel", path("rel.pfm"), "--rel-inverse", "--out",
                     path("kept.csv"), "--report", path("det.txt")}).code,
            0);
  const auto rep = read_report(path("det.txt"));
  EXPECT_GT(std::stod(rep.at("gamma")), 0.95);
  EXPECT_EQ(rep.at("flagged"), "0");
  EXPECT_EQ(rep.at("t"), "inf");
  EXPECT_EQ(io::read_points(path("kept.csv")).points.size(), io::read_points(path("p.csv")).points.size());
}

TEST_F(CliTest, DetectImprovesBlobCompletion) {
  write_fixture(3);
  ASSERT_EQ(run_cli({"simulate", "--gt", path("gt.pfm"), "--config", path("blob.json"), "--out-points", path("p.csv"),
                     "--out-labels", path("l.csv"), "--out-mask", path("blob.png"), "--report", path("sim.txt")}).code,
            0);
  EXPECT_EQ(read_report(path("sim.txt")).at("regions"), "1");
  for (const char* variant : {"plain", "detect"}) {
    std::vector<std::string> args = {"complete", "--points", path("p.csv"), "--rel", path("rel.pfm"), "--rel-inverse",
                                     "--out", path(std::string(variant) + ".pfm"), "--report",
                                     path(std::string(variant) + "_fit.txt")};
    if (std::string(variant) == "detect") args.push_back("--detect");
    ASSERT_EQ(run_cli(args).code, 0);
    ASSERT_EQ(run_cli({"evaluate", "--pred", path(std::string(variant) + ".pfm"), "--gt", path("gt.pfm"), "--mask",
                       path("blob.png"), "--report", path(std::string(variant) + "_eval.txt")}).code,
              0);
  }
  const auto plain = read_report(path("plain_eval.txt")), cleaned = read_report(path("detect_eval.txt"));
  EXPECT_EQ(plain.at("region"), "mask");
  EXPECT_LT(std::stod(cleaned.at("rmse")), std::stod(plain.at("rmse")));
  EXPECT_EQ(read_report(path("detect_fit.txt")).count("detect.flagged"), 1u);
}

TEST_F(CliTest, DetectReportsPrecisionRecallWithLabels) {
  write_fixture(4);
  ASSERT_EQ(run_cli({"simulate", "--gt", path("gt.pfm"), "--config", path("blob.json"), "--out-points", path("p.csv"),
                     "--out-labels", path("l.csv")}).code,
            0);
  ASSERT_EQ(run_cli({"detect", "--points", path("l.csv"), "--rel", path("rel.pfm"), "--rel-inverse", "--out",
                     path("kept.csv"), "--report", path("det.txt"), "--scores", path("scores.csv")}).code,
            0);
  const auto rep = read_report(path("det.txt"));
  for (const char* key : {"n_points", "gamma", "t_otsu", "t_stat", "t", "flagged", "precision", "recall", "f1"})
    EXPECT_EQ(rep.count(key), 1u) << key;
  const auto scores = io::read_file(path("scores.csv"));
  EXPECT_EQ(std::string(scores.begin(), scores.begin() + 10), "row,col,de");
}

TEST_F(CliTest, SeedPrecedence) {
  write_fixture(5);
  auto sim = [&](const std::string& out, std::vector<std::string> extra) {
    std::vector<std::string> args = {"simulate", "--gt", path("gt.pfm"), "--config", path("blob.json"),
                                     "--out-points", path(out), "--out-labels", path("l.csv")};
    args.insert(args.end(), extra.begin(), extra.end());
    EXPECT_EQ(run_cli(args).code, 0);
    return io::read_file(path(out));
  };
  const auto from_config = sim("a.csv", {});
  const auto same_flag = sim("b.csv", {"--seed", "3"});
  const auto other_flag = sim("c.csv", {"--seed", "4"});
  EXPECT_EQ(from_config, same_flag);
  EXPECT_NE(from_config, other_flag);
}

TEST_F(CliTest, EvaluateComplementAndColorize) {
  write_fixture(6);
  io::write_mask(path("m.png"), PixelMask(testing::kFrameHeight, testing::kFrameWidth, true));
  EXPECT_EQ(run_cli({"evaluate", "--pred", path("gt.pfm"), "--gt", path("gt.pfm"), "--report", path("all.txt")}).code, 0);
  const auto all = read_report(path("all.txt"));
  EXPECT_EQ(all.at("delta1"), "1");
  EXPECT_EQ(all.at("rmse"), "0");
  // Complement of an all-true mask is empty.
  EXPECT_EQ(run_cli({"evaluate", "--pred", path("gt.pfm"), "--gt", path("gt.pfm"), "--mask", path("m.png"),
                     "--complement", "--report", path("c.txt")}).code,
            cli::kExitData);
  EXPECT_EQ(run_cli({"colorize", "--in", path("gt.pfm"), "--min", "0.5", "--max", "6", "--out", path("c.png")}).code, 0);
  EXPECT_EQ(io::read_png(path("c.png")).channels, 3);
}

TEST_F(CliTest, CompleteOptionsAndPngOutput) {
  write_fixture(7);
  ASSERT_EQ(run_cli({"simulate", "--gt", path("gt.pfm"), "--config", path("clean.json"), "--out-points", path("p.csv"),
                     "--out-labels", path("l.csv")}).code,
            0);
  ASSERT_EQ(run_cli({"complete", "--points", path("p.csv"), "--rel", path("rel.pfm"), "--rel-inverse", "--robust",
                     "--residuals", "--out", path("d.png"), "--report", path("fit.txt")}).code,
            0);
  const auto fit = read_report(path("fit.txt"));
  EXPECT_EQ(fit.at("fit.domain"), "inverse");
  EXPECT_EQ(fit.at("fit.robust"), "true");
  ASSERT_EQ(run_cli({"evaluate", "--pred", path("d.png"), "--gt", path("gt.pfm"), "--report", path("e.txt")}).code, 0);
  EXPECT_LT(std::stod(read_report(path("e.txt")).at("rmse")), 0.01);
  ASSERT_EQ(run_cli({"complete", "--points", path("p.csv"), "--rel", path("rel.pfm"), "--rel-inverse", "--domain",
                     "depth", "--out", path("e.pfm"), "--report", path("fit2.txt")}).code,
            0);
  EXPECT_EQ(read_report(path("fit2.txt")).at("fit.domain"), "depth");
}

TEST_F(CliTest, PointsOutsideRelativeMapWarn) {
  write_fixture(8);
  write_text("p.csv", "row,col,depth_m\n1,1,2\n5,5,3\n7,9,2.5\n9999,1,1\n");
  const Result r = run_cli({"detect", "--points", path("p.csv"), "--rel", path("rel.pfm"), "--rel-inverse", "--out",
                            path("kept.csv")});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  EXPECT_LE(io::read_points(path("kept.csv")).points.size(), 3u);
  ASSERT_EQ(run_cli({"detect", "--points", path("p.csv"), "--rel", path("rel.pfm"), "--rel-inverse", "--out",
                     path("kept.csv"), "--report", path("det.txt")}).code,
            0);
  EXPECT_EQ(read_report(path("det.txt")).at("n_points"), "3");
}

}  // namespace
}  // namespace dtof
