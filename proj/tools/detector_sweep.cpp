// Sweeps the single-error-blob scenario (30x40 cells, blob over 8-12% of the
// cells) over seeds and prints median detector precision/recall and in-blob
// completion RMSE as a markdown table.
//
//   detector_sweep [seeds=100]

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "scenarios.hpp"

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

int main(int argc, char** argv) {
  using dtof::ErrorPolicy;
  using dtof::testing::SceneDepth;
  const int seeds = argc > 1 ? std::atoi(argv[1]) : 100;
  if (seeds < 1) {
    std::fprintf(stderr, "usage: detector_sweep [seeds>=1]\n");
    return 1;
  }
  struct Case {
    const char* scene;
    SceneDepth depth;
    double distortion;
    ErrorPolicy policy;
  };
  const SceneDepth shallow{1.5, 3.0}, indoor{2.5, 5.0}, deep{4.0, 6.5};
  const Case cases[] = {
      {"shallow 1.5-3 m", shallow, 0.0, ErrorPolicy::kUniformRedraw},
      {"indoor 2.5-5 m", indoor, 0.0, ErrorPolicy::kUniformRedraw},
      {"deep 4-6.5 m", deep, 0.0, ErrorPolicy::kUniformRedraw},
      {"indoor 2.5-5 m", indoor, 0.02, ErrorPolicy::kUniformRedraw},
      {"indoor 2.5-5 m", indoor, 0.05, ErrorPolicy::kUniformRedraw},
      {"indoor 2.5-5 m", indoor, 0.10, ErrorPolicy::kUniformRedraw},
      {"indoor 2.5-5 m", indoor, 0.0, ErrorPolicy::kMultiplicative},
      {"indoor 2.5-5 m", indoor, 0.02, ErrorPolicy::kMultiplicative},
  };

  std::printf("| scene (back wall) | MDE distortion | error policy | median recall | median precision | "
              "median Otsu-only recall | median Otsu-only precision | median blob RMSE plain | "
              "median blob RMSE detect |\n");
  std::printf("|---|---|---|---|---|---|---|---|---|\n");
  dtof::DetectorConfig otsu_only;
  otsu_only.threshold_mode = dtof::ThresholdMode::kOtsuOnly;
  for (const Case& c : cases) {
    std::vector<double> rec, prec, rec_otsu, prec_otsu, plain, cleaned;
    for (int s = 0; s < seeds; ++s) {
      const auto seed = static_cast<std::uint64_t>(s);
      const auto out = dtof::testing::run_blob_frame(seed, c.distortion, {}, c.depth, c.policy);
      const auto base = dtof::testing::run_blob_frame(seed, c.distortion, otsu_only, c.depth, c.policy);
      rec.push_back(out.score.recall);
      prec.push_back(out.score.precision);
      rec_otsu.push_back(base.score.recall);
      prec_otsu.push_back(base.score.precision);
      plain.push_back(out.rmse_plain);
      cleaned.push_back(out.rmse_detect);
    }
    std::printf("| %s | %.2f | %s | %.3f | %.3f | %.3f | %.3f | %.3f | %.3f |\n", c.scene, c.distortion,
                c.policy == ErrorPolicy::kUniformRedraw ? "uniform redraw" : "x2 depth", median(rec),
                median(prec), median(rec_otsu), median(prec_otsu), median(plain), median(cleaned));
  }
  return 0;
}
