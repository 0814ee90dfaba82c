#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "procams/adapt.hpp"
#include "procams/dataset.hpp"
#include "procams/metrics.hpp"
#include "procams/photomodel.hpp"
#include "procams/scene.hpp"

#include "json.hpp"

namespace procams {

/// One scored condition of an evaluation run.
struct EvalCondition {
  int scene = 0;
  int style = 0;                  // target index for simulation accuracy runs
  std::string loss_set;           // "none" for the no-adaptation baseline
  MetricsTriple metrics;
  int iterations = 0;
  bool converged = true;
};

struct EvalReport {
  std::string kind;               // "sim" or "psa"
  nlohmann::ordered_json config;  // full echo of seeds, sizes, loss sets
  std::vector<EvalCondition> conditions;
  std::vector<double> prediction_rmse;  // sim runs: per test pair

  /// Arithmetic means over the conditions carrying this loss_set label.
  MetricsTriple mean_metrics(const std::string& loss_set) const;
  double mean_iterations(const std::string& loss_set) const;
  double mean_prediction_rmse() const;
};

/// RMSE of the clamped model prediction against the capture, per pair.
/// Shared by `fit` reporting and the simulation-accuracy report so both
/// always print the same number.
std::vector<double> prediction_rmse(const PhotometricModel& model,
                                    const std::vector<ImagePair>& pairs);

/// Simulation accuracy: for each target, compare the simulated captured
/// compensation (clamped prediction of the unclamped compensation) with the
/// ground-truth capture of the clamped compensation.
EvalReport eval_sim_accuracy(const Scene& scene, const PhotometricModel& model,
                             const std::vector<ImageRGB>& targets);

/// Stylization targets for adaptation runs: bright, saturated procedural
/// images that are deliberately hard to reproduce on dark surface regions.
std::vector<ImageRGB> make_styles(int n, int height, int width,
                                  std::uint64_t seed);

struct PsaEvalConfig {
  std::uint64_t seed = 0;
  int n_train = 24;  // pairs for the per-scene model fit
  int n_test = 4;
  FitConfig fit;
  AdaptConfig adapt;       // losses come from the per-condition loss set
  bool include_baseline = true;
  // fit a second simulator model on the other half of the training pairs and
  // run adaptation against it, so compensator and simulator are independent
  bool independent_sim = false;
  int threads = 0;         // 0 = hardware concurrency
};

/// Adaptation study over a scene x style grid: every requested loss set is
/// run through adapt_surface, the final compensation is projected through
/// the ground-truth scene and scored against the final stylization. The
/// "none" baseline compensates the unadapted style directly.
EvalReport eval_psa(const std::vector<Scene>& scenes,
                    const std::vector<ImageRGB>& styles,
                    const std::vector<LossSet>& loss_sets,
                    const PsaEvalConfig& cfg);

nlohmann::ordered_json report_to_json(const EvalReport& report);
void write_report(const EvalReport& report, const std::string& path);

}  // namespace procams
