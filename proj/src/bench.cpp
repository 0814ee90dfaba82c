#include "procams/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace procams {

namespace {

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

}  // namespace

MetricsTriple EvalReport::mean_metrics(const std::string& loss_set) const {
  std::vector<double> p, r, s;
  for (const auto& c : conditions)
    if (c.loss_set == loss_set) {
      p.push_back(c.metrics.psnr);
      r.push_back(c.metrics.rmse);
      s.push_back(c.metrics.ssim);
    }
  MetricsTriple t;
  t.psnr = mean_of(p);
  t.rmse = mean_of(r);
  t.ssim = mean_of(s);
  return t;
}

double EvalReport::mean_iterations(const std::string& loss_set) const {
  std::vector<double> it;
  for (const auto& c : conditions)
    if (c.loss_set == loss_set) it.push_back(c.iterations);
  return mean_of(it);
}

double EvalReport::mean_prediction_rmse() const {
  return mean_of(prediction_rmse);
}

std::vector<double> prediction_rmse(const PhotometricModel& model,
                                    const std::vector<ImagePair>& pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& pair : pairs)
    out.push_back(rmse(clamp01(predict(model, pair.projector)), pair.captured));
  return out;
}

EvalReport eval_sim_accuracy(const Scene& scene, const PhotometricModel& model,
                             const std::vector<ImageRGB>& targets) {
  if (targets.empty())
    throw std::invalid_argument("eval_sim_accuracy: no targets");
  EvalReport report;
  report.kind = "sim";
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const CompensationResult comp = invert_analytic(model, targets[i]);
    // both sides consume the image that physically gets projected
    const ImageRGB simulated = clamp01(predict(model, comp.projector_input));
    const ImageRGB captured = captured_compensation(scene, comp);
    EvalCondition cond;
    cond.scene = 0;
    cond.style = static_cast<int>(i);
    cond.loss_set = "sim";
    cond.metrics = compute_metrics(simulated, captured);
    report.conditions.push_back(cond);
  }
  return report;
}

std::vector<ImageRGB> make_styles(int n, int height, int width,
                                  std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("make_styles: n must be >= 1");
  std::vector<ImageRGB> styles;
  styles.reserve(n);
  for (int k = 0; k < n; ++k) {
    Rng rng(stream_seed(seed, "style", static_cast<std::uint64_t>(k)));
    // smooth colorful base, pushed bright so dark surface regions struggle
    ImageRGB coarse(8, 8);
    for (double& v : coarse.data) v = rng.uniform();
    ImageRGB img = upsample_bilinear(coarse, height, width);
    const Vec3 tint = {rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0),
                       rng.uniform(0.6, 1.0)};
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        for (int c = 0; c < 3; ++c) {
          double v = 0.35 + 0.6 * img.at(y, x, c);
          img.at(y, x, c) = std::min(1.0, v * tint[c]);
        }
    if (k % 3 == 2) {
      // overlay a bright diagonal gradient on every third style
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
          const double t =
              (double(x) / std::max(1, width - 1) +
               double(y) / std::max(1, height - 1)) / 2.0;
          for (int c = 0; c < 3; ++c) {
            double v = img.at(y, x, c) * (0.75 + 0.25 * t) + 0.15 * t;
            img.at(y, x, c) = std::min(1.0, v);
          }
        }
    }
    styles.push_back(std::move(img));
  }
  return styles;
}

namespace {

struct ConditionTask {
  int scene_idx;
  int style_idx;
  int loss_idx;  // -1 = baseline
};

EvalCondition run_condition(const Scene& scene, const PhotometricModel& model,
                            const PhotometricModel* sim,
                            const ImageRGB& i_plus, const ImageRGB& i_minus,
                            const ImageRGB& style, const ConditionTask& task,
                            const std::vector<LossSet>& loss_sets,
                            const PsaEvalConfig& cfg) {
  EvalCondition cond;
  cond.scene = task.scene_idx;
  cond.style = task.style_idx;
  if (task.loss_idx < 0) {
    // no adaptation: compensate the style directly and project it
    cond.loss_set = "none";
    const CompensationResult comp = invert_analytic(model, style);
    const ImageRGB captured = captured_compensation(scene, comp);
    cond.metrics = compute_metrics(captured, style);
    cond.iterations = 0;
    cond.converged = true;
  } else {
    AdaptConfig acfg = cfg.adapt;
    acfg.losses = loss_sets[task.loss_idx];
    cond.loss_set = to_string(acfg.losses);
    const AdaptResult res =
        adapt_surface(model, style, i_plus, i_minus, acfg, sim);
    const ImageRGB captured =
        project_capture(scene, res.compensation.projector_input);
    cond.metrics = compute_metrics(captured, res.stylized);
    cond.iterations = res.iterations;
    cond.converged = res.converged;
  }
  return cond;
}

}  // namespace

EvalReport eval_psa(const std::vector<Scene>& scenes,
                    const std::vector<ImageRGB>& styles,
                    const std::vector<LossSet>& loss_sets,
                    const PsaEvalConfig& cfg) {
  if (scenes.empty() || styles.empty())
    throw std::invalid_argument("eval_psa: need at least one scene and style");
  if (loss_sets.empty() && !cfg.include_baseline)
    throw std::invalid_argument("eval_psa: no conditions requested");

  // per-scene model fit, on a setup built from the scene
  struct SceneData {
    PhotometricModel model;
    PhotometricModel sim_model;  // only with cfg.independent_sim
    ImageRGB i_plus, i_minus;
  };
  std::vector<SceneData> fitted(scenes.size());
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const Setup setup =
        build_setup(scenes[s], cfg.n_train, cfg.n_test,
                    stream_seed(cfg.seed, "eval-setup", s));
    FitConfig fc = cfg.fit;
    fc.seed = stream_seed(cfg.seed, "eval-fit", s);
    if (cfg.independent_sim && cfg.n_train >= 8) {
      // disjoint halves, so the compensator and the simulator carry
      // independent estimation noise
      Setup half = setup;
      half.train_pairs.assign(setup.train_pairs.begin(),
                              setup.train_pairs.begin() + cfg.n_train / 2);
      half.manifest.n_train = cfg.n_train / 2;
      fitted[s].model = fit(half, fc);
      half.train_pairs.assign(setup.train_pairs.begin() + cfg.n_train / 2,
                              setup.train_pairs.end());
      FitConfig fc2 = fc;
      fc2.seed = stream_seed(cfg.seed, "eval-fit-sim", s);
      fitted[s].sim_model = fit(half, fc2);
    } else {
      fitted[s].model = fit(setup, fc);
    }
    fitted[s].i_plus = setup.i_plus;
    fitted[s].i_minus = setup.i_minus;
  }

  std::vector<ConditionTask> tasks;
  for (std::size_t s = 0; s < scenes.size(); ++s)
    for (std::size_t t = 0; t < styles.size(); ++t) {
      if (cfg.include_baseline)
        tasks.push_back({static_cast<int>(s), static_cast<int>(t), -1});
      for (std::size_t l = 0; l < loss_sets.size(); ++l)
        tasks.push_back(
            {static_cast<int>(s), static_cast<int>(t), static_cast<int>(l)});
    }

  // conditions are independent and individually deterministic, so running
  // them on a pool cannot change the assembled report
  std::vector<EvalCondition> results(tasks.size());
  unsigned n_threads = cfg.threads > 0
                           ? static_cast<unsigned>(cfg.threads)
                           : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, 8u);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const ConditionTask& task = tasks[i];
      const SceneData& sd = fitted[task.scene_idx];
      const PhotometricModel* sim =
          cfg.independent_sim && sd.sim_model.height() > 0 ? &sd.sim_model
                                                           : nullptr;
      results[i] =
          run_condition(scenes[task.scene_idx], sd.model, sim, sd.i_plus,
                        sd.i_minus, styles[task.style_idx], task, loss_sets,
                        cfg);
    }
  };
  if (n_threads <= 1 || tasks.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  EvalReport report;
  report.kind = "psa";
  report.conditions = std::move(results);

  nlohmann::ordered_json cfg_json;
  cfg_json["seed"] = cfg.seed;
  cfg_json["n_scenes"] = scenes.size();
  cfg_json["n_styles"] = styles.size();
  cfg_json["n_train"] = cfg.n_train;
  cfg_json["n_test"] = cfg.n_test;
  cfg_json["height"] = scenes[0].height();
  cfg_json["width"] = scenes[0].width();
  cfg_json["fit_iters"] = cfg.fit.iters;
  cfg_json["fit_step"] = cfg.fit.step;
  cfg_json["fit_loss"] = to_string(cfg.fit.loss_combo);
  cfg_json["beta"] = cfg.adapt.beta;
  cfg_json["decay_every"] = cfg.adapt.decay_every;
  cfg_json["decay_factor"] = cfg.adapt.decay_factor;
  cfg_json["threshold"] = cfg.adapt.threshold;
  cfg_json["max_iters"] = cfg.adapt.max_iters;
  cfg_json["invert_mode"] =
      cfg.adapt.invert.mode == InvertMode::analytic ? "analytic" : "iterative";
  cfg_json["invert_steps"] = cfg.adapt.invert.steps;
  cfg_json["invert_step"] = cfg.adapt.invert.step;
  cfg_json["invert_bound"] = cfg.adapt.invert.bound_weight;
  cfg_json["independent_sim"] = cfg.independent_sim;
  cfg_json["grid_size"] = cfg.adapt.grid_size;
  {
    std::vector<std::string> ls;
    for (const auto& l : loss_sets) ls.push_back(to_string(l));
    cfg_json["loss_sets"] = ls;
    cfg_json["baseline"] = cfg.include_baseline;
  }
  // scoring uses noise-free ground-truth scene renders as the stand-in for a
  // real camera; note it in every report header
  cfg_json["captured_by"] = "scene_gt_noise_free";
  report.config = std::move(cfg_json);
  return report;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  if (report.conditions.empty())
    throw std::invalid_argument("write_report: no conditions");

  nlohmann::ordered_json j;
  j["kind"] = report.kind;
  j["config"] = report.config.is_null() ? nlohmann::ordered_json::object()
                                        : report.config;
  nlohmann::ordered_json conds = nlohmann::ordered_json::array();
  for (const auto& c : report.conditions) {
    nlohmann::ordered_json cj;
    cj["scene"] = c.scene;
    cj["style"] = c.style;
    cj["loss_set"] = c.loss_set;
    cj["psnr"] = c.metrics.psnr;
    cj["rmse"] = c.metrics.rmse;
    cj["ssim"] = c.metrics.ssim;
    cj["iterations"] = c.iterations;
    cj["converged"] = c.converged;
    conds.push_back(std::move(cj));
  }
  j["conditions"] = std::move(conds);

  if (!report.prediction_rmse.empty()) {
    nlohmann::ordered_json preds = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < report.prediction_rmse.size(); ++i) {
      nlohmann::ordered_json pj;
      pj["pair"] = i;
      pj["rmse"] = report.prediction_rmse[i];
      preds.push_back(std::move(pj));
    }
    j["prediction"] = std::move(preds);
  }

  nlohmann::ordered_json means;
  std::vector<std::string> seen;
  for (const auto& c : report.conditions)
    if (std::find(seen.begin(), seen.end(), c.loss_set) == seen.end())
      seen.push_back(c.loss_set);
  for (const auto& label : seen) {
    const MetricsTriple m = report.mean_metrics(label);
    nlohmann::ordered_json mj;
    mj["psnr"] = m.psnr;
    mj["rmse"] = m.rmse;
    mj["ssim"] = m.ssim;
    mj["mean_iterations"] = report.mean_iterations(label);
    means[label] = std::move(mj);
  }
  if (!report.prediction_rmse.empty())
    means["pred_rmse_test"] = report.mean_prediction_rmse();
  j["means"] = std::move(means);
  return j;
}

void write_report(const EvalReport& report, const std::string& path) {
  const nlohmann::ordered_json j = report_to_json(report);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace procams
