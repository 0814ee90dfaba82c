#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "procams/bench.hpp"
#include "test_util.hpp"

using namespace procams;
using test_util::TempDir;

namespace {

// linear scene whose capture law the model family can represent exactly
Scene matching_scene(int h, int w, std::uint64_t seed) {
  Scene s;
  s.albedo = test_util::random_image(h, w, seed, 0.25, 0.9);
  s.vignette = ImageRGB(h, w, 1.0);
  s.mix = Mat3::identity();
  s.gamma_prj = 2.2;
  s.gamma_cam = 1.0;
  s.ambient = {0.02, 0.02, 0.02};
  s.noise_sigma = 0.0;
  return s;
}

PhotometricModel exact_model(const Scene& scene) {
  PhotometricModel m;
  const int h = scene.height(), w = scene.width();
  m.gain = ImageRGB(h, w);
  m.bias = ImageRGB(h, w);
  for (std::size_t i = 0; i < m.gain.size(); ++i) {
    const double a = scene.albedo.data[i] * scene.vignette.data[i];
    m.gain.data[i] = std::max(a, PhotometricModel::kGainFloor);
    m.bias.data[i] = a * scene.ambient[i % 3];
  }
  m.mix = scene.mix;
  m.gamma = scene.gamma_prj;
  return m;
}

}  // namespace

TEST_CASE("simulation accuracy with a fitted matching-form model") {
  Scene scene = matching_scene(32, 32, 1);
  Setup setup = build_setup(scene, 24, 4, 2);
  FitConfig fc;
  fc.loss_combo = LossCombo{true, true, false};
  fc.iters = 250;
  fc.warmup_iters = 250;
  fc.step = 0.02;
  fc.seed = 3;
  PhotometricModel model = fit(setup, fc);

  auto targets = make_styles(3, 32, 32, 4);
  EvalReport report = eval_sim_accuracy(scene, model, targets);
  REQUIRE(report.conditions.size() == 3);
  CHECK(report.mean_metrics("sim").rmse < 0.01);
}

TEST_CASE("simulation accuracy of the exact linear model") {
  Scene scene = matching_scene(24, 24, 5);
  PhotometricModel model = exact_model(scene);
  // in-gamut targets: attainable captures
  std::vector<ImageRGB> targets;
  for (int k = 0; k < 2; ++k)
    targets.push_back(
        project_capture(scene, test_util::random_image(24, 24, 10 + k, 0.1, 0.9)));
  EvalReport report = eval_sim_accuracy(scene, model, targets);
  CHECK(report.mean_metrics("sim").psnr >= 40.0);
}

TEST_CASE("styles are deterministic and in range") {
  auto a = make_styles(4, 16, 16, 9);
  auto b = make_styles(4, 16, 16, 9);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].data == b[i].data);
  for (const auto& s : a)
    for (double v : s.data) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
}

TEST_CASE("psa evaluation grid produces a complete report") {
  std::vector<Scene> scenes;
  for (int i = 0; i < 2; ++i) {
    SceneConfig cfg;
    cfg.height = 32;
    cfg.width = 32;
    cfg.seed = 20 + i;
    cfg.albedo_min = 0.05;
    cfg.albedo_max = 0.6;
    cfg.noise_sigma = 0.01;
    scenes.push_back(make_scene(cfg));
  }
  auto styles = make_styles(2, 32, 32, 30);

  PsaEvalConfig cfg;
  cfg.seed = 31;
  cfg.n_train = 8;
  cfg.n_test = 2;
  cfg.fit.loss_combo = LossCombo{true, true, false};
  cfg.fit.iters = 60;
  cfg.fit.warmup_iters = 60;
  cfg.adapt.beta = 0.05;
  cfg.adapt.threshold = 0.01;
  cfg.adapt.max_iters = 40;
  cfg.adapt.invert.mode = InvertMode::iterative;
  cfg.adapt.invert.steps = 6;
  cfg.adapt.invert.step = 0.6;
  cfg.adapt.invert.bound_weight = 2.5;
  cfg.threads = 2;

  std::vector<LossSet> loss_sets = {LossSet{true, true, true}};
  EvalReport report = eval_psa(scenes, styles, loss_sets, cfg);

  // 2 scenes x 2 styles x (baseline + 1 loss set)
  REQUIRE(report.conditions.size() == 8);
  int baselines = 0, adapted = 0;
  for (const auto& c : report.conditions) {
    if (c.loss_set == "none") {
      ++baselines;
      CHECK(c.iterations == 0);
    } else {
      CHECK(c.loss_set == "pc,cs,ps");
      ++adapted;
    }
  }
  CHECK(baselines == 4);
  CHECK(adapted == 4);

  // config echo carries the seed
  CHECK(report.config.at("seed").get<std::uint64_t>() == 31);
}

TEST_CASE("psa evaluation is reproducible across thread counts") {
  std::vector<Scene> scenes;
  SceneConfig sc;
  sc.height = 24;
  sc.width = 24;
  sc.seed = 77;
  sc.albedo_min = 0.08;
  scenes.push_back(make_scene(sc));
  auto styles = make_styles(2, 24, 24, 78);
  PsaEvalConfig cfg;
  cfg.seed = 79;
  cfg.n_train = 6;
  cfg.n_test = 2;
  cfg.fit.loss_combo = LossCombo{true, true, false};
  cfg.fit.iters = 30;
  cfg.fit.warmup_iters = 30;
  cfg.adapt.max_iters = 10;
  cfg.adapt.beta = 0.05;
  std::vector<LossSet> sets = {LossSet{false, true, true}};

  cfg.threads = 1;
  EvalReport a = eval_psa(scenes, styles, sets, cfg);
  cfg.threads = 2;
  EvalReport b = eval_psa(scenes, styles, sets, cfg);
  REQUIRE(a.conditions.size() == b.conditions.size());
  for (std::size_t i = 0; i < a.conditions.size(); ++i) {
    CHECK(a.conditions[i].metrics.psnr == b.conditions[i].metrics.psnr);
    CHECK(a.conditions[i].iterations == b.conditions[i].iterations);
  }
}

TEST_CASE("report json round-trip recovers the means") {
  EvalReport report;
  report.kind = "psa";
  report.config["seed"] = 1;
  for (int i = 0; i < 3; ++i) {
    EvalCondition c;
    c.scene = 0;
    c.style = i;
    c.loss_set = "pc,cs,ps";
    c.metrics.psnr = 20.0 + i;
    c.metrics.rmse = 0.1 / (i + 1);
    c.metrics.ssim = 0.5 + 0.1 * i;
    c.iterations = 10 * (i + 1);
    report.conditions.push_back(c);
  }
  TempDir dir("report");
  write_report(report, dir.str() + "/r.json");

  std::ifstream in(dir.str() + "/r.json");
  nlohmann::json j;
  in >> j;
  CHECK(j.at("kind") == "psa");
  CHECK(j.at("conditions").size() == 3);
  const double mean_psnr = j.at("means").at("pc,cs,ps").at("psnr").get<double>();
  CHECK(mean_psnr == doctest::Approx(21.0).epsilon(1e-12));
  const double mean_it =
      j.at("means").at("pc,cs,ps").at("mean_iterations").get<double>();
  CHECK(mean_it == doctest::Approx(20.0).epsilon(1e-12));

  // recompute from the per-condition entries
  double acc = 0.0;
  for (const auto& c : j.at("conditions")) acc += c.at("psnr").get<double>();
  CHECK(mean_psnr == doctest::Approx(acc / 3.0).epsilon(1e-12));
}

TEST_CASE("report refuses an empty condition list") {
  EvalReport report;
  report.kind = "sim";
  TempDir dir("report_empty");
  CHECK_THROWS_WITH_AS(write_report(report, dir.str() + "/r.json"),
                       doctest::Contains("no conditions"),
                       std::invalid_argument);
}

TEST_CASE("report bytes are identical across writes") {
  Scene scene = matching_scene(24, 24, 40);
  PhotometricModel model = exact_model(scene);
  auto targets = make_styles(2, 24, 24, 41);
  EvalReport report = eval_sim_accuracy(scene, model, targets);
  report.config["seed"] = 41;
  TempDir dir("report_det");
  write_report(report, dir.str() + "/a.json");
  write_report(report, dir.str() + "/b.json");
  std::ifstream fa(dir.str() + "/a.json"), fb(dir.str() + "/b.json");
  std::string sa((std::istreambuf_iterator<char>(fa)),
                 std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(fb)),
                 std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  CHECK(!sa.empty());
}
