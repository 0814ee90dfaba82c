// procams: photometric projector-camera toolkit
//
// Subcommands: gen-dataset, fit, compensate, adapt, evaluate.
// Exit codes: 0 success, 1 runtime/I-O failure, 2 usage error.
// All randomness flows from --seed through named streams, so identical
// invocations produce byte-identical outputs.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "procams/adapt.hpp"
#include "procams/bench.hpp"
#include "procams/compensate.hpp"
#include "procams/dataset.hpp"
#include "procams/metrics.hpp"
#include "procams/photomodel.hpp"
#include "procams/scene.hpp"

namespace fs = std::filesystem;
using namespace procams;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// flag-level parse helpers rethrow as UsageError so bad flags exit 2
template <typename Fn>
auto as_usage(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

void parse_size(const std::string& s, int& h, int& w) {
  const auto x = s.find('x');
  if (x == std::string::npos)
    throw UsageError("--size expects HxW, got '" + s + "'");
  try {
    h = std::stoi(s.substr(0, x));
    w = std::stoi(s.substr(x + 1));
  } catch (const std::exception&) {
    throw UsageError("--size expects HxW, got '" + s + "'");
  }
  if (h < 1 || w < 1) throw UsageError("--size dimensions must be >= 1");
}

std::string setup_name(int i) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "setup_%03d", i);
  return buf;
}

// ---------------------------------------------------------------------------
// gen-dataset
// ---------------------------------------------------------------------------

struct GenFlags {
  std::string out;
  int setups = 1;
  int train = 48;
  int test = 10;
  std::string size = "256x256";
  std::uint64_t seed = 0;
  double noise = 0.01;
  double albedo_min = 0.1;
  double albedo_max = 0.95;
  std::string texture = "mixed";
  std::string albedo_file;
};

int cmd_gen_dataset(const GenFlags& f) {
  if (f.setups < 1) throw UsageError("--setups must be >= 1");
  if (f.train < 1) throw UsageError("--train must be >= 1 (n_train >= 1)");
  if (f.test < 1) throw UsageError("--test must be >= 1 (n_test >= 1)");
  if (f.noise < 0.0) throw UsageError("--noise must be >= 0");
  if (!(f.albedo_min >= 0.0 && f.albedo_min <= f.albedo_max && f.albedo_max <= 1.0))
    throw UsageError("need 0 <= --albedo-min <= --albedo-max <= 1");
  int h = 0, w = 0;
  parse_size(f.size, h, w);
  const TextureKind kind = as_usage([&] { return texture_kind_from_string(f.texture); });

  for (int i = 0; i < f.setups; ++i) {
    SceneConfig cfg;
    cfg.height = h;
    cfg.width = w;
    cfg.texture_kind = kind;
    cfg.albedo_min = f.albedo_min;
    cfg.albedo_max = f.albedo_max;
    cfg.noise_sigma = f.noise;
    cfg.albedo_path = f.albedo_file;
    cfg.seed = stream_seed(f.seed, "setup-scene", static_cast<std::uint64_t>(i));
    const Scene scene = make_scene(cfg);
    const std::string id = setup_name(i);
    Setup setup = build_setup(
        scene, f.train, f.test,
        stream_seed(f.seed, "setup-data", static_cast<std::uint64_t>(i)), id);
    write_setup(setup, (fs::path(f.out) / id).string());
    std::cout << id << ": " << f.train << " train / " << f.test << " test, "
              << h << "x" << w << ", seed " << f.seed << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitFlags {
  std::string dataset;
  std::string out;
  std::string loss = "l1,l2,ssim";
  int iters = 200;
  double step = 0.02;
  int warmup = 50;
  std::uint64_t seed = 0;
};

int cmd_fit(const FitFlags& f) {
  if (f.iters < 1) throw UsageError("--iters must be >= 1");
  if (f.step <= 0.0) throw UsageError("--step must be > 0");
  if (f.warmup < 0) throw UsageError("--warmup must be >= 0");
  FitConfig cfg;
  cfg.loss_combo = as_usage([&] { return loss_combo_from_string(f.loss); });
  cfg.iters = f.iters;
  cfg.step = f.step;
  cfg.warmup_iters = f.warmup;
  cfg.seed = f.seed;

  const Setup setup = read_setup(f.dataset);
  const PhotometricModel fitted = fit(setup, cfg);
  save_model(fitted, f.out);
  // report with the model as persisted, so downstream evaluation reproduces
  // these numbers exactly
  const PhotometricModel model = load_model(f.out);
  std::vector<double> tr = prediction_rmse(model, setup.train_pairs);
  std::vector<double> te = prediction_rmse(model, setup.test_pairs);
  double tr_mean = 0.0, te_mean = 0.0;
  for (double v : tr) tr_mean += v;
  for (double v : te) te_mean += v;
  tr_mean /= static_cast<double>(tr.size());
  te_mean /= static_cast<double>(te.size());
  std::printf("train RMSE: %.9f\n", tr_mean);
  std::printf("test RMSE: %.9f\n", te_mean);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// compensate
// ---------------------------------------------------------------------------

struct CompFlags {
  std::string model;
  std::string target;
  std::string out_prj;
  std::string out_raw;
};

int cmd_compensate(const CompFlags& f) {
  const PhotometricModel model = load_model(f.model);
  const ImageRGB target = load_png(f.target);
  const CompensationResult result = invert_analytic(model, target);
  save_png(result.projector_input, f.out_prj);
  if (!f.out_raw.empty()) save_pfm(result.unclamped, f.out_raw);
  std::printf("saturation_fraction: %.6f\n", result.saturation_fraction);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// adapt
// ---------------------------------------------------------------------------

struct AdaptFlags {
  std::string model;
  std::string setup;
  std::string style;
  std::string out;
  double tau = 0.02;
  double beta = 0.001;
  int max_iters = 200;
  std::string losses = "pc,cs,ps";
  int decay_every = 50;
  double decay_factor = 5.0;
  int grid = 16;
  std::string inverter = "analytic";
  int invert_steps = 5;
  double invert_step = 0.15;
  double invert_bound = 0.0;
};


InvertSpec parse_inverter(const std::string& name, int steps, double step,
                          double bound_weight = 0.0) {
  InvertSpec spec;
  if (name == "analytic") spec.mode = InvertMode::analytic;
  else if (name == "iterative") spec.mode = InvertMode::iterative;
  else throw UsageError("--inverter must be analytic or iterative");
  if (steps < 1) throw UsageError("--invert-steps must be >= 1");
  spec.steps = steps;
  spec.step = step;
  spec.bound_weight = bound_weight;
  return spec;
}

int cmd_adapt(const AdaptFlags& f) {
  if (f.beta <= 0.0) throw UsageError("--beta must be > 0");
  if (f.max_iters < 1) throw UsageError("--max-iters must be >= 1");
  if (f.decay_every < 1) throw UsageError("--decay-every must be >= 1");
  if (f.decay_factor < 1.0) throw UsageError("--decay-factor must be >= 1");
  if (f.grid < 1) throw UsageError("--grid must be >= 1");
  AdaptConfig cfg;
  cfg.losses = as_usage([&] { return loss_set_from_string(f.losses); });
  cfg.beta = f.beta;
  cfg.threshold = f.tau;
  cfg.max_iters = f.max_iters;
  cfg.decay_every = f.decay_every;
  cfg.decay_factor = f.decay_factor;
  cfg.grid_size = f.grid;
  cfg.invert = parse_inverter(f.inverter, f.invert_steps, f.invert_step,
                              f.invert_bound);

  const PhotometricModel model = load_model(f.model);
  const Setup setup = read_setup(f.setup);
  const ImageRGB style = load_png(f.style);

  const AdaptResult res =
      adapt_surface(model, style, setup.i_plus, setup.i_minus, cfg);

  fs::create_directories(f.out);
  save_png(res.stylized, (fs::path(f.out) / "stylized.png").string());
  save_png(res.compensation.projector_input,
           (fs::path(f.out) / "compensation.png").string());
  save_pfm(res.compensation.unclamped, (fs::path(f.out) / "raw.pfm").string());

  nlohmann::ordered_json hist;
  hist["converged"] = res.converged;
  hist["stalled"] = res.stalled;
  hist["iterations"] = res.iterations;
  hist["threshold"] = cfg.threshold;
  hist["beta"] = cfg.beta;
  hist["losses"] = to_string(cfg.losses);
  hist["inverter"] = f.inverter;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& t : res.history) {
    nlohmann::ordered_json e;
    e["pc"] = t.pc;
    e["cs"] = t.cs;
    e["ps"] = t.ps;
    e["total"] = t.total;
    entries.push_back(std::move(e));
  }
  hist["entries"] = std::move(entries);
  std::ofstream hout(fs::path(f.out) / "history.json");
  if (!hout) throw std::runtime_error("cannot write history.json");
  hout << hist.dump(2) << "\n";

  std::printf("iterations: %d\nconverged: %s\nfinal_total: %.6f\n"
              "saturation_fraction: %.6f\n",
              res.iterations, res.converged ? "true" : "false",
              res.history.empty() ? 0.0 : res.history.back().total,
              res.compensation.saturation_fraction);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvalFlags {
  std::string kind;
  std::string dataset;
  std::string model;
  std::string report;
  int targets = 5;
  int scenes = 3;
  int styles = 5;
  std::string size = "256x256";
  std::uint64_t seed = 0;
  std::string loss_sets = "pc,cs,ps";
  double albedo_min = 0.05;
  double albedo_max = 0.95;
  double noise = 0.01;
  int train = 24;
  int fit_iters = 120;
  double fit_step = 0.02;
  std::string fit_loss = "l1,l2";
  double tau = 0.02;
  double beta = 0.05;
  int max_iters = 200;
  std::string inverter = "iterative";
  int invert_steps = 5;
  double invert_step = 0.15;
  double invert_bound = 0.0;
  int threads = 0;
};

std::vector<LossSet> parse_loss_sets(const std::string& s) {
  std::vector<LossSet> sets;
  std::string tok;
  std::stringstream ss(s);
  while (std::getline(ss, tok, ';'))
    if (!tok.empty())
      sets.push_back(as_usage([&] { return loss_set_from_string(tok); }));
  if (sets.empty()) throw UsageError("--loss-sets must name at least one set");
  return sets;
}

int cmd_evaluate(const EvalFlags& f) {
  if (f.kind == "sim") {
    if (f.targets < 1) throw UsageError("--targets must be >= 1");
    const Setup setup = read_setup(f.dataset);
    if (!setup.scene_gt)
      throw std::runtime_error("evaluate sim needs a setup with scene_gt");
    const PhotometricModel model = load_model(f.model);
    const std::vector<ImageRGB> targets =
        make_styles(f.targets, setup.manifest.height, setup.manifest.width,
                    stream_seed(f.seed, "sim-targets"));
    EvalReport report = eval_sim_accuracy(*setup.scene_gt, model, targets);
    report.prediction_rmse = prediction_rmse(model, setup.test_pairs);
    nlohmann::ordered_json cj;
    cj["seed"] = f.seed;
    cj["dataset"] = f.dataset;
    cj["model"] = f.model;
    cj["n_targets"] = f.targets;
    cj["n_test_pairs"] = setup.test_pairs.size();
    cj["captured_by"] = "scene_gt_noise_free";
    report.config = std::move(cj);
    write_report(report, f.report);
    std::printf("sim accuracy: mean RMSE %.6f, mean pred RMSE %.9f\n",
                report.mean_metrics("sim").rmse, report.mean_prediction_rmse());
    return kExitOk;
  }
  if (f.kind == "psa") {
    if (f.scenes < 1 || f.styles < 1)
      throw UsageError("--scenes and --styles must be >= 1");
    const std::vector<LossSet> loss_sets = parse_loss_sets(f.loss_sets);
    int h = 0, w = 0;
    parse_size(f.size, h, w);

    std::vector<Scene> scenes;
    static const TextureKind kinds[3] = {TextureKind::mixed, TextureKind::blobs,
                                         TextureKind::stripes};
    for (int i = 0; i < f.scenes; ++i) {
      SceneConfig cfg;
      cfg.height = h;
      cfg.width = w;
      cfg.texture_kind = kinds[i % 3];
      cfg.albedo_min = f.albedo_min;
      cfg.albedo_max = f.albedo_max;
      cfg.noise_sigma = f.noise;
      cfg.seed = stream_seed(f.seed, "eval-scene", static_cast<std::uint64_t>(i));
      scenes.push_back(make_scene(cfg));
    }
    const std::vector<ImageRGB> styles =
        make_styles(f.styles, h, w, stream_seed(f.seed, "styles"));

    PsaEvalConfig cfg;
    cfg.seed = f.seed;
    cfg.n_train = f.train;
    cfg.fit.loss_combo = as_usage([&] { return loss_combo_from_string(f.fit_loss); });
    cfg.fit.iters = f.fit_iters;
    cfg.fit.step = f.fit_step;
    cfg.fit.warmup_iters =
        cfg.fit.loss_combo.ssim ? std::min(50, f.fit_iters / 2) : f.fit_iters;
    cfg.adapt.beta = f.beta;
    cfg.adapt.threshold = f.tau;
    cfg.adapt.max_iters = f.max_iters;
    cfg.adapt.invert = parse_inverter(f.inverter, f.invert_steps, f.invert_step,
                                      f.invert_bound);
    cfg.threads = f.threads;

    EvalReport report = eval_psa(scenes, styles, loss_sets, cfg);
    write_report(report, f.report);
    for (const auto& ls : loss_sets) {
      const std::string label = to_string(ls);
      std::printf("%s: mean PSNR %.4f dB, mean iterations %.1f\n",
                  label.c_str(), report.mean_metrics(label).psnr,
                  report.mean_iterations(label));
    }
    std::printf("none: mean PSNR %.4f dB\n", report.mean_metrics("none").psnr);
    return kExitOk;
  }
  throw UsageError("--kind must be sim or psa, got '" + f.kind + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"photometric projector-camera toolkit"};
  app.require_subcommand(1);

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen-dataset",
                                     "generate synthetic capture setups");
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  gen_cmd->add_option("--setups", gen.setups, "number of setups");
  gen_cmd->add_option("--train", gen.train, "training pairs per setup");
  gen_cmd->add_option("--test", gen.test, "test pairs per setup");
  gen_cmd->add_option("--size", gen.size, "image size HxW");
  gen_cmd->add_option("--seed", gen.seed, "master seed");
  gen_cmd->add_option("--noise", gen.noise, "capture noise sigma");
  gen_cmd->add_option("--albedo-min", gen.albedo_min, "albedo lower bound");
  gen_cmd->add_option("--albedo-max", gen.albedo_max, "albedo upper bound");
  gen_cmd->add_option("--texture", gen.texture, "blobs|stripes|mixed|from-file");
  gen_cmd->add_option("--albedo-file", gen.albedo_file,
                      "albedo PNG for --texture from-file");

  FitFlags fitf;
  auto* fit_cmd = app.add_subcommand("fit", "fit a photometric model");
  fit_cmd->add_option("--dataset", fitf.dataset, "setup directory")->required();
  fit_cmd->add_option("--out", fitf.out, "model output directory")->required();
  fit_cmd->add_option("--loss", fitf.loss, "loss combo, e.g. l1,l2,ssim");
  fit_cmd->add_option("--iters", fitf.iters, "optimizer iterations");
  fit_cmd->add_option("--step", fitf.step, "optimizer step size");
  fit_cmd->add_option("--warmup", fitf.warmup, "l1+l2 warmup iterations");
  fit_cmd->add_option("--seed", fitf.seed, "batch sampling seed");

  CompFlags comp;
  auto* comp_cmd = app.add_subcommand("compensate", "invert a model for a target");
  comp_cmd->add_option("--model", comp.model, "model directory")->required();
  comp_cmd->add_option("--target", comp.target, "target PNG")->required();
  comp_cmd->add_option("--out-prj", comp.out_prj, "projector input PNG")->required();
  comp_cmd->add_option("--out-raw", comp.out_raw, "unclamped compensation PFM");

  AdaptFlags ad;
  auto* adapt_cmd = app.add_subcommand("adapt", "surface adaptation run");
  adapt_cmd->add_option("--model", ad.model, "model directory")->required();
  adapt_cmd->add_option("--setup", ad.setup, "setup directory")->required();
  adapt_cmd->add_option("--style", ad.style, "initial stylization PNG")->required();
  adapt_cmd->add_option("--out", ad.out, "output directory")->required();
  adapt_cmd->add_option("--tau", ad.tau, "loss threshold");
  adapt_cmd->add_option("--beta", ad.beta, "step size");
  adapt_cmd->add_option("--max-iters", ad.max_iters, "iteration cap");
  adapt_cmd->add_option("--losses", ad.losses, "loss set, e.g. pc,cs,ps");
  adapt_cmd->add_option("--decay-every", ad.decay_every, "beta decay interval");
  adapt_cmd->add_option("--decay-factor", ad.decay_factor, "beta decay factor");
  adapt_cmd->add_option("--grid", ad.grid, "offset grid size");
  adapt_cmd->add_option("--inverter", ad.inverter, "analytic|iterative");
  adapt_cmd->add_option("--invert-steps", ad.invert_steps, "iterative steps");
  adapt_cmd->add_option("--invert-step", ad.invert_step, "iterative step size");
  adapt_cmd->add_option("--invert-bound", ad.invert_bound,
                        "iterative soft bound weight");

  EvalFlags ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "run an evaluation protocol");
  eval_cmd->add_option("--kind", ev.kind, "sim|psa")->required();
  eval_cmd->add_option("--dataset", ev.dataset, "setup directory (sim)");
  eval_cmd->add_option("--model", ev.model, "model directory (sim)");
  eval_cmd->add_option("--report", ev.report, "report JSON path")->required();
  eval_cmd->add_option("--targets", ev.targets, "sim: number of targets");
  eval_cmd->add_option("--scenes", ev.scenes, "psa: scene count");
  eval_cmd->add_option("--styles", ev.styles, "psa: style count");
  eval_cmd->add_option("--size", ev.size, "psa: image size HxW");
  eval_cmd->add_option("--seed", ev.seed, "master seed");
  eval_cmd->add_option("--loss-sets", ev.loss_sets,
                       "psa: semicolon-separated loss sets");
  eval_cmd->add_option("--albedo-min", ev.albedo_min, "psa: albedo lower bound");
  eval_cmd->add_option("--albedo-max", ev.albedo_max, "psa: albedo upper bound");
  eval_cmd->add_option("--noise", ev.noise, "psa: capture noise sigma");
  eval_cmd->add_option("--train", ev.train, "psa: training pairs per scene");
  eval_cmd->add_option("--fit-iters", ev.fit_iters, "psa: fit iterations");
  eval_cmd->add_option("--fit-step", ev.fit_step, "psa: fit step size");
  eval_cmd->add_option("--fit-loss", ev.fit_loss, "psa: fit loss combo");
  eval_cmd->add_option("--tau", ev.tau, "psa: adaptation threshold");
  eval_cmd->add_option("--beta", ev.beta, "psa: adaptation step size");
  eval_cmd->add_option("--max-iters", ev.max_iters, "psa: adaptation cap");
  eval_cmd->add_option("--inverter", ev.inverter, "psa: analytic|iterative");
  eval_cmd->add_option("--invert-steps", ev.invert_steps, "psa: inner steps");
  eval_cmd->add_option("--invert-step", ev.invert_step, "psa: inner step size");
  eval_cmd->add_option("--invert-bound", ev.invert_bound,
                       "psa: inner soft bound weight");
  eval_cmd->add_option("--threads", ev.threads, "psa: worker threads (0=auto)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_dataset(gen);
    if (fit_cmd->parsed()) return cmd_fit(fitf);
    if (comp_cmd->parsed()) return cmd_compensate(comp);
    if (adapt_cmd->parsed()) return cmd_adapt(ad);
    if (eval_cmd->parsed()) return cmd_evaluate(ev);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
