#include "procams/photomodel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "procams/metrics.hpp"
#include "procams/rng.hpp"

namespace fs = std::filesystem;

namespace procams {

namespace detail {

double signed_pow(double u, double p) {
  if (u == 0.0) return 0.0;
  return u < 0.0 ? -std::pow(-u, p) : std::pow(u, p);
}

}  // namespace detail

using detail::signed_pow;

void PhotometricModel::validate() const {
  if (gain.height < 1 || gain.width < 1)
    throw std::invalid_argument("model: empty gain");
  if (!gain.same_size(bias))
    throw std::invalid_argument("model: gain/bias dimension mismatch");
  for (double g : gain.data)
    if (!(g >= kGainFloor))
      throw std::invalid_argument("model: gain below floor");
  if (!bias.all_finite()) throw std::invalid_argument("model: non-finite bias");
  if (!(gamma >= 0.5 && gamma <= 4.0))
    throw std::invalid_argument("model: gamma outside [0.5, 4]");
  if (mix.cond1() >= 1e3)
    throw std::invalid_argument("model: mix matrix badly conditioned");
}

PhotometricModel PhotometricModel::identity(int h, int w) {
  PhotometricModel m;
  m.gain = ImageRGB(h, w, 1.0);
  m.bias = ImageRGB(h, w, 0.0);
  m.mix = Mat3::identity();
  m.gamma = 1.0;
  return m;
}

LossCombo loss_combo_from_string(const std::string& csv) {
  LossCombo combo;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    if (tok == "l1") combo.l1 = true;
    else if (tok == "l2") combo.l2 = true;
    else if (tok == "ssim") combo.ssim = true;
    else throw std::invalid_argument("unknown fit loss: " + tok);
  }
  if (!combo.any())
    throw std::invalid_argument("loss combo must name at least one of l1,l2,ssim");
  return combo;
}

std::string to_string(const LossCombo& combo) {
  std::string s;
  auto add = [&](const char* name) {
    if (!s.empty()) s += ',';
    s += name;
  };
  if (combo.l1) add("l1");
  if (combo.l2) add("l2");
  if (combo.ssim) add("ssim");
  return s;
}

namespace {

void check_predict_input(const PhotometricModel& model, const ImageRGB& x) {
  if (!x.same_size(model.gain))
    throw std::invalid_argument("predict: dimension mismatch");
  if (!x.all_finite()) throw std::invalid_argument("predict: non-finite input");
}

}  // namespace

ImageRGB predict(const PhotometricModel& model, const ImageRGB& x) {
  check_predict_input(model, x);
  ImageRGB out(x.height, x.width);
  out.unclamped = true;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; i += 3) {
    const Vec3 s = {signed_pow(x.data[i], model.gamma),
                    signed_pow(x.data[i + 1], model.gamma),
                    signed_pow(x.data[i + 2], model.gamma)};
    const Vec3 lit = model.mix.mul(s);
    for (int c = 0; c < 3; ++c)
      out.data[i + c] = model.gain.data[i + c] * lit[c] + model.bias.data[i + c];
  }
  return out;
}

ImageRGB predict_vjp(const PhotometricModel& model, const ImageRGB& x,
                     const ImageRGB& upstream) {
  check_predict_input(model, x);
  if (!upstream.same_size(x))
    throw std::invalid_argument("predict_vjp: upstream dimension mismatch");

  ImageRGB out(x.height, x.width);
  out.unclamped = true;
  const double g = model.gamma;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; i += 3) {
    const Vec3 wu = {model.gain.data[i] * upstream.data[i],
                     model.gain.data[i + 1] * upstream.data[i + 1],
                     model.gain.data[i + 2] * upstream.data[i + 2]};
    const Vec3 h = model.mix.tmul(wu);
    for (int c = 0; c < 3; ++c) {
      const double u = x.data[i + c];
      // d sgn(u)|u|^g / du = g|u|^(g-1); subgradient 0 at the g<1 cusp
      const double sp = u == 0.0 ? (g == 1.0 ? 1.0 : 0.0)
                                 : g * std::pow(std::abs(u), g - 1.0);
      out.data[i + c] = sp * h[c];
    }
  }
  return out;
}

namespace {

// Training inputs live in [0,1], so x^gamma = exp(gamma*ln x) with a floored
// log; the floor maps exp to exactly 0 for x = 0 without inf arithmetic.
constexpr float kLogFloor = -700.0f;

std::vector<float> log_buffer(const ImageRGB& x) {
  std::vector<float> lx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x.data[i];
    lx[i] = v <= 0.0 ? kLogFloor
                     : std::max(kLogFloor, static_cast<float>(std::log(v)));
  }
  return lx;
}

struct FitGrads {
  std::vector<double> gain;
  std::vector<double> bias;
  std::array<double, 9> mix{};
  double gamma = 0.0;
};

struct AdamState {
  std::vector<double> m, v;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  double update(std::size_t i, double grad, double bc1, double bc2) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad;
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad * grad;
    const double mh = m[i] / bc1;
    const double vh = v[i] / bc2;
    return mh / (std::sqrt(vh) + eps);
  }
};

}  // namespace

PhotometricModel fit(const Setup& setup, const FitConfig& cfg) {
  const int n_train = static_cast<int>(setup.train_pairs.size());
  if (n_train < 4)
    throw std::invalid_argument("fit: need at least 4 training pairs");
  if (cfg.iters < 1) throw std::invalid_argument("fit: iters must be >= 1");
  if (!cfg.loss_combo.any())
    throw std::invalid_argument("fit: empty loss combo");

  const int h = setup.manifest.height, w = setup.manifest.width;
  const std::size_t n3 = static_cast<std::size_t>(h) * w * 3;

  PhotometricModel model;
  model.gain = ImageRGB(h, w, 1.0);
  model.bias = ImageRGB(h, w, 0.0);
  model.mix = Mat3::identity();
  model.gamma = 2.2;

  std::vector<std::vector<float>> logs(n_train);
  for (int i = 0; i < n_train; ++i)
    logs[i] = log_buffer(setup.train_pairs[i].projector);

  const int batch = std::min(8, n_train);
  Rng rng(stream_seed(cfg.seed, "fit-batch"));
  std::vector<int> perm(n_train);
  for (int i = 0; i < n_train; ++i) perm[i] = i;
  int cursor = n_train;  // forces a shuffle on first use
  auto next_index = [&]() {
    if (cursor >= n_train) {
      for (int i = n_train - 1; i > 0; --i)
        std::swap(perm[i], perm[static_cast<int>(rng.below(i + 1))]);
      cursor = 0;
    }
    return perm[cursor++];
  };

  // one flat Adam state: gain, bias, mix, gamma
  AdamState adam(2 * n3 + 10);
  std::vector<double> s(n3), lit(n3), upstream(n3);
  FitGrads grads;
  grads.gain.assign(n3, 0.0);
  grads.bias.assign(n3, 0.0);

  const bool want_ssim = cfg.loss_combo.ssim;
  ImageRGB pred_img(h, w), ssim_grad_img;

  for (int iter = 0; iter < cfg.iters; ++iter) {
    const bool warmup = iter < cfg.warmup_iters;
    LossCombo combo = cfg.loss_combo;
    if (warmup) combo = LossCombo{true, true, false};
    const bool use_ssim = !warmup && want_ssim;

    std::fill(grads.gain.begin(), grads.gain.end(), 0.0);
    std::fill(grads.bias.begin(), grads.bias.end(), 0.0);
    grads.mix.fill(0.0);
    grads.gamma = 0.0;
    double loss = 0.0;

    for (int b = 0; b < batch; ++b) {
      const int idx = next_index();
      const ImagePair& pair = setup.train_pairs[idx];
      const std::vector<float>& lx = logs[idx];

      // forward
      for (std::size_t i = 0; i < n3; i += 3) {
        Vec3 sv = {std::exp(model.gamma * lx[i]),
                   std::exp(model.gamma * lx[i + 1]),
                   std::exp(model.gamma * lx[i + 2])};
        Vec3 mixed = model.mix.mul(sv);
        for (int c = 0; c < 3; ++c) {
          s[i + c] = sv[c];
          lit[i + c] = mixed[c];
          pred_img.data[i + c] =
              model.gain.data[i + c] * mixed[c] + model.bias.data[i + c];
        }
      }

      // loss terms on the clamped prediction, upstream = dL/dpred
      const double inv_n = 1.0 / (static_cast<double>(batch) * n3);
      if (use_ssim) {
        ImageRGB clamped = clamp01(pred_img);
        const double sv = ssim_with_grad(clamped, pair.captured, ssim_grad_img);
        loss += (1.0 - sv) / batch;
      }
      for (std::size_t i = 0; i < n3; ++i) {
        const double raw = pred_img.data[i];
        const double p = std::min(1.0, std::max(0.0, raw));
        const double d = p - pair.captured.data[i];
        double u = 0.0;
        if (combo.l1) {
          loss += std::abs(d) * inv_n;
          u += (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * inv_n;
        }
        if (combo.l2) {
          loss += d * d * inv_n;
          u += 2.0 * d * inv_n;
        }
        if (use_ssim) {
          // SSIM subgradient is 0 through the clamp outside [0,1]
          if (raw >= 0.0 && raw <= 1.0) u += -ssim_grad_img.data[i] / batch;
        }
        // l1/l2 use the projected-gradient convention: outside [0,1] a
        // gradient passes only if it points back into range, so saturated
        // pixels cannot freeze permanently
        if ((raw < 0.0 && u > 0.0) || (raw > 1.0 && u < 0.0)) u = 0.0;
        upstream[i] = u;
      }

      // backward into parameters
      for (std::size_t i = 0; i < n3; i += 3) {
        Vec3 wu;
        for (int c = 0; c < 3; ++c) {
          const double u = upstream[i + c];
          grads.gain[i + c] += u * lit[i + c];
          grads.bias[i + c] += u;
          wu[c] = model.gain.data[i + c] * u;
        }
        if (wu[0] == 0.0 && wu[1] == 0.0 && wu[2] == 0.0) continue;
        Vec3 slx;
        for (int c = 0; c < 3; ++c) {
          const double l = lx[i + c];
          slx[c] = l <= kLogFloor ? 0.0 : s[i + c] * l;
        }
        const Vec3 mslx = model.mix.mul(slx);
        for (int r = 0; r < 3; ++r) {
          grads.gamma += wu[r] * mslx[r];
          for (int k = 0; k < 3; ++k) grads.mix[3 * r + k] += wu[r] * s[i + k];
        }
      }
    }

    if (!std::isfinite(loss))
      throw std::runtime_error("fit diverged (non-finite loss) at iteration " +
                               std::to_string(iter));

    // Adam step with a linear step-size decay to zero
    const double lr =
        cfg.step * (1.0 - static_cast<double>(iter) / cfg.iters);
    const double bc1 = 1.0 - std::pow(0.9, iter + 1);
    const double bc2 = 1.0 - std::pow(0.999, iter + 1);
    for (std::size_t i = 0; i < n3; ++i) {
      model.gain.data[i] -= lr * adam.update(i, grads.gain[i], bc1, bc2);
      model.bias.data[i] -= lr * adam.update(n3 + i, grads.bias[i], bc1, bc2);
    }
    for (int k = 0; k < 9; ++k)
      model.mix.m[k] -= lr * adam.update(2 * n3 + k, grads.mix[k], bc1, bc2);
    model.gamma -= lr * adam.update(2 * n3 + 9, grads.gamma, bc1, bc2);

    for (double& g : model.gain.data)
      g = std::max(g, PhotometricModel::kGainFloor);
    model.gamma = std::min(4.0, std::max(0.5, model.gamma));
  }

  model.validate();
  return model;
}

void save_model(const PhotometricModel& model, const std::string& dir) {
  fs::create_directories(dir);
  save_pfm(model.gain, (fs::path(dir) / "gain.pfm").string());
  save_pfm(model.bias, (fs::path(dir) / "bias.pfm").string());
  nlohmann::ordered_json j;
  j["type"] = "ppaffine_gamma";
  j["gamma"] = model.gamma;
  j["mix"] = model.mix.m;
  j["gain"] = "gain.pfm";
  j["bias"] = "bias.pfm";
  std::ofstream out(fs::path(dir) / "model.json");
  if (!out) throw std::runtime_error("cannot write model.json in " + dir);
  out << j.dump(2) << "\n";
}

PhotometricModel load_model(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "model.json");
  if (!in) throw std::runtime_error("missing model.json in " + dir);
  nlohmann::json j;
  in >> j;
  if (j.at("type").get<std::string>() != "ppaffine_gamma")
    throw std::runtime_error("unknown model type in " + dir);

  PhotometricModel model;
  model.gamma = j.at("gamma").get<double>();
  model.mix.m = j.at("mix").get<std::array<double, 9>>();
  model.gain = load_pfm((fs::path(dir) / j.at("gain").get<std::string>()).string());
  model.bias = load_pfm((fs::path(dir) / j.at("bias").get<std::string>()).string());
  model.gain.unclamped = false;
  // float32 sidecars can land a hair under the floor; snap back
  for (double& g : model.gain.data)
    g = std::max(g, PhotometricModel::kGainFloor);
  model.validate();
  return model;
}

}  // namespace procams
