#include "procams/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace procams {

using detail::signed_pow;

StyleParams StyleParams::identity(int grid_size) {
  if (grid_size < 1)
    throw std::invalid_argument("StyleParams: grid size must be >= 1");
  StyleParams p;
  p.grid = ImageRGB(grid_size, grid_size, 0.0);
  p.grid.unclamped = true;
  return p;
}

bool StyleParams::all_finite() const {
  for (double v : color_mat.m)
    if (!std::isfinite(v)) return false;
  for (double v : color_bias)
    if (!std::isfinite(v)) return false;
  return grid.all_finite();
}

double StyleParams::norm() const {
  double acc = 0.0;
  for (double v : color_mat.m) acc += v * v;
  for (double v : color_bias) acc += v * v;
  for (double v : grid.data) acc += v * v;
  return std::sqrt(acc);
}

ImageRGB apply_style(const ImageRGB& i0, const StyleParams& theta) {
  if (!theta.all_finite())
    throw std::invalid_argument("apply_style: non-finite style parameters");
  if (i0.height < 1 || i0.width < 1)
    throw std::invalid_argument("apply_style: empty input");

  ImageRGB offsets = upsample_bilinear(theta.grid, i0.height, i0.width);
  ImageRGB out(i0.height, i0.width);
  out.unclamped = true;
  const std::size_t n = i0.size();
  for (std::size_t i = 0; i < n; i += 3) {
    const Vec3 px = {i0.data[i], i0.data[i + 1], i0.data[i + 2]};
    const Vec3 mixed = theta.color_mat.mul(px);
    for (int c = 0; c < 3; ++c)
      out.data[i + c] = mixed[c] + theta.color_bias[c] + offsets.data[i + c];
  }
  return out;
}

double loss_pc(const ImageRGB& i_hat_star, const ImageRGB& i) {
  if (!i_hat_star.same_size(i))
    throw std::invalid_argument("loss_pc: dimension mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < i.data.size(); ++k)
    acc += std::abs(i_hat_star.data[k] - i.data[k]);
  return acc / static_cast<double>(i.data.size());
}

double loss_cs(const ImageRGB& i_star_unclamped) {
  if (!i_star_unclamped.all_finite())
    throw std::invalid_argument("loss_cs: non-finite input");
  double acc = 0.0;
  for (double v : i_star_unclamped.data) {
    const double over = std::max(v - 1.0, 0.0);
    const double under = std::min(v, 0.0);
    acc += over * over + under * under;
  }
  return acc / static_cast<double>(i_star_unclamped.data.size());
}

double loss_ps(const ImageRGB& i, const ImageRGB& i_plus,
               const ImageRGB& i_minus) {
  if (!i.same_size(i_plus) || !i.same_size(i_minus))
    throw std::invalid_argument("loss_ps: dimension mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < i.data.size(); ++k) {
    if (i_minus.data[k] > i_plus.data[k])
      throw std::invalid_argument("loss_ps: band violation (i_minus > i_plus)");
    const double over = std::max(i.data[k] - i_plus.data[k], 0.0);
    const double under = std::min(i.data[k] - i_minus.data[k], 0.0);
    acc += over * over + under * under;
  }
  return acc / static_cast<double>(i.data.size());
}

LossSet loss_set_from_string(const std::string& csv) {
  LossSet set{false, false, false};
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    if (tok == "pc") set.pc = true;
    else if (tok == "cs") set.cs = true;
    else if (tok == "ps") set.ps = true;
    else throw std::invalid_argument("unknown adaptation loss: " + tok);
  }
  if (!set.any())
    throw std::invalid_argument("loss set must name at least one of pc,cs,ps");
  return set;
}

std::string to_string(const LossSet& set) {
  std::string s;
  auto add = [&](const char* name) {
    if (!s.empty()) s += ',';
    s += name;
  };
  if (set.pc) add("pc");
  if (set.cs) add("cs");
  if (set.ps) add("ps");
  return s;
}

namespace {

// transpose of corner-aligned bilinear upsampling: scatter an H x W gradient
// back onto the G x G grid
ImageRGB bilinear_transpose(const ImageRGB& grad, int gh, int gw) {
  ImageRGB out(gh, gw, 0.0);
  out.unclamped = true;
  const double sy = grad.height > 1
                        ? static_cast<double>(gh - 1) / (grad.height - 1)
                        : 0.0;
  const double sx =
      grad.width > 1 ? static_cast<double>(gw - 1) / (grad.width - 1) : 0.0;
  for (int y = 0; y < grad.height; ++y) {
    const double fy = y * sy;
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, gh - 1);
    const double wy = fy - y0;
    for (int x = 0; x < grad.width; ++x) {
      const double fx = x * sx;
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, gw - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double g = grad.at(y, x, c);
        out.at(y0, x0, c) += g * (1.0 - wy) * (1.0 - wx);
        out.at(y0, x1, c) += g * (1.0 - wy) * wx;
        out.at(y1, x0, c) += g * wy * (1.0 - wx);
        out.at(y1, x1, c) += g * wy * wx;
      }
    }
  }
  return out;
}

// softly saturating excursion force: ~0 inside [0,1], slope-1 pulls back
// outside, smoothed over kSoftWidth so the inverter dynamics stay C1
constexpr double kSoftWidth = 0.005;

// smooth per-step update limiter: keeps the truncated inversion bounded for
// any model response exponent (steep curvatures otherwise overshoot)
constexpr double kStepCap = 0.5;

double soft_limit(double u) { return u / (1.0 + std::abs(u) / kStepCap); }

double soft_limit_slope(double u) {
  const double d = 1.0 + std::abs(u) / kStepCap;
  return 1.0 / (d * d);
}

double soft_excess(double v) {
  if (v > 0.1 && v < 0.9) return 0.0;
  const double w = kSoftWidth;
  auto softplus = [](double z) { return z > 30.0 ? z : std::log1p(std::exp(z)); };
  return w * softplus((v - 1.0) / w) - w * softplus(-v / w);
}

double soft_excess_slope(double v) {
  if (v > 0.1 && v < 0.9) return 0.0;
  const double w = kSoftWidth;
  auto sigmoid = [](double z) {
    return z > 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  };
  return sigmoid((v - 1.0) / w) + sigmoid(-v / w);
}

// per-element step for the in-loop inverter: inv.step divided by a
// model-only curvature estimate of the per-pixel squared error at x = 1
// (2*gamma^2*sum_k (W_k*M_kc)^2) plus the bound stiffness
ImageRGB jacobi_steps(const PhotometricModel& model, const InvertSpec& inv) {
  ImageRGB steps(model.height(), model.width(), 0.0);
  const double g2 = 2.0 * model.gamma * model.gamma;
  const std::size_t n = steps.size();
  for (std::size_t i = 0; i < n; i += 3) {
    for (int c = 0; c < 3; ++c) {
      double curv = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double wm = model.gain.data[i + k] * model.mix(k, c);
        curv += wm * wm;
      }
      steps.data[i + c] = inv.step / (g2 * curv + 1e-12);
    }
  }
  return steps;
}

struct PipelineState {
  ImageRGB styled;                  // I
  ImageRGB xstar;                   // unclamped compensation
  ImageRGB ihat;                    // simulated captured compensation
  std::vector<ImageRGB> trajectory; // iterative mode: x_0 .. x_{K-1}
  LossTerms terms;
  bool have_xstar = false;
  bool have_ihat = false;
};

void check_pipeline_inputs(const PhotometricModel& model, const ImageRGB& i0,
                           const StyleParams& theta, const ImageRGB& i_plus,
                           const ImageRGB& i_minus, const LossSet& losses) {
  if (!losses.any()) throw std::invalid_argument("adapt: empty loss set");
  if (!i0.same_size(model.gain))
    throw std::invalid_argument("adapt: i0 dims do not match model");
  if (!i_plus.same_size(i0) || !i_minus.same_size(i0))
    throw std::invalid_argument("adapt: capture bound dims mismatch");
  if (!theta.all_finite())
    throw std::invalid_argument("adapt: non-finite style parameters");
}

PipelineState run_pipeline(const PhotometricModel& model, const ImageRGB& i0,
                           const StyleParams& theta, const ImageRGB& i_plus,
                           const ImageRGB& i_minus, const LossSet& losses,
                           const InvertSpec& inv,
                           const PhotometricModel& sim) {
  check_pipeline_inputs(model, i0, theta, i_plus, i_minus, losses);

  PipelineState st;
  st.styled = apply_style(i0, theta);
  if (!st.styled.all_finite())
    throw std::runtime_error("adapt: non-finite stylization");

  const bool need_inverse = losses.pc || losses.cs;
  if (need_inverse) {
    if (inv.mode == InvertMode::analytic) {
      st.xstar = invert_analytic(model, st.styled).unclamped;
    } else {
      // truncated gradient-descent inversion from x0 = I with a per-pixel
      // Jacobi step (model-only curvature, so gradients stay exact) and the
      // soft bound penalty; trajectory kept for the backward pass
      const ImageRGB steps = jacobi_steps(model, inv);
      ImageRGB x = st.styled;
      st.trajectory.reserve(inv.steps);
      for (int k = 0; k < inv.steps; ++k) {
        st.trajectory.push_back(x);
        ImageRGB pred = predict(model, x);
        for (std::size_t i = 0; i < pred.size(); ++i)
          pred.data[i] = 2.0 * (pred.data[i] - st.styled.data[i]);
        ImageRGB g = predict_vjp(model, x, pred);
        const double prate = inv.step * inv.bound_weight;
        for (std::size_t i = 0; i < x.size(); ++i) {
          double upd = steps.data[i] * g.data[i];
          if (inv.bound_weight > 0.0) upd += prate * soft_excess(x.data[i]);
          x.data[i] -= soft_limit(upd);
        }
      }
      if (!x.all_finite())
        throw std::runtime_error("adapt: iterative inversion diverged");
      st.xstar = std::move(x);
      st.xstar.unclamped = true;
    }
    st.have_xstar = true;
  }
  if (losses.pc) {
    st.ihat = predict(sim, st.xstar);
    st.have_ihat = true;
    st.terms.pc = loss_pc(st.ihat, st.styled);
  }
  if (losses.cs) st.terms.cs = loss_cs(st.xstar);
  if (losses.ps) st.terms.ps = loss_ps(st.styled, i_plus, i_minus);
  st.terms.total = (losses.pc ? st.terms.pc : 0.0) +
                   (losses.cs ? st.terms.cs : 0.0) +
                   (losses.ps ? st.terms.ps : 0.0);
  return st;
}

// dL/dx* propagated to dL/dI through the closed-form inverse
void backward_analytic_inverse(const PhotometricModel& model,
                               const ImageRGB& xstar, const ImageRGB& dx,
                               ImageRGB& di) {
  const Mat3 inv_t = model.mix.inverse();  // used transposed below
  const double g = model.gamma;
  const std::size_t n = xstar.size();
  for (std::size_t i = 0; i < n; i += 3) {
    Vec3 du;
    for (int c = 0; c < 3; ++c) {
      const double ax = std::abs(xstar.data[i + c]);
      // dx*/du = (1/g)|u|^(1/g - 1) rewritten in terms of |x*|
      const double f = ax < 1e-12 ? 0.0 : std::pow(ax, 1.0 - g) / g;
      du[c] = f * dx.data[i + c];
    }
    const Vec3 dz = inv_t.tmul(du);
    for (int c = 0; c < 3; ++c)
      di.data[i + c] += dz[c] / model.gain.data[i + c];
  }
}

// dL/dx_K propagated to dL/dI through the unrolled descent steps
void backward_iterative_inverse(const PhotometricModel& model,
                                const ImageRGB& styled,
                                const std::vector<ImageRGB>& trajectory,
                                const ImageRGB& steps, double prate,
                                ImageRGB dx, ImageRGB& di) {
  const double g = model.gamma;
  const std::size_t n = styled.size();
  for (int k = static_cast<int>(trajectory.size()) - 1; k >= 0; --k) {
    const ImageRGB& x = trajectory[k];
    for (std::size_t i = 0; i < n; i += 3) {
      Vec3 xv = {x.data[i], x.data[i + 1], x.data[i + 2]};
      Vec3 sv, sp, spp;
      for (int c = 0; c < 3; ++c) {
        const double ax = std::abs(xv[c]);
        sv[c] = signed_pow(xv[c], g);
        sp[c] = ax == 0.0 ? (g == 1.0 ? 1.0 : 0.0) : g * std::pow(ax, g - 1.0);
        // curvature term floored near zero to keep the direction usable
        const double axf = std::max(ax, 1e-3);
        const double sgn = xv[c] < 0.0 ? -1.0 : 1.0;
        spp[c] = g * (g - 1.0) * sgn * std::pow(axf, g - 2.0);
      }
      const Vec3 mixed = model.mix.mul(sv);
      Vec3 rho, w;
      for (int c = 0; c < 3; ++c) {
        w[c] = model.gain.data[i + c];
        const double f = w[c] * mixed[c] + model.bias.data[i + c];
        rho[c] = 2.0 * (f - styled.data[i + c]);
      }
      Vec3 wrho = {w[0] * rho[0], w[1] * rho[1], w[2] * rho[2]};
      const Vec3 h = model.mix.tmul(wrho);

      const Vec3 lam = {dx.data[i], dx.data[i + 1], dx.data[i + 2]};
      // chain through the update limiter, then fold eta into lambda
      Vec3 lam_l;
      for (int c = 0; c < 3; ++c) {
        const double q = sp[c] * h[c];
        double upd = steps.data[i + c] * q;
        if (prate > 0.0) upd += prate * soft_excess(xv[c]);
        lam_l[c] = lam[c] * soft_limit_slope(upd);
      }
      const Vec3 etalam = {steps.data[i] * lam_l[0],
                           steps.data[i + 1] * lam_l[1],
                           steps.data[i + 2] * lam_l[2]};
      const Vec3 splam = {sp[0] * etalam[0], sp[1] * etalam[1],
                          sp[2] * etalam[2]};
      const Vec3 msplam = model.mix.mul(splam);
      // dI contribution of this step: +2*W.(M (s'.step.lambda))
      for (int c = 0; c < 3; ++c)
        di.data[i + c] += 2.0 * w[c] * msplam[c];
      // (dq/dx)^T (step.lambda) = s''.h.(step.lambda) + 2 s'.(M^T W^2 M (s'.step.lambda))
      const Vec3 w2m = {w[0] * w[0] * msplam[0], w[1] * w[1] * msplam[1],
                        w[2] * w[2] * msplam[2]};
      const Vec3 gterm = model.mix.tmul(w2m);
      for (int c = 0; c < 3; ++c) {
        double vjpx = spp[c] * h[c] * etalam[c] + 2.0 * sp[c] * gterm[c];
        if (prate > 0.0) vjpx += prate * soft_excess_slope(xv[c]) * lam_l[c];
        dx.data[i + c] = lam[c] - vjpx;
      }
    }
  }
  // x_0 = I
  for (std::size_t i = 0; i < n; ++i) di.data[i] += dx.data[i];
}

StyleParams theta_grad_from_di(const ImageRGB& di, const ImageRGB& i0,
                               const StyleParams& theta) {
  StyleParams grad = StyleParams::identity(theta.grid.height);
  grad.color_mat = Mat3{};  // zeros
  const std::size_t n = di.size();
  for (std::size_t i = 0; i < n; i += 3)
    for (int r = 0; r < 3; ++r) {
      const double g = di.data[i + r];
      grad.color_bias[r] += g;
      for (int d = 0; d < 3; ++d) grad.color_mat(r, d) += g * i0.data[i + d];
    }
  grad.grid = bilinear_transpose(di, theta.grid.height, theta.grid.width);
  return grad;
}

StyleParams backward_pipeline(const PhotometricModel& model,
                              const ImageRGB& i0, const StyleParams& theta,
                              const ImageRGB& i_plus, const ImageRGB& i_minus,
                              const LossSet& losses, const InvertSpec& inv,
                              const PhotometricModel& sim,
                              const PipelineState& st) {
  const std::size_t n = st.styled.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  ImageRGB di(st.styled.height, st.styled.width, 0.0);
  ImageRGB dx(st.styled.height, st.styled.width, 0.0);
  bool any_dx = false;

  if (losses.ps) {
    for (std::size_t i = 0; i < n; ++i) {
      const double over = std::max(st.styled.data[i] - i_plus.data[i], 0.0);
      const double under = std::min(st.styled.data[i] - i_minus.data[i], 0.0);
      di.data[i] += 2.0 * inv_n * (over + under);
    }
  }
  if (losses.cs) {
    for (std::size_t i = 0; i < n; ++i) {
      const double over = std::max(st.xstar.data[i] - 1.0, 0.0);
      const double under = std::min(st.xstar.data[i], 0.0);
      dx.data[i] += 2.0 * inv_n * (over + under);
    }
    any_dx = true;
  }
  if (losses.pc) {
    ImageRGB dihat(st.styled.height, st.styled.width, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = st.ihat.data[i] - st.styled.data[i];
      const double s = r > 0.0 ? inv_n : (r < 0.0 ? -inv_n : 0.0);
      dihat.data[i] = s;
      di.data[i] -= s;
    }
    const ImageRGB via_pred = predict_vjp(sim, st.xstar, dihat);
    for (std::size_t i = 0; i < n; ++i) dx.data[i] += via_pred.data[i];
    any_dx = true;
  }

  if (any_dx) {
    if (inv.mode == InvertMode::analytic)
      backward_analytic_inverse(model, st.xstar, dx, di);
    else
      backward_iterative_inverse(model, st.styled, st.trajectory,
                                 jacobi_steps(model, inv),
                                 inv.step * inv.bound_weight, std::move(dx),
                                 di);
  }
  return theta_grad_from_di(di, i0, theta);
}

}  // namespace

LossTerms total_loss(const PhotometricModel& model, const ImageRGB& i0,
                     const StyleParams& theta, const ImageRGB& i_plus,
                     const ImageRGB& i_minus, const LossSet& losses,
                     const InvertSpec& inv, const PhotometricModel* sim_model) {
  const PhotometricModel& sim = sim_model ? *sim_model : model;
  return run_pipeline(model, i0, theta, i_plus, i_minus, losses, inv, sim)
      .terms;
}

StyleParams grad_theta(const PhotometricModel& model, const ImageRGB& i0,
                       const StyleParams& theta, const ImageRGB& i_plus,
                       const ImageRGB& i_minus, const LossSet& losses,
                       const InvertSpec& inv, const PhotometricModel* sim_model) {
  const PhotometricModel& sim = sim_model ? *sim_model : model;
  PipelineState st =
      run_pipeline(model, i0, theta, i_plus, i_minus, losses, inv, sim);
  return backward_pipeline(model, i0, theta, i_plus, i_minus, losses, inv, sim,
                           st);
}

AdaptResult adapt_surface(const PhotometricModel& model, const ImageRGB& i0,
                          const ImageRGB& i_plus, const ImageRGB& i_minus,
                          const AdaptConfig& cfg,
                          const PhotometricModel* sim_model) {
  const PhotometricModel& sim = sim_model ? *sim_model : model;
  if (sim_model) sim_model->validate();
  if (cfg.beta <= 0.0) throw std::invalid_argument("adapt: beta must be > 0");
  if (cfg.max_iters < 1)
    throw std::invalid_argument("adapt: max_iters must be >= 1");
  if (!cfg.losses.any()) throw std::invalid_argument("adapt: empty loss set");
  model.validate();

  AdaptResult res;
  res.theta = StyleParams::identity(cfg.grid_size);

  // the loop's stop test uses the full three-term sum; the loss set only
  // selects which terms drive the update, so ablated runs still race toward
  // the same quality bar
  const LossSet all_terms{true, true, true};
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    PipelineState st = run_pipeline(model, i0, res.theta, i_plus, i_minus,
                                    all_terms, cfg.invert, sim);
    LossTerms entry = st.terms;
    entry.total = (cfg.losses.pc ? entry.pc : 0.0) +
                  (cfg.losses.cs ? entry.cs : 0.0) +
                  (cfg.losses.ps ? entry.ps : 0.0);
    res.history.push_back(entry);
    if (st.terms.pc + st.terms.cs + st.terms.ps <= cfg.threshold) {
      res.converged = true;
      break;
    }
    if (iter == cfg.max_iters) break;

    StyleParams g = backward_pipeline(model, i0, res.theta, i_plus, i_minus,
                                      cfg.losses, cfg.invert, sim, st);
    const double gnorm = g.norm();
    if (gnorm < 1e-12) {
      res.stalled = true;
      break;
    }
    // beta decays by decay_factor before the step at iterations 50, 100, ...
    const double beta =
        cfg.beta / std::pow(cfg.decay_factor,
                            static_cast<double>(iter / cfg.decay_every));
    const double scale = beta / gnorm;
    for (int k = 0; k < 9; ++k) res.theta.color_mat.m[k] -= scale * g.color_mat.m[k];
    for (int c = 0; c < 3; ++c) res.theta.color_bias[c] -= scale * g.color_bias[c];
    for (std::size_t k = 0; k < res.theta.grid.data.size(); ++k)
      res.theta.grid.data[k] -= scale * g.grid.data[k];
  }

  res.iterations = static_cast<int>(res.history.size());
  res.stylized = clamp01(apply_style(i0, res.theta));
  res.compensation = invert_analytic(model, res.stylized);
  return res;
}

}  // namespace procams
