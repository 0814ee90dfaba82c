#pragma once

#include <string>
#include <vector>

#include "procams/compensate.hpp"
#include "procams/image.hpp"
#include "procams/mat3.hpp"
#include "procams/photomodel.hpp"

namespace procams {

/// Differentiable adaptation head over a supplied initial stylization:
/// a global color affine plus a low-resolution additive offset grid.
/// Identity initialization reproduces the input image exactly.
struct StyleParams {
  Mat3 color_mat = Mat3::identity();
  Vec3 color_bias{0.0, 0.0, 0.0};
  ImageRGB grid;  // G x G x 3 offsets, bilinearly upsampled onto the image

  static StyleParams identity(int grid_size = 16);

  std::size_t param_count() const { return 12 + grid.size(); }
  bool all_finite() const;
  double norm() const;
};

/// I' = color_mat * i0 + color_bias + upsample(grid). Unclamped.
ImageRGB apply_style(const ImageRGB& i0, const StyleParams& theta);

/// Projection consistency: mean absolute difference between the simulated
/// captured compensation and the desired stylization.
double loss_pc(const ImageRGB& i_hat_star, const ImageRGB& i);

/// Compensation saturation: mean squared hinge on compensation-image values
/// outside [0,1].
double loss_cs(const ImageRGB& i_star_unclamped);

/// Projection saturation: mean squared hinge on stylization values outside
/// the attainable capture band [i_minus, i_plus].
double loss_ps(const ImageRGB& i, const ImageRGB& i_plus,
               const ImageRGB& i_minus);

struct LossSet {
  bool pc = true;
  bool cs = true;
  bool ps = true;

  bool any() const { return pc || cs || ps; }
};

LossSet loss_set_from_string(const std::string& csv);
std::string to_string(const LossSet& set);

struct LossTerms {
  double pc = 0.0;
  double cs = 0.0;
  double ps = 0.0;
  double total = 0.0;
};

/// Which compensator runs inside the adaptation loop. The analytic inverse
/// makes the consistency loss vanish identically (the simulation exactly
/// undoes it); the truncated iterative inverse is an imperfect compensator,
/// so consistency stays informative where compensation is hard.
enum class InvertMode { analytic, iterative };

struct InvertSpec {
  InvertMode mode = InvertMode::analytic;
  int steps = 5;       // iterative mode only
  double step = 0.15;  // iterative mode only
  // soft penalty pulling iterates back toward [0,1]; with it the truncated
  // inverter behaves like a learned compensator: near-exact on feasible
  // targets, only mild excursions past [0,1] on infeasible ones
  double bound_weight = 0.0;
};

/// Losses of the full pipeline: style -> compensate -> simulate capture.
/// `sim_model` is the capture simulator; when null the compensation model
/// also simulates, and with the analytic inverter the consistency term then
/// vanishes identically (the simulation exactly undoes the compensation).
/// Passing an independently fitted simulator mirrors a system whose
/// compensator and simulator are separate models, making consistency a real
/// measurement.
LossTerms total_loss(const PhotometricModel& model, const ImageRGB& i0,
                     const StyleParams& theta, const ImageRGB& i_plus,
                     const ImageRGB& i_minus, const LossSet& losses,
                     const InvertSpec& inv = {},
                     const PhotometricModel* sim_model = nullptr);

/// Exact analytic gradient of total_loss with respect to theta (hinge
/// subgradients are 0 at their kinks). Iterative mode differentiates through
/// the unrolled descent steps.
StyleParams grad_theta(const PhotometricModel& model, const ImageRGB& i0,
                       const StyleParams& theta, const ImageRGB& i_plus,
                       const ImageRGB& i_minus, const LossSet& losses,
                       const InvertSpec& inv = {},
                       const PhotometricModel* sim_model = nullptr);

struct AdaptConfig {
  double beta = 0.001;        // step size of the normalized update
  int decay_every = 50;       // beta divides by decay_factor every this many
  double decay_factor = 5.0;
  double threshold = 0.02;    // stop once the total loss falls below
  int max_iters = 200;
  LossSet losses;
  InvertSpec invert;
  int grid_size = 16;
};

struct AdaptResult {
  StyleParams theta;
  ImageRGB stylized;               // final I', clamped to [0,1]
  CompensationResult compensation; // analytic compensation of the final I'
  std::vector<LossTerms> history;  // one entry per iteration
  int iterations = 0;
  bool converged = false;
  bool stalled = false;
};

/// Gradient-descent surface adaptation: normalized steps theta -= beta*g/|g|
/// until the total loss drops below the threshold or max_iters is reached.
/// `sim_model` as in total_loss.
AdaptResult adapt_surface(const PhotometricModel& model, const ImageRGB& i0,
                          const ImageRGB& i_plus, const ImageRGB& i_minus,
                          const AdaptConfig& cfg,
                          const PhotometricModel* sim_model = nullptr);

}  // namespace procams
