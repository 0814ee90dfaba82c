#pragma once

#include <cstdint>
#include <string>

#include "procams/dataset.hpp"
#include "procams/image.hpp"
#include "procams/mat3.hpp"

namespace procams {

/// Fitted project-and-capture simulation: per pixel
///   prediction = gain * (mix * x^gamma) + bias
/// with a per-pixel gain/bias, a global 3x3 channel mix and a global
/// projector response exponent. Negative inputs use the signed power
/// sgn(u)*|u|^gamma, which keeps inversion a bijection on all reals.
/// Predictions are unclamped; callers clamp when comparing to captures.
struct PhotometricModel {
  ImageRGB gain;  // positive, floored at kGainFloor
  ImageRGB bias;  // any sign
  Mat3 mix = Mat3::identity();
  double gamma = 2.2;

  static constexpr double kGainFloor = 1e-3;

  int height() const { return gain.height; }
  int width() const { return gain.width; }
  void validate() const;

  static PhotometricModel identity(int h, int w);
};

struct LossCombo {
  bool l1 = false;
  bool l2 = false;
  bool ssim = false;

  bool any() const { return l1 || l2 || ssim; }
};

LossCombo loss_combo_from_string(const std::string& csv);
std::string to_string(const LossCombo& combo);

struct FitConfig {
  LossCombo loss_combo{true, true, true};
  int iters = 200;
  double step = 0.02;
  int warmup_iters = 50;  // l1+l2 only before switching to the full combo
  std::uint64_t seed = 0;
};

ImageRGB predict(const PhotometricModel& model, const ImageRGB& x);

/// d<upstream, predict(x)>/dx, analytic.
ImageRGB predict_vjp(const PhotometricModel& model, const ImageRGB& x,
                     const ImageRGB& upstream);

/// Adam on the training pairs, minibatches of 8, deterministic for a given
/// seed. Loss is the mean of the selected terms between clamped predictions
/// and captures; subgradients are zero through the clamp outside [0,1].
PhotometricModel fit(const Setup& setup, const FitConfig& cfg);

/// model.json with PFM sidecars for gain and bias.
void save_model(const PhotometricModel& model, const std::string& dir);
PhotometricModel load_model(const std::string& dir);

namespace detail {
double signed_pow(double u, double p);
}

}  // namespace procams
