#pragma once

#include "procams/image.hpp"

namespace procams {

/// PSNR/RMSE/SSIM triple as reported by the evaluation harness.
struct MetricsTriple {
  double psnr = 0.0;
  double rmse = 0.0;
  double ssim = 0.0;
};

/// sqrt of the mean squared difference over all H*W*3 elements.
double rmse(const ImageRGB& a, const ImageRGB& b);

/// 10*log10(1/mse) for peak 1.0, capped at 99 dB when mse < 1e-12.
double psnr(const ImageRGB& a, const ImageRGB& b);

/// Mean SSIM over an 11x11 Gaussian window (sigma 1.5, C1=0.01^2, C2=0.03^2,
/// peak 1), computed per channel on the valid interior and channel-averaged.
/// Requires dims >= 11x11.
double ssim(const ImageRGB& a, const ImageRGB& b);

MetricsTriple compute_metrics(const ImageRGB& a, const ImageRGB& b);

/// SSIM value plus its gradient with respect to `a` (used by model fitting).
double ssim_with_grad(const ImageRGB& a, const ImageRGB& b, ImageRGB& grad_a);

}  // namespace procams
