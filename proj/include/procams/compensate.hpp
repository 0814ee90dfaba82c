#pragma once

#include "procams/image.hpp"
#include "procams/photomodel.hpp"
#include "procams/scene.hpp"

namespace procams {

/// Projector compensation output. `unclamped` is the raw model inverse and
/// may leave [0,1]; `projector_input` is what actually gets projected.
struct CompensationResult {
  ImageRGB unclamped;
  ImageRGB projector_input;
  double saturation_fraction = 0.0;  // share of elements clipped by clamp01
};

/// Closed-form inverse of the photometric model: per pixel
///   x = sgn(u)*|u|^(1/gamma),  u = mix^-1 * ((target - bias) / gain).
/// predict(model, unclamped) reproduces the target to floating point.
CompensationResult invert_analytic(const PhotometricModel& model,
                                   const ImageRGB& target);

/// Gradient-descent inverse from x0 = target, for models without a closed
/// form (and, truncated to a few steps, as the imperfect in-loop compensator
/// during surface adaptation). `step` applies to the per-pixel squared error.
CompensationResult invert_iterative(const PhotometricModel& model,
                                    const ImageRGB& target, int iters,
                                    double step);

/// The real captured compensation: project the clamped compensation image
/// through the ground-truth scene, noise off.
ImageRGB captured_compensation(const Scene& scene,
                               const CompensationResult& result);

}  // namespace procams
