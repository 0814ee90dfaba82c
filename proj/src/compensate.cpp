#include "procams/compensate.hpp"

#include <cmath>
#include <stdexcept>

namespace procams {

using detail::signed_pow;

namespace {

CompensationResult finish(ImageRGB unclamped) {
  CompensationResult r;
  r.unclamped = std::move(unclamped);
  r.unclamped.unclamped = true;
  r.projector_input = clamp01(r.unclamped);
  std::size_t clipped = 0;
  for (double v : r.unclamped.data)
    if (v < 0.0 || v > 1.0) ++clipped;
  r.saturation_fraction =
      static_cast<double>(clipped) / static_cast<double>(r.unclamped.size());
  return r;
}

}  // namespace

CompensationResult invert_analytic(const PhotometricModel& model,
                                   const ImageRGB& target) {
  if (!target.same_size(model.gain))
    throw std::invalid_argument("invert_analytic: dimension mismatch");
  if (!target.all_finite())
    throw std::invalid_argument("invert_analytic: non-finite target");

  const Mat3 inv = model.mix.inverse();
  const double inv_gamma = 1.0 / model.gamma;
  ImageRGB x(target.height, target.width);
  const std::size_t n = target.size();
  for (std::size_t i = 0; i < n; i += 3) {
    const Vec3 z = {
        (target.data[i] - model.bias.data[i]) / model.gain.data[i],
        (target.data[i + 1] - model.bias.data[i + 1]) / model.gain.data[i + 1],
        (target.data[i + 2] - model.bias.data[i + 2]) / model.gain.data[i + 2]};
    const Vec3 u = inv.mul(z);
    for (int c = 0; c < 3; ++c) x.data[i + c] = signed_pow(u[c], inv_gamma);
  }
  return finish(std::move(x));
}

CompensationResult invert_iterative(const PhotometricModel& model,
                                    const ImageRGB& target, int iters,
                                    double step) {
  if (iters < 1) throw std::invalid_argument("invert_iterative: iters must be >= 1");
  if (!target.same_size(model.gain))
    throw std::invalid_argument("invert_iterative: dimension mismatch");
  if (!target.all_finite())
    throw std::invalid_argument("invert_iterative: non-finite target");

  ImageRGB x = target;
  ImageRGB residual(target.height, target.width);
  for (int it = 0; it < iters; ++it) {
    ImageRGB pred = predict(model, x);
    double sq = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      residual.data[i] = 2.0 * (pred.data[i] - target.data[i]);
      sq += residual.data[i] * residual.data[i];
    }
    if (!std::isfinite(sq))
      throw std::runtime_error("invert_iterative diverged at iteration " +
                               std::to_string(it));
    ImageRGB g = predict_vjp(model, x, residual);
    for (std::size_t i = 0; i < x.size(); ++i) x.data[i] -= step * g.data[i];
  }
  if (!x.all_finite())
    throw std::runtime_error("invert_iterative diverged (non-finite result)");
  return finish(std::move(x));
}

ImageRGB captured_compensation(const Scene& scene,
                               const CompensationResult& result) {
  return project_capture(scene, result.projector_input);
}

}  // namespace procams
