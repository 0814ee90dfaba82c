#pragma once

#include <cstdint>
#include <string>

#include "procams/image.hpp"
#include "procams/mat3.hpp"
#include "procams/rng.hpp"

namespace procams {

/// Synthetic ground-truth projector-camera scene: the stand-in for the real
/// project-and-capture process. Captures of a projector input x follow
///   radiance = vignette * albedo * (mix * x^gamma_prj + ambient)
///   capture  = clamp01(radiance^(1/gamma_cam) + noise)
/// with all per-pixel products elementwise and the exponents per channel.
struct Scene {
  ImageRGB albedo;           // per-pixel reflectance in [0,1]
  Mat3 mix = Mat3::identity();  // channel crosstalk, row-diagonally dominant
  double gamma_prj = 2.2;
  double gamma_cam = 2.0;
  ImageRGB vignette;         // optical falloff in (0,1]
  Vec3 ambient{0.0, 0.0, 0.0};
  double noise_sigma = 0.0;

  int height() const { return albedo.height; }
  int width() const { return albedo.width; }
  void validate() const;
};

enum class TextureKind { blobs, stripes, mixed, from_file };

TextureKind texture_kind_from_string(const std::string& s);
std::string to_string(TextureKind k);

struct SceneConfig {
  int height = 256;
  int width = 256;
  TextureKind texture_kind = TextureKind::mixed;
  double albedo_min = 0.1;
  double albedo_max = 0.95;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::string albedo_path;  // only for TextureKind::from_file
};

/// Deterministic procedural scene for a given config (same config, same
/// scene, bit for bit).
Scene make_scene(const SceneConfig& cfg);

/// Noise-free capture of projector input x.
ImageRGB project_capture(const Scene& scene, const ImageRGB& x);

/// Capture with additive Gaussian sensor noise drawn from `rng`.
ImageRGB project_capture(const Scene& scene, const ImageRGB& x, Rng& rng);

/// Captures under all-black and all-white projector illumination: the
/// physical feasibility band of attainable appearances.
struct CaptureBounds {
  ImageRGB i_minus;
  ImageRGB i_plus;
};
CaptureBounds capture_bounds(const Scene& scene);

/// Capture of the bare surface under uniform gray (0.5) illumination.
ImageRGB capture_surface(const Scene& scene);

/// scene_gt.json plus albedo/vignette PFM sidecars in `dir`.
void save_scene(const Scene& scene, const std::string& dir);
Scene load_scene(const std::string& dir);

}  // namespace procams
