#include "procams/scene.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace procams {

namespace {

// crosstalk blended into the identity for procedural scenes; rows sum to 1
// and stay diagonally dominant after the 90/10 blend
const Mat3 kCrosstalk = [] {
  Mat3 c;
  c.m = {0.70, 0.20, 0.10, 0.15, 0.70, 0.15, 0.10, 0.20, 0.70};
  return c;
}();

void add_gaussian_blobs(ImageRGB& img, Rng& rng, int count) {
  const int h = img.height, w = img.width;
  const double dim = std::min(h, w);
  for (int k = 0; k < count; ++k) {
    const double cy = rng.uniform(0.0, h - 1.0);
    const double cx = rng.uniform(0.0, w - 1.0);
    const double sigma = rng.uniform(0.10, 0.35) * dim;
    const Vec3 amp = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                      rng.uniform(-0.5, 0.5)};
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        const double g = std::exp(-d2 * inv2s2);
        for (int c = 0; c < 3; ++c) img.at(y, x, c) += amp[c] * g;
      }
  }
}

void add_stripe_gratings(ImageRGB& img, Rng& rng, int count) {
  const int h = img.height, w = img.width;
  const double dim = std::max(h, w);
  for (int k = 0; k < count; ++k) {
    const double theta = rng.uniform(0.0, 3.14159265358979323846);
    const double freq = rng.uniform(2.0, 12.0);
    const double phase = rng.uniform(0.0, 6.28318530717958647692);
    const double amp = rng.uniform(0.15, 0.4);
    const double ct = std::cos(theta), st = std::sin(theta);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double v =
            amp * std::sin(6.28318530717958647692 * freq * (x * ct + y * st) / dim +
                           phase);
        for (int c = 0; c < 3; ++c) img.at(y, x, c) += v;
      }
  }
}

void add_broadband_noise(ImageRGB& img, Rng& rng, double amp) {
  ImageRGB coarse(16, 16);
  for (double& v : coarse.data) v = rng.uniform(-1.0, 1.0);
  ImageRGB up = upsample_bilinear(coarse, img.height, img.width);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] += amp * up.data[i];
}

void rescale_into(ImageRGB& img, double lo, double hi) {
  double mn = img.data[0], mx = img.data[0];
  for (double v : img.data) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  if (mx - mn < 1e-12) {
    const double mid = 0.5 * (lo + hi);
    for (double& v : img.data) v = mid;
    return;
  }
  const double s = (hi - lo) / (mx - mn);
  for (double& v : img.data) v = lo + (v - mn) * s;
}

double signed_pow(double u, double p) {
  if (u == 0.0) return 0.0;
  return u < 0.0 ? -std::pow(-u, p) : std::pow(u, p);
}

}  // namespace

void Scene::validate() const {
  if (albedo.height < 1 || albedo.width < 1)
    throw std::invalid_argument("scene: empty albedo");
  if (!albedo.same_size(vignette))
    throw std::invalid_argument("scene: albedo/vignette dimension mismatch");
  for (int r = 0; r < 3; ++r) {
    double off = 0.0;
    for (int c = 0; c < 3; ++c)
      if (c != r) off += std::abs(mix(r, c));
    if (mix(r, r) <= off)
      throw std::invalid_argument("scene: mix matrix not row-diagonally dominant");
  }
  if (gamma_prj <= 0.0 || gamma_cam <= 0.0)
    throw std::invalid_argument("scene: gammas must be positive");
  if (noise_sigma < 0.0) throw std::invalid_argument("scene: negative noise sigma");
}

TextureKind texture_kind_from_string(const std::string& s) {
  if (s == "blobs") return TextureKind::blobs;
  if (s == "stripes") return TextureKind::stripes;
  if (s == "mixed") return TextureKind::mixed;
  if (s == "from-file") return TextureKind::from_file;
  throw std::invalid_argument("unknown texture kind: " + s);
}

std::string to_string(TextureKind k) {
  switch (k) {
    case TextureKind::blobs: return "blobs";
    case TextureKind::stripes: return "stripes";
    case TextureKind::mixed: return "mixed";
    case TextureKind::from_file: return "from-file";
  }
  return "mixed";
}

Scene make_scene(const SceneConfig& cfg) {
  if (cfg.albedo_min < 0.0 || cfg.albedo_max > 1.0 ||
      cfg.albedo_min > cfg.albedo_max)
    throw std::invalid_argument(
        "make_scene: need 0 <= albedo_min <= albedo_max <= 1");
  if (cfg.height < 1 || cfg.width < 1)
    throw std::invalid_argument("make_scene: dimensions must be >= 1");

  Scene scene;
  Rng rng(stream_seed(cfg.seed, "scene-albedo"));

  if (cfg.texture_kind == TextureKind::from_file) {
    scene.albedo = load_png(cfg.albedo_path);
    if (scene.albedo.height != cfg.height || scene.albedo.width != cfg.width)
      scene.albedo = upsample_bilinear(scene.albedo, cfg.height, cfg.width);
  } else {
    ImageRGB field(cfg.height, cfg.width, 0.5);
    switch (cfg.texture_kind) {
      case TextureKind::blobs:
        add_gaussian_blobs(field, rng, 6);
        break;
      case TextureKind::stripes:
        add_stripe_gratings(field, rng, 3);
        break;
      default:
        add_gaussian_blobs(field, rng, 4);
        add_stripe_gratings(field, rng, 2);
        add_broadband_noise(field, rng, 0.2);
        break;
    }
    rescale_into(field, cfg.albedo_min, cfg.albedo_max);
    scene.albedo = std::move(field);
  }

  // radial falloff, 1 at the center and 0.7 at the farthest corner
  scene.vignette = ImageRGB(cfg.height, cfg.width, 1.0);
  const double cy = (cfg.height - 1) / 2.0;
  const double cx = (cfg.width - 1) / 2.0;
  const double rmax2 = std::max(cy * cy + cx * cx, 1e-12);
  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x) {
      const double r2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
      const double v = 1.0 - 0.3 * (r2 / rmax2);
      for (int c = 0; c < 3; ++c) scene.vignette.at(y, x, c) = v;
    }

  Mat3 id = Mat3::identity();
  for (int i = 0; i < 9; ++i)
    scene.mix.m[i] = 0.9 * id.m[i] + 0.1 * kCrosstalk.m[i];
  scene.gamma_prj = 2.2;
  scene.gamma_cam = 2.0;
  scene.ambient = {0.05, 0.05, 0.05};
  scene.noise_sigma = cfg.noise_sigma;
  scene.validate();
  return scene;
}

namespace {

ImageRGB capture_impl(const Scene& scene, const ImageRGB& x, Rng* rng) {
  if (!x.same_size(scene.albedo))
    throw std::invalid_argument("project_capture: input dims do not match scene");
  if (!x.all_finite() || !x.in_unit_range())
    throw std::invalid_argument("project_capture: input must be in [0,1]");

  const double inv_gc = 1.0 / scene.gamma_cam;
  ImageRGB out(x.height, x.width);
  for (int y = 0; y < x.height; ++y)
    for (int xx = 0; xx < x.width; ++xx) {
      Vec3 p = {std::pow(x.at(y, xx, 0), scene.gamma_prj),
                std::pow(x.at(y, xx, 1), scene.gamma_prj),
                std::pow(x.at(y, xx, 2), scene.gamma_prj)};
      Vec3 lit = scene.mix.mul(p);
      for (int c = 0; c < 3; ++c) {
        const double radiance = scene.vignette.at(y, xx, c) *
                                scene.albedo.at(y, xx, c) *
                                (lit[c] + scene.ambient[c]);
        double v = std::pow(radiance, inv_gc);
        if (rng) v += scene.noise_sigma * rng->gaussian();
        out.at(y, xx, c) = std::min(1.0, std::max(0.0, v));
      }
    }
  return out;
}

}  // namespace

ImageRGB project_capture(const Scene& scene, const ImageRGB& x) {
  return capture_impl(scene, x, nullptr);
}

ImageRGB project_capture(const Scene& scene, const ImageRGB& x, Rng& rng) {
  return capture_impl(scene, x, scene.noise_sigma > 0.0 ? &rng : nullptr);
}

CaptureBounds capture_bounds(const Scene& scene) {
  CaptureBounds b;
  b.i_minus = project_capture(
      scene, ImageRGB(scene.height(), scene.width(), 0.0));
  b.i_plus = project_capture(
      scene, ImageRGB(scene.height(), scene.width(), 1.0));
  return b;
}

ImageRGB capture_surface(const Scene& scene) {
  return project_capture(scene, ImageRGB(scene.height(), scene.width(), 0.5));
}

void save_scene(const Scene& scene, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_pfm(scene.albedo, (fs::path(dir) / "albedo.pfm").string());
  save_pfm(scene.vignette, (fs::path(dir) / "vignette.pfm").string());

  nlohmann::ordered_json j;
  j["mix"] = scene.mix.m;
  j["gamma_prj"] = scene.gamma_prj;
  j["gamma_cam"] = scene.gamma_cam;
  j["ambient"] = scene.ambient;
  j["noise_sigma"] = scene.noise_sigma;
  j["albedo"] = "albedo.pfm";
  j["vignette"] = "vignette.pfm";
  std::ofstream out(fs::path(dir) / "scene_gt.json");
  if (!out) throw std::runtime_error("cannot write scene_gt.json in " + dir);
  out << j.dump(2) << "\n";
}

Scene load_scene(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "scene_gt.json");
  if (!in) throw std::runtime_error("missing scene_gt.json in " + dir);
  nlohmann::json j;
  in >> j;

  Scene scene;
  const auto mix = j.at("mix").get<std::array<double, 9>>();
  scene.mix.m = mix;
  scene.gamma_prj = j.at("gamma_prj").get<double>();
  scene.gamma_cam = j.at("gamma_cam").get<double>();
  scene.ambient = j.at("ambient").get<Vec3>();
  scene.noise_sigma = j.at("noise_sigma").get<double>();
  scene.albedo =
      load_pfm((fs::path(dir) / j.at("albedo").get<std::string>()).string());
  scene.vignette =
      load_pfm((fs::path(dir) / j.at("vignette").get<std::string>()).string());
  scene.albedo.unclamped = false;
  scene.vignette.unclamped = false;
  scene.validate();
  return scene;
}

}  // namespace procams
