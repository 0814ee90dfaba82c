#include <cmath>

#include "doctest.h"
#include "procams/scene.hpp"
#include "test_util.hpp"

using namespace procams;
using test_util::TempDir;

namespace {

Scene linear_scene(int h, int w, double albedo) {
  Scene s;
  s.albedo = ImageRGB(h, w, albedo);
  s.vignette = ImageRGB(h, w, 1.0);
  s.mix = Mat3::identity();
  s.gamma_prj = 1.0;
  s.gamma_cam = 1.0;
  s.ambient = {0.0, 0.0, 0.0};
  s.noise_sigma = 0.0;
  return s;
}

}  // namespace

TEST_CASE("make_scene is deterministic") {
  SceneConfig cfg;
  cfg.height = 32;
  cfg.width = 32;
  cfg.seed = 1234;
  Scene a = make_scene(cfg);
  Scene b = make_scene(cfg);
  CHECK(a.albedo.data == b.albedo.data);
  CHECK(a.vignette.data == b.vignette.data);
  CHECK(a.mix.m == b.mix.m);
}

TEST_CASE("make_scene respects albedo bounds") {
  SceneConfig cfg;
  cfg.height = 24;
  cfg.width = 24;
  cfg.albedo_min = 0.2;
  cfg.albedo_max = 0.7;
  cfg.seed = 5;
  for (TextureKind kind :
       {TextureKind::blobs, TextureKind::stripes, TextureKind::mixed}) {
    cfg.texture_kind = kind;
    Scene s = make_scene(cfg);
    double lo = 1e9, hi = -1e9;
    for (double v : s.albedo.data) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(lo >= 0.2 - 1e-12);
    CHECK(hi <= 0.7 + 1e-12);
    CHECK(lo == doctest::Approx(0.2));
    CHECK(hi == doctest::Approx(0.7));
  }
}

TEST_CASE("make_scene degenerate bounds give constant albedo") {
  SceneConfig cfg;
  cfg.height = 16;
  cfg.width = 16;
  cfg.albedo_min = 1.0;
  cfg.albedo_max = 1.0;
  cfg.seed = 99;
  Scene s = make_scene(cfg);
  for (double v : s.albedo.data) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("make_scene from file keeps the albedo") {
  TempDir dir("scene_file");
  ImageRGB half(16, 16, 0.5);
  save_png(half, dir.str() + "/albedo.png");
  SceneConfig cfg;
  cfg.height = 16;
  cfg.width = 16;
  cfg.texture_kind = TextureKind::from_file;
  cfg.albedo_path = dir.str() + "/albedo.png";
  Scene s = make_scene(cfg);
  for (double v : s.albedo.data) CHECK(v == doctest::Approx(0.5).epsilon(1e-2));
}

TEST_CASE("make_scene rejects bad albedo bounds") {
  SceneConfig cfg;
  cfg.albedo_min = 0.8;
  cfg.albedo_max = 0.2;
  CHECK_THROWS_AS(make_scene(cfg), std::invalid_argument);
}

TEST_CASE("capture of black input with no ambient is black") {
  Scene s = linear_scene(8, 8, 0.7);
  ImageRGB cap = project_capture(s, ImageRGB(8, 8, 0.0));
  for (double v : cap.data) CHECK(v == 0.0);
}

TEST_CASE("direct evaluation of the simple linear chain") {
  Scene s = linear_scene(8, 8, 0.5);
  ImageRGB cap = project_capture(s, ImageRGB(8, 8, 1.0));
  for (double v : cap.data) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("noise-free capture is deterministic") {
  SceneConfig cfg;
  cfg.height = 16;
  cfg.width = 16;
  cfg.seed = 7;
  Scene s = make_scene(cfg);
  ImageRGB x = test_util::random_image(16, 16, 8);
  ImageRGB a = project_capture(s, x);
  ImageRGB b = project_capture(s, x);
  CHECK(a.data == b.data);
}

TEST_CASE("capture is monotone in the input") {
  SceneConfig cfg;
  cfg.height = 12;
  cfg.width = 12;
  cfg.seed = 11;
  Scene s = make_scene(cfg);
  ImageRGB x = test_util::random_image(12, 12, 9, 0.0, 0.9);
  ImageRGB xp = x;
  for (double& v : xp.data) v = std::min(1.0, v + 0.05);
  ImageRGB a = project_capture(s, x);
  ImageRGB b = project_capture(s, xp);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data[i] <= b.data[i] + 1e-12);
}

TEST_CASE("captures stay inside the bound images") {
  for (int k = 0; k < 5; ++k) {
    SceneConfig cfg;
    cfg.height = 16;
    cfg.width = 16;
    cfg.seed = 100 + k;
    cfg.albedo_min = 0.05;
    Scene s = make_scene(cfg);
    CaptureBounds b = capture_bounds(s);
    for (int j = 0; j < 4; ++j) {
      ImageRGB x = test_util::random_image(16, 16, 1000 * k + j);
      ImageRGB cap = project_capture(s, x);
      for (std::size_t i = 0; i < cap.size(); ++i) {
        CHECK(cap.data[i] >= b.i_minus.data[i] - 1e-12);
        CHECK(cap.data[i] <= b.i_plus.data[i] + 1e-12);
      }
    }
  }
}

TEST_CASE("bound captures: zero ambient darkens to zero, unit chain to one") {
  Scene s = linear_scene(8, 8, 1.0);
  CaptureBounds b = capture_bounds(s);
  for (double v : b.i_minus.data) CHECK(v == 0.0);
  for (double v : b.i_plus.data) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("surface capture uses gray 0.5") {
  Scene s = linear_scene(8, 8, 1.0);
  ImageRGB surf = capture_surface(s);
  for (double v : surf.data) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("surface capture is monotone in albedo") {
  Scene a = linear_scene(8, 8, 0.3);
  Scene b = linear_scene(8, 8, 0.6);
  ImageRGB sa = capture_surface(a);
  ImageRGB sb = capture_surface(b);
  for (std::size_t i = 0; i < sa.size(); ++i) CHECK(sa.data[i] < sb.data[i]);
}

TEST_CASE("noisy capture depends only on the rng seed") {
  SceneConfig cfg;
  cfg.height = 12;
  cfg.width = 12;
  cfg.seed = 3;
  cfg.noise_sigma = 0.05;
  Scene s = make_scene(cfg);
  ImageRGB x(12, 12, 0.5);
  Rng r1(42), r2(42), r3(43);
  ImageRGB a = project_capture(s, x, r1);
  ImageRGB b = project_capture(s, x, r2);
  ImageRGB c = project_capture(s, x, r3);
  CHECK(a.data == b.data);
  CHECK(a.data != c.data);
}

TEST_CASE("scene json round-trip") {
  TempDir dir("scene_json");
  SceneConfig cfg;
  cfg.height = 16;
  cfg.width = 16;
  cfg.seed = 17;
  cfg.noise_sigma = 0.02;
  Scene s = make_scene(cfg);
  save_scene(s, dir.str());
  Scene back = load_scene(dir.str());
  CHECK(back.gamma_prj == s.gamma_prj);
  CHECK(back.gamma_cam == s.gamma_cam);
  CHECK(back.noise_sigma == s.noise_sigma);
  CHECK(back.mix.m == s.mix.m);
  for (std::size_t i = 0; i < s.albedo.size(); ++i)
    CHECK(back.albedo.data[i] ==
          doctest::Approx(s.albedo.data[i]).epsilon(1e-6));
}

TEST_CASE("project_capture validates inputs") {
  Scene s = linear_scene(8, 8, 0.5);
  ImageRGB wrong(4, 4, 0.5);
  CHECK_THROWS_AS(project_capture(s, wrong), std::invalid_argument);
  ImageRGB out(8, 8, 0.5);
  out.at(0, 0, 0) = 1.5;
  CHECK_THROWS_AS(project_capture(s, out), std::invalid_argument);
}
