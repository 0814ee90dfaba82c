#include <cmath>

#include "doctest.h"
#include "procams/metrics.hpp"
#include "ssim_reference.hpp"
#include "test_util.hpp"

using namespace procams;

namespace {

ImageRGB checkerboard(int h, int w, int cell) {
  ImageRGB img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = ((y / cell + x / cell) % 2) ? 1.0 : 0.0;
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = v;
    }
  return img;
}

ImageRGB inverted(const ImageRGB& a) {
  ImageRGB out = a;
  for (double& v : out.data) v = 1.0 - v;
  return out;
}

}  // namespace

TEST_CASE("rmse basics") {
  ImageRGB a = test_util::random_image(8, 8, 1);
  CHECK(rmse(a, a) == 0.0);

  ImageRGB b = a;
  for (double& v : b.data) v += 0.1;
  CHECK(rmse(a, b) == doctest::Approx(0.1).epsilon(1e-12));

  ImageRGB zeros(4, 4, 0.0), ones(4, 4, 1.0);
  CHECK(rmse(zeros, ones) == doctest::Approx(1.0));

  ImageRGB c(3, 3, 0.0);
  CHECK_THROWS_AS(rmse(a, c), std::invalid_argument);
}

TEST_CASE("psnr basics") {
  ImageRGB a = test_util::random_image(8, 8, 2, 0.0, 0.8);
  ImageRGB b = a;
  for (double& v : b.data) v += 0.1;
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(psnr(a, a) == 99.0);
  ImageRGB zeros(4, 4, 0.0), ones(4, 4, 1.0);
  CHECK(psnr(zeros, ones) == doctest::Approx(0.0));
}

TEST_CASE("ssim identity and constants") {
  ImageRGB x = test_util::random_image(16, 16, 3);
  CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-12));
  ImageRGB c1(12, 12, 0.3), c2(12, 12, 0.3);
  CHECK(ssim(c1, c2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim checkerboard against the independent reference") {
  ImageRGB x = checkerboard(16, 16, 4);
  ImageRGB y = inverted(x);
  const double got = ssim(x, y);
  const double ref = ssim_reference::ssim_reference(x, y);
  CHECK(got == doctest::Approx(ref).epsilon(1e-6));
  // frozen from the reference implementation
  CHECK(got == doctest::Approx(-0.872257765824).epsilon(1e-6));
}

TEST_CASE("ssim matches the reference on random pairs") {
  for (int k = 0; k < 10; ++k) {
    ImageRGB a = test_util::random_image(14, 19, 100 + k);
    ImageRGB b = test_util::random_image(14, 19, 200 + k);
    CHECK(ssim(a, b) ==
          doctest::Approx(ssim_reference::ssim_reference(a, b)).epsilon(1e-6));
  }
}

TEST_CASE("metric symmetry and ssim range") {
  for (int k = 0; k < 8; ++k) {
    ImageRGB a = test_util::random_image(13, 13, 300 + k);
    ImageRGB b = test_util::random_image(13, 13, 400 + k);
    CHECK(rmse(a, b) == doctest::Approx(rmse(b, a)).epsilon(1e-15));
    const double s = ssim(a, b);
    CHECK(s == doctest::Approx(ssim(b, a)).epsilon(1e-12));
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("scaling a difference moves rmse and psnr monotonically") {
  ImageRGB a = test_util::random_image(8, 8, 5, 0.2, 0.5);
  ImageRGB d = test_util::random_image(8, 8, 6, -0.1, 0.1);
  ImageRGB b1 = a, b2 = a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    b1.data[i] += d.data[i];
    b2.data[i] += 2.0 * d.data[i];
  }
  CHECK(rmse(a, b2) > rmse(a, b1));
  CHECK(psnr(a, b2) < psnr(a, b1));
}

TEST_CASE("ssim rejects images smaller than the window") {
  ImageRGB a(10, 10, 0.5), b(10, 10, 0.5);
  CHECK_THROWS_AS(ssim(a, b), std::invalid_argument);
}

TEST_CASE("ssim gradient matches finite differences") {
  ImageRGB a = test_util::random_image(12, 12, 7, 0.2, 0.8);
  ImageRGB b = test_util::random_image(12, 12, 8, 0.2, 0.8);
  ImageRGB grad;
  ssim_with_grad(a, b, grad);

  const double h = 1e-6;
  procams::Rng pick(99);
  for (int k = 0; k < 20; ++k) {
    const std::size_t i = pick.below(a.size());
    ImageRGB ap = a, am = a;
    ap.data[i] += h;
    am.data[i] -= h;
    const double fd = (ssim(ap, b) - ssim(am, b)) / (2.0 * h);
    CHECK(grad.data[i] == doctest::Approx(fd).epsilon(1e-4));
  }
}
