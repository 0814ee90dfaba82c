#include <png.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "procams/image.hpp"
#include "test_util.hpp"

using namespace procams;
using test_util::TempDir;

TEST_CASE("png round-trip of normalized bytes") {
  TempDir dir("png");
  ImageRGB img(1, 1);
  img.at(0, 0, 0) = 1.0;
  img.at(0, 0, 1) = 0.0;
  img.at(0, 0, 2) = 128.0 / 255.0;
  save_png(img, dir.str() + "/a.png");
  ImageRGB back = load_png(dir.str() + "/a.png");
  CHECK(back.at(0, 0, 0) == doctest::Approx(1.0));
  CHECK(back.at(0, 0, 1) == doctest::Approx(0.0));
  CHECK(back.at(0, 0, 2) == doctest::Approx(128.0 / 255.0));
}

TEST_CASE("png save rounds half up") {
  TempDir dir("png_round");
  ImageRGB img(1, 1);
  img.at(0, 0, 0) = 1.0;
  img.at(0, 0, 1) = 0.5;  // 127.5 -> 128
  img.at(0, 0, 2) = 0.0;
  save_png(img, dir.str() + "/b.png");
  ImageRGB back = load_png(dir.str() + "/b.png");
  CHECK(back.at(0, 0, 1) == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
}

TEST_CASE("png round-trip error bounded by half a code") {
  TempDir dir("png_rt");
  ImageRGB img = test_util::random_image(9, 13, 77);
  save_png(img, dir.str() + "/c.png");
  ImageRGB back = load_png(dir.str() + "/c.png");
  for (std::size_t i = 0; i < img.size(); ++i)
    CHECK(std::abs(back.data[i] - img.data[i]) <= 1.0 / 510.0 + 1e-12);
}

TEST_CASE("png refuses unclamped values") {
  TempDir dir("png_refuse");
  ImageRGB img(2, 2, 0.5);
  img.at(0, 0, 0) = 1.0 + 1e-9;
  CHECK_THROWS_WITH_AS(save_png(img, dir.str() + "/d.png"),
                       doctest::Contains("unclamped"), std::invalid_argument);
}

TEST_CASE("png load errors are descriptive") {
  TempDir dir("png_err");
  CHECK_THROWS_AS(load_png(dir.str() + "/missing.png"), std::runtime_error);
}

TEST_CASE("pfm round-trip is bit exact for float values") {
  TempDir dir("pfm");
  ImageRGB img(3, 2);
  img.unclamped = true;
  double vals[] = {-0.2, 1.6, 0.0, 0.25, -1.0, 3.5};
  for (std::size_t i = 0; i < img.size(); ++i)
    img.data[i] = static_cast<double>(static_cast<float>(vals[i % 6]));
  save_pfm(img, dir.str() + "/a.pfm");
  ImageRGB back = load_pfm(dir.str() + "/a.pfm");
  REQUIRE(back.height == 3);
  REQUIRE(back.width == 2);
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(back.data[i] == img.data[i]);
}

TEST_CASE("pfm rejects grayscale with a clear message") {
  TempDir dir("pfm_gray");
  {
    std::ofstream out(dir.str() + "/g.pfm", std::ios::binary);
    out << "Pf\n2 2\n-1.0\n";
    float z[4] = {0, 0, 0, 0};
    out.write(reinterpret_cast<char*>(z), sizeof(z));
  }
  CHECK_THROWS_WITH_AS(load_pfm(dir.str() + "/g.pfm"),
                       doctest::Contains("grayscale PFM unsupported"),
                       std::runtime_error);
}

TEST_CASE("pfm detects truncated payload") {
  TempDir dir("pfm_trunc");
  {
    std::ofstream out(dir.str() + "/t.pfm", std::ios::binary);
    out << "PF\n2 2\n-1.0\n";
    float z[3] = {0, 0, 0};  // needs 12 floats
    out.write(reinterpret_cast<char*>(z), sizeof(z));
  }
  CHECK_THROWS_WITH_AS(load_pfm(dir.str() + "/t.pfm"),
                       doctest::Contains("truncated"), std::runtime_error);
}

TEST_CASE("bilinear upsampling hits the midpoint") {
  ImageRGB src(1, 2);
  for (int c = 0; c < 3; ++c) {
    src.at(0, 0, c) = 0.0;
    src.at(0, 1, c) = 1.0;
  }
  ImageRGB up = upsample_bilinear(src, 1, 3);
  for (int c = 0; c < 3; ++c) {
    CHECK(up.at(0, 0, c) == doctest::Approx(0.0));
    CHECK(up.at(0, 1, c) == doctest::Approx(0.5));
    CHECK(up.at(0, 2, c) == doctest::Approx(1.0));
  }
}

TEST_CASE("bilinear upsampling is identity at equal size") {
  ImageRGB src = test_util::random_image(7, 5, 3);
  ImageRGB same = upsample_bilinear(src, 7, 5);
  for (std::size_t i = 0; i < src.size(); ++i) CHECK(same.data[i] == src.data[i]);
}

TEST_CASE("bilinear upsampling preserves constants and bounds") {
  ImageRGB c = ImageRGB::constant(3, 3, 0.25, 0.5, 0.75);
  ImageRGB up = upsample_bilinear(c, 9, 17);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 17; ++x) {
      CHECK(up.at(y, x, 0) == doctest::Approx(0.25));
      CHECK(up.at(y, x, 2) == doctest::Approx(0.75));
    }

  ImageRGB r = test_util::random_image(6, 6, 11);
  double lo = 1e30, hi = -1e30;
  for (double v : r.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  ImageRGB up2 = upsample_bilinear(r, 23, 31);
  for (double v : up2.data) {
    CHECK(v >= lo - 1e-12);
    CHECK(v <= hi + 1e-12);
  }
}

TEST_CASE("bilinear upsampling rejects zero dims") {
  ImageRGB src(2, 2, 0.0);
  CHECK_THROWS_AS(upsample_bilinear(src, 0, 4), std::invalid_argument);
}

TEST_CASE("16-bit png loads full range") {
  TempDir dir("png16");
  const std::string path = dir.str() + "/w16.png";
  {
    FILE* fp = std::fopen(path.c_str(), "wb");
    REQUIRE(fp);
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    png_init_io(png, fp);
    png_set_IHDR(png, info, 2, 2, 16, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    unsigned char row[12];
    for (int i = 0; i < 12; ++i) row[i] = 0xff;  // 65535 everywhere
    png_write_row(png, row);
    png_write_row(png, row);
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
  }
  ImageRGB back = load_png(path);
  REQUIRE(back.height == 2);
  for (double v : back.data) CHECK(v == doctest::Approx(1.0));
}
