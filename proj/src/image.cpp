#include "procams/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace procams {

ImageRGB::ImageRGB(int h, int w, double fill) : height(h), width(w) {
  if (h < 1 || w < 1) throw std::invalid_argument("image dimensions must be >= 1");
  data.assign(static_cast<std::size_t>(h) * w * 3, fill);
}

ImageRGB ImageRGB::constant(int h, int w, double r, double g, double b) {
  ImageRGB img(h, w);
  for (std::size_t i = 0; i < img.data.size(); i += 3) {
    img.data[i] = r;
    img.data[i + 1] = g;
    img.data[i + 2] = b;
  }
  return img;
}

bool ImageRGB::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

bool ImageRGB::in_unit_range() const {
  for (double v : data)
    if (v < 0.0 || v > 1.0) return false;
  return true;
}

ImageRGB clamp01(const ImageRGB& img) {
  ImageRGB out = img;
  out.unclamped = false;
  for (double& v : out.data) v = std::min(1.0, std::max(0.0, v));
  return out;
}

namespace {

struct PngReadCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* fp = nullptr;
  ~PngReadCloser() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

struct PngWriteCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* fp = nullptr;
  ~PngWriteCloser() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

[[noreturn]] void png_error_thrower(png_structp, png_const_charp msg) {
  throw std::runtime_error(std::string("libpng: ") + (msg ? msg : "error"));
}

}  // namespace

ImageRGB load_png(const std::string& path) {
  PngReadCloser s;
  s.fp = std::fopen(path.c_str(), "rb");
  if (!s.fp) throw std::runtime_error("cannot open PNG file: " + path);

  s.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                 png_error_thrower, nullptr);
  if (!s.png) throw std::runtime_error("png_create_read_struct failed");
  s.info = png_create_info_struct(s.png);
  if (!s.info) throw std::runtime_error("png_create_info_struct failed");

  png_init_io(s.png, s.fp);
  png_read_info(s.png, s.info);

  const png_uint_32 w = png_get_image_width(s.png, s.info);
  const png_uint_32 h = png_get_image_height(s.png, s.info);
  const int depth = png_get_bit_depth(s.png, s.info);
  const int color = png_get_color_type(s.png, s.info);

  if (color != PNG_COLOR_TYPE_RGB && color != PNG_COLOR_TYPE_RGB_ALPHA)
    throw std::runtime_error("unsupported PNG color type (need RGB or RGBA): " +
                             path);
  if (depth != 8 && depth != 16)
    throw std::runtime_error("unsupported PNG bit depth (need 8 or 16): " + path);

  if (color == PNG_COLOR_TYPE_RGB_ALPHA) png_set_strip_alpha(s.png);
  png_read_update_info(s.png, s.info);

  const std::size_t rowbytes = png_get_rowbytes(s.png, s.info);
  std::vector<unsigned char> raster(rowbytes * h);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = raster.data() + y * rowbytes;
  png_read_image(s.png, rows.data());
  png_read_end(s.png, nullptr);

  ImageRGB img(static_cast<int>(h), static_cast<int>(w));
  const double norm = depth == 8 ? 1.0 / 255.0 : 1.0 / 65535.0;
  for (png_uint_32 y = 0; y < h; ++y) {
    const unsigned char* row = rows[y];
    for (png_uint_32 x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        unsigned v;
        if (depth == 8) {
          v = row[3 * x + c];
        } else {
          // PNG stores 16-bit samples big-endian
          v = (static_cast<unsigned>(row[6 * x + 2 * c]) << 8) |
              row[6 * x + 2 * c + 1];
        }
        img.at(static_cast<int>(y), static_cast<int>(x), c) = v * norm;
      }
    }
  }
  return img;
}

void save_png(const ImageRGB& img, const std::string& path) {
  if (img.height < 1 || img.width < 1)
    throw std::invalid_argument("save_png: empty image");
  if (!img.all_finite()) throw std::invalid_argument("save_png: non-finite values");
  if (!img.in_unit_range())
    throw std::invalid_argument("save_png: unclamped image refused (values outside [0,1])");

  PngWriteCloser s;
  s.fp = std::fopen(path.c_str(), "wb");
  if (!s.fp) throw std::runtime_error("cannot open PNG file for writing: " + path);

  s.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                  png_error_thrower, nullptr);
  if (!s.png) throw std::runtime_error("png_create_write_struct failed");
  s.info = png_create_info_struct(s.png);
  if (!s.info) throw std::runtime_error("png_create_info_struct failed");

  png_init_io(s.png, s.fp);
  // fixed settings so identical images always produce identical bytes
  png_set_compression_level(s.png, 6);
  png_set_filter(s.png, 0, PNG_FILTER_NONE);
  png_set_IHDR(s.png, s.info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(s.png, s.info);

  std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        row[3 * x + c] = static_cast<unsigned char>(
            std::lround(img.at(y, x, c) * 255.0));
    png_write_row(s.png, row.data());
  }
  png_write_end(s.png, s.info);
}

namespace {

std::string next_pfm_token(std::istream& in) {
  std::string tok;
  in >> tok;
  if (!in) throw std::runtime_error("malformed PFM header (truncated)");
  return tok;
}

}  // namespace

ImageRGB load_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open PFM file: " + path);

  const std::string magic = next_pfm_token(in);
  if (magic == "Pf") throw std::runtime_error("grayscale PFM unsupported: " + path);
  if (magic != "PF") throw std::runtime_error("not a PFM file (bad magic): " + path);

  int w = 0, h = 0;
  double scale = 0.0;
  try {
    w = std::stoi(next_pfm_token(in));
    h = std::stoi(next_pfm_token(in));
    scale = std::stod(next_pfm_token(in));
  } catch (const std::exception&) {
    throw std::runtime_error("malformed PFM header: " + path);
  }
  if (w < 1 || h < 1) throw std::runtime_error("malformed PFM dimensions: " + path);
  if (scale == 0.0) throw std::runtime_error("malformed PFM scale: " + path);
  in.get();  // single whitespace byte after the scale line

  const bool little_endian = scale < 0.0;
  std::vector<float> buf(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != buf.size() * sizeof(float))
    throw std::runtime_error("truncated PFM payload: " + path);

  if (!little_endian) {
    for (float& f : buf) {
      unsigned char* b = reinterpret_cast<unsigned char*>(&f);
      std::swap(b[0], b[3]);
      std::swap(b[1], b[2]);
    }
  }

  // PFM scanlines run bottom-to-top
  ImageRGB img(h, w);
  img.unclamped = true;
  for (int y = 0; y < h; ++y) {
    const float* row = buf.data() + static_cast<std::size_t>(h - 1 - y) * w * 3;
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = row[3 * x + c];
  }
  return img;
}

void save_pfm(const ImageRGB& img, const std::string& path) {
  if (img.height < 1 || img.width < 1)
    throw std::invalid_argument("save_pfm: empty image");
  if (!img.all_finite()) throw std::invalid_argument("save_pfm: non-finite values");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open PFM file for writing: " + path);

  out << "PF\n" << img.width << " " << img.height << "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(img.width) * 3);
  for (int y = img.height - 1; y >= 0; --y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        row[3 * x + c] = static_cast<float>(img.at(y, x, c));
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("failed writing PFM: " + path);
}

ImageRGB upsample_bilinear(const ImageRGB& src, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1)
    throw std::invalid_argument("upsample_bilinear: output dims must be >= 1");
  if (src.height < 1 || src.width < 1)
    throw std::invalid_argument("upsample_bilinear: empty source");

  ImageRGB dst(out_h, out_w);
  dst.unclamped = src.unclamped;
  const double sy =
      out_h > 1 ? static_cast<double>(src.height - 1) / (out_h - 1) : 0.0;
  const double sx =
      out_w > 1 ? static_cast<double>(src.width - 1) / (out_w - 1) : 0.0;
  for (int y = 0; y < out_h; ++y) {
    const double fy = y * sy;
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = x * sx;
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top =
            src.at(y0, x0, c) * (1.0 - wx) + src.at(y0, x1, c) * wx;
        const double bot =
            src.at(y1, x0, c) * (1.0 - wx) + src.at(y1, x1, c) * wx;
        dst.at(y, x, c) = top * (1.0 - wy) + bot * wy;
      }
    }
  }
  return dst;
}

}  // namespace procams
