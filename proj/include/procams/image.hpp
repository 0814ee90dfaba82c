#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace procams {

/// Dense H x W x 3 image of doubles, row-major, channel-interleaved.
/// Values are nominally in [0,1]; `unclamped` marks images that are allowed
/// to leave that range (compensation images before clipping).
struct ImageRGB {
  int height = 0;
  int width = 0;
  bool unclamped = false;
  std::vector<double> data;

  ImageRGB() = default;
  ImageRGB(int h, int w, double fill = 0.0);

  static ImageRGB constant(int h, int w, double r, double g, double b);

  double& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  double at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  std::size_t size() const { return data.size(); }
  bool same_size(const ImageRGB& o) const {
    return height == o.height && width == o.width;
  }
  bool all_finite() const;
  bool in_unit_range() const;
};

ImageRGB clamp01(const ImageRGB& img);

/// 8- or 16-bit RGB/RGBA PNG, normalized by (2^depth - 1). Alpha is dropped.
ImageRGB load_png(const std::string& path);

/// 8-bit RGB, round(v*255). Refuses values outside [0,1].
void save_png(const ImageRGB& img, const std::string& path);

/// Portable Float Map, "PF" color header, scale -1.0 (little-endian),
/// bottom-to-top scanlines, float32 samples.
ImageRGB load_pfm(const std::string& path);
void save_pfm(const ImageRGB& img, const std::string& path);

/// Corner-aligned bilinear resampling to out_h x out_w (identity at equal
/// sizes, works for both up- and downsampling).
ImageRGB upsample_bilinear(const ImageRGB& src, int out_h, int out_w);

}  // namespace procams
