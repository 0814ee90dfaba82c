#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

#include "procams/image.hpp"
#include "procams/rng.hpp"

namespace test_util {

inline procams::ImageRGB random_image(int h, int w, std::uint64_t seed,
                                      double lo = 0.0, double hi = 1.0) {
  procams::Rng rng(seed);
  procams::ImageRGB img(h, w);
  for (double& v : img.data) v = rng.uniform(lo, hi);
  return img;
}

// unique scratch directory under the system temp dir
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    namespace fs = std::filesystem;
    path_ = fs::temp_directory_path() /
            ("procams_test_" + tag + "_" + std::to_string(counter_++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string str() const { return path_.string(); }
  std::filesystem::path path() const { return path_; }

 private:
  static inline int counter_ = 0;
  std::filesystem::path path_;
};

}  // namespace test_util
