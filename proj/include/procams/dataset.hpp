#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "procams/image.hpp"
#include "procams/scene.hpp"

namespace procams {

/// One projector/camera capture session: surface and bound captures plus
/// train/test image pairs, in memory. Mirrors the on-disk setup layout.
struct ImagePair {
  ImageRGB projector;  // input sent to the projector, in [0,1]
  ImageRGB captured;   // camera capture, in [0,1]
};

struct SetupManifest {
  std::string id;
  std::uint64_t seed = 0;
  int n_train = 0;
  int n_test = 0;
  int height = 0;
  int width = 0;
  bool has_scene_gt = false;
};

struct Setup {
  SetupManifest manifest;
  ImageRGB surface;
  ImageRGB i_minus;
  ImageRGB i_plus;
  std::vector<ImagePair> train_pairs;
  std::vector<ImagePair> test_pairs;
  std::optional<Scene> scene_gt;  // synthetic setups only
};

/// Deterministic projector sampling images: solids over the RGB cube corners
/// and mid-grays, axis-aligned gradients, band-limited smooth noise, and
/// stripe/checker patterns (2/2/3/3 per block of ten).
std::vector<ImageRGB> gen_inputs(int n, int height, int width,
                                 std::uint64_t seed);

/// Runs generated inputs through the scene: noisy captures for the pairs,
/// noise-free surface and bound captures. Train and test pairs come from one
/// generated sequence, so their inputs are disjoint by construction.
Setup build_setup(const Scene& scene, int n_train, int n_test,
                  std::uint64_t seed, const std::string& id = "setup_000");

/// Directory layout: manifest.json, surface.png, cam_min.png, cam_max.png,
/// optional scene_gt.json (+ PFM sidecars), train/{prj,cam}/NNNN.png,
/// test/{prj,cam}/NNNN.png.
void write_setup(const Setup& setup, const std::string& dir);
Setup read_setup(const std::string& dir);

}  // namespace procams
