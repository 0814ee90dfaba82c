#include "procams/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace fs = std::filesystem;

namespace procams {

namespace {

// 8 cube corners then mid-grays; solids beyond the palette are random colors
const std::vector<Vec3> kSolidPalette = {
    {0, 0, 0},          {1, 1, 1},          {1, 0, 0},       {0, 1, 0},
    {0, 0, 1},          {0, 1, 1},          {1, 0, 1},       {1, 1, 0},
    {0.25, 0.25, 0.25}, {0.50, 0.50, 0.50}, {0.75, 0.75, 0.75}};

enum class InputKind { solid, gradient, noise, stripes };

// fixed 20/20/30/30 category pattern per block of ten images
InputKind kind_for_index(int i) {
  switch (i % 10) {
    case 0:
    case 1: return InputKind::solid;
    case 2:
    case 3: return InputKind::gradient;
    case 4:
    case 5:
    case 6: return InputKind::noise;
    default: return InputKind::stripes;
  }
}

ImageRGB make_solid(int h, int w, int k, std::uint64_t seed) {
  Vec3 color;
  if (k < static_cast<int>(kSolidPalette.size())) {
    color = kSolidPalette[k];
  } else {
    Rng rng(stream_seed(seed, "input-solid", static_cast<std::uint64_t>(k)));
    color = {rng.uniform(), rng.uniform(), rng.uniform()};
  }
  return ImageRGB::constant(h, w, color[0], color[1], color[2]);
}

ImageRGB make_gradient(int h, int w, int k, std::uint64_t seed) {
  Rng rng(stream_seed(seed, "input-gradient", static_cast<std::uint64_t>(k)));
  const Vec3 c0 = {rng.uniform(), rng.uniform(), rng.uniform()};
  const Vec3 c1 = {rng.uniform(), rng.uniform(), rng.uniform()};
  const bool along_x = (k % 2) == 0;
  ImageRGB img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double t = along_x ? (w > 1 ? double(x) / (w - 1) : 0.0)
                               : (h > 1 ? double(y) / (h - 1) : 0.0);
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) = c0[c] + (c1[c] - c0[c]) * t;
    }
  return img;
}

ImageRGB make_smooth_noise(int h, int w, int k, std::uint64_t seed) {
  Rng rng(stream_seed(seed, "input-noise", static_cast<std::uint64_t>(k)));
  static const int kRes[3] = {4, 8, 16};
  const int res = kRes[k % 3];
  ImageRGB coarse(res, res);
  for (double& v : coarse.data) v = rng.uniform();
  return upsample_bilinear(coarse, h, w);
}

ImageRGB make_stripes(int h, int w, int k, std::uint64_t seed) {
  Rng rng(stream_seed(seed, "input-stripes", static_cast<std::uint64_t>(k)));
  const int freq = 2 + static_cast<int>(rng.below(15));
  const bool checker = (k % 2) == 1;
  const bool along_x = rng.below(2) == 0;
  const Vec3 c0 = {rng.uniform(), rng.uniform(), rng.uniform()};
  const Vec3 c1 = {rng.uniform(), rng.uniform(), rng.uniform()};
  ImageRGB img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int bx = w > 1 ? static_cast<int>(double(x) * freq / w) : 0;
      const int by = h > 1 ? static_cast<int>(double(y) * freq / h) : 0;
      int bit;
      if (checker)
        bit = (bx + by) % 2;
      else
        bit = (along_x ? bx : by) % 2;
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = bit ? c1[c] : c0[c];
    }
  return img;
}

std::string pair_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d.png", i);
  return buf;
}

void write_pairs(const std::vector<ImagePair>& pairs, const fs::path& dir) {
  fs::create_directories(dir / "prj");
  fs::create_directories(dir / "cam");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    save_png(pairs[i].projector, (dir / "prj" / pair_name(int(i))).string());
    save_png(pairs[i].captured, (dir / "cam" / pair_name(int(i))).string());
  }
}

std::vector<ImagePair> read_pairs(const fs::path& dir, int count) {
  std::vector<ImagePair> pairs;
  pairs.reserve(count);
  for (int i = 0; i < count; ++i) {
    for (const char* sub : {"prj", "cam"}) {
      const fs::path p = dir / sub / pair_name(i);
      if (!fs::exists(p))
        throw std::runtime_error("setup incomplete, missing " + p.string());
    }
    ImagePair pair;
    pair.projector = load_png((dir / "prj" / pair_name(i)).string());
    pair.captured = load_png((dir / "cam" / pair_name(i)).string());
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

}  // namespace

std::vector<ImageRGB> gen_inputs(int n, int height, int width,
                                 std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_inputs: n must be >= 1");
  std::vector<ImageRGB> out;
  out.reserve(n);
  int counts[4] = {0, 0, 0, 0};
  for (int i = 0; i < n; ++i) {
    const InputKind kind = kind_for_index(i);
    const int k = counts[static_cast<int>(kind)]++;
    switch (kind) {
      case InputKind::solid: out.push_back(make_solid(height, width, k, seed)); break;
      case InputKind::gradient: out.push_back(make_gradient(height, width, k, seed)); break;
      case InputKind::noise: out.push_back(make_smooth_noise(height, width, k, seed)); break;
      case InputKind::stripes: out.push_back(make_stripes(height, width, k, seed)); break;
    }
  }
  return out;
}

Setup build_setup(const Scene& scene, int n_train, int n_test,
                  std::uint64_t seed, const std::string& id) {
  if (n_train < 1 || n_test < 1)
    throw std::invalid_argument("build_setup: n_train and n_test must be >= 1");
  scene.validate();

  Setup setup;
  setup.manifest.id = id;
  setup.manifest.seed = seed;
  setup.manifest.n_train = n_train;
  setup.manifest.n_test = n_test;
  setup.manifest.height = scene.height();
  setup.manifest.width = scene.width();
  setup.manifest.has_scene_gt = true;

  setup.surface = capture_surface(scene);
  CaptureBounds bounds = capture_bounds(scene);
  setup.i_minus = std::move(bounds.i_minus);
  setup.i_plus = std::move(bounds.i_plus);

  // one input sequence split into train prefix and test suffix keeps the two
  // sets disjoint
  std::vector<ImageRGB> inputs = gen_inputs(
      n_train + n_test, scene.height(), scene.width(), stream_seed(seed, "inputs"));
  for (int i = 0; i < n_train + n_test; ++i) {
    Rng noise_rng(stream_seed(seed, "capture-noise", static_cast<std::uint64_t>(i)));
    ImagePair pair;
    pair.captured = project_capture(scene, inputs[i], noise_rng);
    pair.projector = std::move(inputs[i]);
    if (i < n_train)
      setup.train_pairs.push_back(std::move(pair));
    else
      setup.test_pairs.push_back(std::move(pair));
  }
  setup.scene_gt = scene;
  return setup;
}

void write_setup(const Setup& setup, const std::string& dir) {
  fs::create_directories(dir);

  nlohmann::ordered_json j;
  j["id"] = setup.manifest.id;
  j["seed"] = setup.manifest.seed;
  j["n_train"] = setup.manifest.n_train;
  j["n_test"] = setup.manifest.n_test;
  j["height"] = setup.manifest.height;
  j["width"] = setup.manifest.width;
  j["has_scene_gt"] = setup.manifest.has_scene_gt;
  {
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest.json in " + dir);
    out << j.dump(2) << "\n";
  }

  save_png(setup.surface, (fs::path(dir) / "surface.png").string());
  save_png(setup.i_minus, (fs::path(dir) / "cam_min.png").string());
  save_png(setup.i_plus, (fs::path(dir) / "cam_max.png").string());
  if (setup.manifest.has_scene_gt) {
    if (!setup.scene_gt)
      throw std::invalid_argument("write_setup: manifest promises scene_gt");
    save_scene(*setup.scene_gt, dir);
  }
  write_pairs(setup.train_pairs, fs::path(dir) / "train");
  write_pairs(setup.test_pairs, fs::path(dir) / "test");
}

Setup read_setup(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw std::runtime_error("missing manifest.json in " + dir);
  nlohmann::json j;
  in >> j;

  Setup setup;
  setup.manifest.id = j.at("id").get<std::string>();
  setup.manifest.seed = j.at("seed").get<std::uint64_t>();
  setup.manifest.n_train = j.at("n_train").get<int>();
  setup.manifest.n_test = j.at("n_test").get<int>();
  setup.manifest.height = j.at("height").get<int>();
  setup.manifest.width = j.at("width").get<int>();
  setup.manifest.has_scene_gt = j.at("has_scene_gt").get<bool>();

  for (const char* name : {"surface.png", "cam_min.png", "cam_max.png"}) {
    if (!fs::exists(fs::path(dir) / name))
      throw std::runtime_error("setup incomplete, missing " +
                               (fs::path(dir) / name).string());
  }
  setup.surface = load_png((fs::path(dir) / "surface.png").string());
  setup.i_minus = load_png((fs::path(dir) / "cam_min.png").string());
  setup.i_plus = load_png((fs::path(dir) / "cam_max.png").string());
  setup.train_pairs = read_pairs(fs::path(dir) / "train", setup.manifest.n_train);
  setup.test_pairs = read_pairs(fs::path(dir) / "test", setup.manifest.n_test);
  if (setup.manifest.has_scene_gt) setup.scene_gt = load_scene(dir);

  const int h = setup.manifest.height, w = setup.manifest.width;
  auto check_dims = [&](const ImageRGB& img, const char* what) {
    if (img.height != h || img.width != w)
      throw std::runtime_error(std::string("setup image dims mismatch: ") + what);
  };
  check_dims(setup.surface, "surface");
  check_dims(setup.i_minus, "cam_min");
  check_dims(setup.i_plus, "cam_max");
  for (const auto& p : setup.train_pairs) {
    check_dims(p.projector, "train/prj");
    check_dims(p.captured, "train/cam");
  }
  for (const auto& p : setup.test_pairs) {
    check_dims(p.projector, "test/prj");
    check_dims(p.captured, "test/cam");
  }
  return setup;
}

}  // namespace procams
