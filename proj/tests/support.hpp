#pragma once

// Fixture builders shared by the unit tests and the acceptance runner.
// Everything is generated from a seed so runs are reproducible.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "ssltune/cli.hpp"
#include "ssltune/codec.hpp"
#include "ssltune/correspondence.hpp"
#include "ssltune/dense_io.hpp"
#include "ssltune/image.hpp"
#include "ssltune/rng.hpp"

namespace ssltune::fixtures {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("ssltune-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const noexcept { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline Rgb random_rgb(RngStream& rng) {
  return {std::uint8_t(rng.below(256)), std::uint8_t(rng.below(256)), std::uint8_t(rng.below(256))};
}

inline ImageBuffer random_noise_image(RngStream& rng, int w, int h) {
  ImageBuffer img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.set(x, y, random_rgb(rng));
  return img;
}

// Flat-colored cells of random size with a faint gradient on top, so local
// mean colors vary strongly across the image.
inline ImageBuffer colorful_image(RngStream& rng, int w, int h) {
  const int cell = int(rng.uniform_int(10, 28));
  const int cols = (w + cell - 1) / cell;
  const int rows = (h + cell - 1) / cell;
  std::vector<Rgb> palette(std::size_t(rows * cols));
  for (auto& c : palette) c = random_rgb(rng);
  ImageBuffer img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      Rgb c = palette[std::size_t((y / cell) * cols + x / cell)];
      const int g = (x + y) % 7;
      c.r = std::uint8_t(std::min(255, c.r + g));
      img.set(x, y, c);
    }
  return img;
}

// `n` colorful PNG images of varied size, names img_000.png, ...
inline std::vector<std::string> write_corpus(const fs::path& dir, int n, std::uint64_t seed,
                                             int min_side = 64, int max_side = 128) {
  fs::create_directories(dir);
  RngStream rng(seed);
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) {
    const int w = int(rng.uniform_int(min_side, max_side));
    const int h = int(rng.uniform_int(min_side, max_side));
    std::string name = "img_" + std::to_string(1000 + i).substr(1) + ".png";
    write_png(colorful_image(rng, w, h), dir / name);
    names.push_back(std::move(name));
  }
  return names;
}

inline FeatureMap random_features(RngStream& rng, int rows, int cols, int dim) {
  std::vector<float> v(std::size_t(rows) * std::size_t(cols) * std::size_t(dim));
  for (auto& x : v) x = float(rng.uniform(-1.0, 1.0));
  return FeatureMap(rows, cols, dim, std::move(v));
}

// Blocky label map whose object class 0 covers most of the image, so k*
// is 0 and its region spans many patches.
inline RegionLabelMap blocky_labels(RngStream& rng, int w, int h, int classes) {
  const int block = int(rng.uniform_int(4, 20));
  const int bc = (w + block - 1) / block;
  const int br = (h + block - 1) / block;
  std::vector<std::uint16_t> cell(std::size_t(bc * br));
  for (auto& c : cell)
    c = rng.bernoulli(0.6) ? 0 : std::uint16_t(1 + rng.below(std::uint64_t(classes - 1)));
  std::vector<std::uint16_t> labels(std::size_t(w) * std::size_t(h));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      labels[std::size_t(y) * std::size_t(w) + std::size_t(x)] =
          cell[std::size_t((y / block) * bc + x / block)];
  return RegionLabelMap(h, w, classes, std::move(labels));
}

// Image size whose patch grid is rows x cols.
inline std::pair<int, int> size_for_grid(RngStream& rng, int rows, int cols, int ps) {
  const int w = int(rng.uniform_int((cols - 1) * ps + 1, cols * ps));
  const int h = int(rng.uniform_int((rows - 1) * ps + 1, rows * ps));
  return {w, h};
}

// Random pair with grids between min_grid and max_grid patches per side.
inline PairData random_pair(RngStream& rng, int dim, int min_grid = 4, int max_grid = 32,
                            int ps = kDefaultPatchSize, int classes = 3, bool black = false) {
  PairData p;
  p.patch_size = ps;
  p.id1 = "a.png";
  p.id2 = "b.png";
  for (int i = 0; i < 2; ++i) {
    const int rows = int(rng.uniform_int(min_grid, max_grid));
    const int cols = int(rng.uniform_int(min_grid, max_grid));
    const auto [w, h] = size_for_grid(rng, rows, cols, ps);
    ImageBuffer img = black ? ImageBuffer(w, h) : colorful_image(rng, w, h);
    FeatureMap f = random_features(rng, rows, cols, dim);
    RegionLabelMap m = blocky_labels(rng, w, h, classes);
    (i == 0 ? p.image1 : p.image2) = std::move(img);
    (i == 0 ? p.features1 : p.features2) = std::move(f);
    (i == 0 ? p.labels1 : p.labels2) = std::move(m);
  }
  return p;
}

// Writes the pair's six files under dir/<stem>_* and returns its record
// with paths relative to dir.
inline PairRecord write_pair(const PairData& p, const fs::path& dir, const std::string& stem) {
  fs::create_directories(dir);
  PairRecord r;
  r.image1 = stem + "_1.png";
  r.image2 = stem + "_2.png";
  r.featuremap1 = stem + "_1.vgft";
  r.featuremap2 = stem + "_2.vgft";
  r.labelmap1 = stem + "_1.vglm";
  r.labelmap2 = stem + "_2.vglm";
  r.patch_size = p.patch_size;
  write_png(p.image1, dir / r.image1);
  write_png(p.image2, dir / r.image2);
  write_feature_map(p.features1, dir / r.featuremap1);
  write_feature_map(p.features2, dir / r.featuremap2);
  write_label_map(p.labels1, dir / r.labelmap1);
  write_label_map(p.labels2, dir / r.labelmap2);
  return r;
}

inline void write_pair_manifest(const std::vector<PairRecord>& pairs, const fs::path& path) {
  const std::string text = pair_manifest_to_json(pairs).dump(2) + "\n";
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline std::string read_text(const fs::path& path) {
  const auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

// External LLaVA-style records, bare-array form.
inline std::string external_records_json(int n, const std::string& prefix = "inst") {
  Json arr = Json::array();
  for (int i = 0; i < n; ++i)
    arr.push_back(Json{{"id", prefix + "-" + std::to_string(i)},
                       {"image", "coco/" + std::to_string(i) + ".jpg"},
                       {"conversations",
                        Json::array({Json{{"from", "human"}, {"value", "<image>\nWhat is shown?"}},
                                     Json{{"from", "gpt"}, {"value", "A picture."}}})}});
  return arr.dump(1) + "\n";
}

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

inline CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ssltune");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  CliResult r;
  r.code = cli::run(int(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Byte contents of every regular file under dir, keyed by relative path.
inline std::vector<std::pair<std::string, std::vector<std::uint8_t>>> snapshot(const fs::path& dir) {
  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file())
      out.emplace_back(e.path().lexically_relative(dir).generic_string(), read_file(e.path()));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ssltune::fixtures
