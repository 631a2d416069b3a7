#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "ssltune/codec.hpp"
#include "ssltune/dense_io.hpp"
#include "ssltune/draw.hpp"
#include "ssltune/error.hpp"
#include "ssltune/generated.hpp"
#include "ssltune/image.hpp"
#include "ssltune/manifest.hpp"
#include "ssltune/rng.hpp"
#include "ssltune/templates.hpp"

namespace ssltune {

inline constexpr int kDefaultPatchSize = 14;

struct PatchIndex {
  int row = 0;
  int col = 0;

  friend constexpr bool operator==(const PatchIndex&, const PatchIndex&) = default;
  friend constexpr auto operator<=>(const PatchIndex&, const PatchIndex&) = default;
};

inline int ceil_div(int a, int b) noexcept { return (a + b - 1) / b; }

inline PatchIndex pixel_to_patch(Point p, int patch_size) noexcept {
  return {p.y / patch_size, p.x / patch_size};
}

// Center pixel of a patch; for patches clipped by the image border the
// center of the clipped window is used so the point stays inside.
inline Point patch_center(PatchIndex patch, int patch_size, int image_width, int image_height) {
  const int x0 = patch.col * patch_size;
  const int y0 = patch.row * patch_size;
  const int w = std::min(patch_size, image_width - x0);
  const int h = std::min(patch_size, image_height - y0);
  return {x0 + w / 2, y0 + h / 2};
}

// k* = argmax_k (#pixels of class k in m1 + #pixels of class k in m2),
// smallest k on ties.
inline int select_object_class(const RegionLabelMap& m1, const RegionLabelMap& m2) {
  if (m1.classes() != m2.classes())
    throw FormatError("label maps disagree on class count (" + std::to_string(m1.classes()) +
                      " vs " + std::to_string(m2.classes()) + ")");
  std::vector<std::uint64_t> counts(std::size_t(m1.classes()), 0);
  for (auto l : m1.labels()) ++counts[l];
  for (auto l : m2.labels()) ++counts[l];
  return int(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

// Per-patch majority class over a label map.
class PatchClassGrid {
 public:
  PatchClassGrid(int rows, int cols, std::vector<int> classes)
      : rows_(rows), cols_(cols), classes_(std::move(classes)) {}

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int at(PatchIndex p) const noexcept {
    return classes_[std::size_t(p.row) * std::size_t(cols_) + std::size_t(p.col)];
  }

  // Patches of class k in row-major order.
  std::vector<PatchIndex> region(int k) const {
    std::vector<PatchIndex> out;
    for (int r = 0; r < rows_; ++r)
      for (int c = 0; c < cols_; ++c)
        if (at({r, c}) == k) out.push_back({r, c});
    return out;
  }

 private:
  int rows_;
  int cols_;
  std::vector<int> classes_;
};

// Majority pixel class inside each (possibly clipped) patch window, ties
// to the smallest class id.
inline PatchClassGrid patch_region_map(const RegionLabelMap& m, int patch_size) {
  if (patch_size < 1) throw ConfigError("patch_size must be >= 1");
  const int rows = ceil_div(m.height(), patch_size);
  const int cols = ceil_div(m.width(), patch_size);
  std::vector<int> classes(std::size_t(rows) * std::size_t(cols));
  std::vector<int> counts(std::size_t(m.classes()));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      std::fill(counts.begin(), counts.end(), 0);
      const int y1 = std::min(m.height(), (r + 1) * patch_size);
      const int x1 = std::min(m.width(), (c + 1) * patch_size);
      for (int y = r * patch_size; y < y1; ++y)
        for (int x = c * patch_size; x < x1; ++x) ++counts[std::size_t(m.at(x, y))];
      classes[std::size_t(r) * std::size_t(cols) + std::size_t(c)] =
          int(std::max_element(counts.begin(), counts.end()) - counts.begin());
    }
  return PatchClassGrid(rows, cols, std::move(classes));
}

// Cosine similarity; -inf when either vector has zero norm.
inline double cosine_similarity(std::span<const float> a, std::span<const float> b) noexcept {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * double(b[i]);
    na += double(a[i]) * double(a[i]);
    nb += double(b[i]) * double(b[i]);
  }
  if (na == 0.0 || nb == 0.0) return -std::numeric_limits<double>::infinity();
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// argmax over `region2` of cosine(f1[q], f2[j]); the first patch in
// row-major order wins ties.
inline PatchIndex match_point(const FeatureMap& f1, PatchIndex q_patch, const FeatureMap& f2,
                              std::vector<PatchIndex> region2) {
  if (region2.empty()) throw EmptyRegion("candidate region in image 2 is empty");
  if (f1.dim() != f2.dim())
    throw FormatError("feature dimensions differ (" + std::to_string(f1.dim()) + " vs " +
                      std::to_string(f2.dim()) + ")");
  std::sort(region2.begin(), region2.end());
  const auto query = f1.at(q_patch.row, q_patch.col);
  PatchIndex best = region2.front();
  double best_sim = -std::numeric_limits<double>::infinity();
  for (const auto& j : region2) {
    const double sim = cosine_similarity(query, f2.at(j.row, j.col));
    if (sim > best_sim) {
      best_sim = sim;
      best = j;
    }
  }
  return best;
}

// Two distinct patches from region2 \ {target}, returned as patch centers.
inline std::array<Point, 2> sample_distractors(const std::vector<PatchIndex>& region2,
                                               PatchIndex target, int patch_size,
                                               int image_width, int image_height, RngStream& rng,
                                               std::array<PatchIndex, 2>* patches = nullptr) {
  std::vector<PatchIndex> pool;
  pool.reserve(region2.size());
  for (const auto& p : region2)
    if (!(p == target)) pool.push_back(p);
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  if (pool.size() < 2)
    throw RegionTooSmall("region holds " + std::to_string(pool.size()) +
                         " patches besides the target; need 2 distractors");
  const std::size_t a = rng.below(pool.size());
  std::size_t b = rng.below(pool.size() - 1);
  if (b >= a) ++b;
  if (patches) *patches = {pool[a], pool[b]};
  return {patch_center(pool[a], patch_size, image_width, image_height),
          patch_center(pool[b], patch_size, image_width, image_height)};
}

enum class CorrLayout { side_by_side, multi_image };

inline std::string to_string(CorrLayout l) {
  return l == CorrLayout::side_by_side ? "side-by-side" : "multi-image";
}

inline CorrLayout parse_layout(std::string_view s) {
  if (s == "side-by-side") return CorrLayout::side_by_side;
  if (s == "multi-image") return CorrLayout::multi_image;
  throw ConfigError("unknown layout '" + std::string(s) + "'");
}

// One record of the pair manifest. Paths are relative to the manifest's
// directory unless absolute.
struct PairRecord {
  std::string image1;
  std::string image2;
  std::string featuremap1;
  std::string featuremap2;
  std::string labelmap1;
  std::string labelmap2;
  int patch_size = kDefaultPatchSize;

  friend bool operator==(const PairRecord&, const PairRecord&) = default;
};

inline std::vector<PairRecord> parse_pair_manifest(const Json& j) {
  if (!j.is_array()) throw SchemaError(-1, "", "pair manifest must be a JSON array");
  std::vector<PairRecord> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Json& rec = j[i];
    const long idx = long(i);
    PairRecord p;
    p.image1 = detail::require_field<std::string>(rec, "image1", idx);
    p.image2 = detail::require_field<std::string>(rec, "image2", idx);
    p.featuremap1 = detail::require_field<std::string>(rec, "featuremap1", idx);
    p.featuremap2 = detail::require_field<std::string>(rec, "featuremap2", idx);
    p.labelmap1 = detail::require_field<std::string>(rec, "labelmap1", idx);
    p.labelmap2 = detail::require_field<std::string>(rec, "labelmap2", idx);
    if (rec.contains("patch_size")) p.patch_size = detail::require_field<int>(rec, "patch_size", idx);
    if (p.patch_size < 1) throw SchemaError(idx, "patch_size", "must be >= 1");
    out.push_back(std::move(p));
  }
  return out;
}

inline Json pair_manifest_to_json(const std::vector<PairRecord>& pairs) {
  Json j = Json::array();
  for (const auto& p : pairs)
    j.push_back({{"image1", p.image1},
                 {"image2", p.image2},
                 {"featuremap1", p.featuremap1},
                 {"featuremap2", p.featuremap2},
                 {"labelmap1", p.labelmap1},
                 {"labelmap2", p.labelmap2},
                 {"patch_size", p.patch_size}});
  return j;
}

inline std::vector<PairRecord> read_pair_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_pair_manifest(Json::parse(bytes.begin(), bytes.end()));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(-1, "", path.string() + ": invalid JSON: " + e.what());
  }
}

// Everything one correspondence sample is built from, already loaded.
struct PairData {
  std::string id1;
  std::string id2;
  ImageBuffer image1;
  ImageBuffer image2;
  FeatureMap features1;
  FeatureMap features2;
  RegionLabelMap labels1;
  RegionLabelMap labels2;
  int patch_size = kDefaultPatchSize;

  // Grid and size agreement between images, label maps and feature maps.
  void validate() const {
    if (patch_size < 1) throw FormatError("patch_size must be >= 1");
    auto check = [&](const ImageBuffer& img, const FeatureMap& f, const RegionLabelMap& m,
                     const std::string& which) {
      if (m.width() != img.width() || m.height() != img.height())
        throw FormatError(which + ": label map is " + std::to_string(m.width()) + "x" +
                          std::to_string(m.height()) + " but image is " +
                          std::to_string(img.width()) + "x" + std::to_string(img.height()));
      if (f.rows() != ceil_div(m.height(), patch_size) ||
          f.cols() != ceil_div(m.width(), patch_size))
        throw FormatError(which + ": feature grid " + std::to_string(f.rows()) + "x" +
                          std::to_string(f.cols()) + " does not cover " +
                          std::to_string(m.height()) + "x" + std::to_string(m.width()) +
                          " pixels at patch size " + std::to_string(patch_size));
    };
    check(image1, features1, labels1, id1);
    check(image2, features2, labels2, id2);
    if (features1.dim() != features2.dim()) throw FormatError("feature dimensions differ");
    if (labels1.classes() != labels2.classes()) throw FormatError("class counts differ");
  }
};

inline PairData load_pair(const PairRecord& rec, const std::filesystem::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  PairData d;
  d.id1 = rec.image1;
  d.id2 = rec.image2;
  d.image1 = read_image(resolve(rec.image1));
  d.image2 = read_image(resolve(rec.image2));
  d.features1 = read_feature_map(resolve(rec.featuremap1));
  d.features2 = read_feature_map(resolve(rec.featuremap2));
  d.labels1 = read_label_map(resolve(rec.labelmap1));
  d.labels2 = read_label_map(resolve(rec.labelmap2));
  d.patch_size = rec.patch_size;
  d.validate();
  return d;
}

inline Json point_json(Point p) { return Json{{"x", p.x}, {"y", p.y}}; }
inline Json patch_json(PatchIndex p) { return Json::array({p.row, p.col}); }

inline constexpr std::array<const char*, 3> kCandidateLabels = {"0", "1", "2"};
inline constexpr const char* kQueryLabel = "Q";

// Three-way correspondence question for one image pair.
inline GeneratedSample gen_corr_sample(const PairData& pair, CorrLayout layout, RngStream& rng,
                                       const PromptTemplate& tpl, const MarkerStyle& style = {}) {
  pair.validate();
  const int ps = pair.patch_size;
  const int k_star = select_object_class(pair.labels1, pair.labels2);

  std::uint64_t n_query = 0;
  for (auto l : pair.labels1.labels()) n_query += (l == k_star);
  if (n_query == 0)
    throw EmptyRegion("class " + std::to_string(k_star) + " has no pixels in " + pair.id1);
  std::uint64_t pick = rng.below(n_query);
  Point query;
  for (std::size_t i = 0; i < pair.labels1.labels().size(); ++i) {
    if (pair.labels1.labels()[i] != k_star) continue;
    if (pick-- == 0) {
      query = {int(i % std::size_t(pair.labels1.width())),
               int(i / std::size_t(pair.labels1.width()))};
      break;
    }
  }
  const PatchIndex q_patch = pixel_to_patch(query, ps);

  const auto region2 = patch_region_map(pair.labels2, ps).region(k_star);
  const PatchIndex target_patch = match_point(pair.features1, q_patch, pair.features2, region2);
  const Point target = patch_center(target_patch, ps, pair.image2.width(), pair.image2.height());
  std::array<PatchIndex, 2> distractor_patches;
  const auto distractors = sample_distractors(region2, target_patch, ps, pair.image2.width(),
                                              pair.image2.height(), rng, &distractor_patches);

  std::array<Point, 3> candidates = {target, distractors[0], distractors[1]};
  std::array<PatchIndex, 3> candidate_patches = {target_patch, distractor_patches[0],
                                                 distractor_patches[1]};
  std::array<int, 3> order = {0, 1, 2};
  rng.shuffle(std::span<int>(order));
  std::array<Point, 3> shown;
  std::array<PatchIndex, 3> shown_patches;
  int answer = 0;
  for (int i = 0; i < 3; ++i) {
    shown[std::size_t(i)] = candidates[std::size_t(order[std::size_t(i)])];
    shown_patches[std::size_t(i)] = candidate_patches[std::size_t(order[std::size_t(i)])];
    if (order[std::size_t(i)] == 0) answer = i;
  }

  GeneratedSample out;
  auto& s = out.sample;
  s.task = TaskTag::correspondence;
  Json meta{{"image1", pair.id1},
            {"image2", pair.id2},
            {"layout", to_string(layout)},
            {"patch_size", ps},
            {"class_id", k_star},
            {"query", point_json(query)},
            {"query_patch", patch_json(q_patch)},
            {"target", point_json(target)},
            {"target_patch", patch_json(target_patch)},
            {"distractors", Json::array({point_json(distractors[0]), point_json(distractors[1])})},
            {"candidates", Json::array({point_json(shown[0]), point_json(shown[1]),
                                        point_json(shown[2])})},
            {"candidate_patches", Json::array({patch_json(shown_patches[0]),
                                               patch_json(shown_patches[1]),
                                               patch_json(shown_patches[2])})},
            {"answer", answer}};

  Json markers = Json::array();
  if (layout == CorrLayout::side_by_side) {
    Composite comp = compose_side_by_side(pair.image1, pair.image2);
    draw_point_marker_inplace(comp.image, query, kQueryLabel, style);
    for (int i = 0; i < 3; ++i) {
      const Point c = comp.layout.map_image2(shown[std::size_t(i)]);
      draw_point_marker_inplace(comp.image, c, kCandidateLabels[std::size_t(i)], style);
      markers.push_back(point_json(c));
    }
    meta["x_offset"] = comp.layout.x_offset;
    meta["scale2"] = comp.layout.scale2;
    meta["query_marker"] = point_json(query);
    out.images.push_back(std::move(comp.image));
  } else {
    ImageBuffer left = draw_point_marker(pair.image1, query, kQueryLabel, style);
    ImageBuffer right = pair.image2;
    for (int i = 0; i < 3; ++i) {
      draw_point_marker_inplace(right, shown[std::size_t(i)], kCandidateLabels[std::size_t(i)],
                                style);
      markers.push_back(point_json(shown[std::size_t(i)]));
    }
    meta["query_marker"] = point_json(query);
    out.images.push_back(std::move(left));
    out.images.push_back(std::move(right));
  }
  meta["candidate_markers"] = std::move(markers);
  meta["template"] = tpl.task + "/" + tpl.version;
  s.meta = std::move(meta);
  s.instruction = with_image_tokens(out.images.size(), tpl.render({}));
  s.response = std::to_string(answer);
  return out;
}

}  // namespace ssltune
