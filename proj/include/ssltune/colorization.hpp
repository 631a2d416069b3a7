#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ssltune/codec.hpp"
#include "ssltune/draw.hpp"
#include "ssltune/error.hpp"
#include "ssltune/generated.hpp"
#include "ssltune/image.hpp"
#include "ssltune/manifest.hpp"
#include "ssltune/rng.hpp"
#include "ssltune/templates.hpp"
#include "ssltune/transforms.hpp"

namespace ssltune {

struct ColorEntry {
  std::string name;
  Rgb rgb;
};

// Ordered color-name vocabulary. Order matters: nearest-name ties resolve
// to the lowest index.
class ColorVocab {
 public:
  ColorVocab() = default;

  explicit ColorVocab(std::vector<ColorEntry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw FormatError("color vocabulary is empty");
    std::unordered_set<std::string> seen;
    for (const auto& e : entries_)
      if (!seen.insert(e.name).second) throw FormatError("duplicate color name '" + e.name + "'");
  }

  // One "name,#rrggbb" record per line, no header. The color is taken
  // after the last comma so names may themselves contain commas.
  static ColorVocab parse_csv(std::string_view text) {
    std::vector<ColorEntry> entries;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty()) continue;
      const std::size_t comma = line.rfind(',');
      if (comma == std::string_view::npos || comma == 0)
        throw FormatError("vocab line " + std::to_string(line_no) + ": expected name,#rrggbb");
      const std::string_view hex = line.substr(comma + 1);
      if (hex.size() != 7 || hex[0] != '#')
        throw FormatError("vocab line " + std::to_string(line_no) + ": bad color '" +
                          std::string(hex) + "'");
      auto nibble = [&](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw FormatError("vocab line " + std::to_string(line_no) + ": bad hex digit");
      };
      auto byte = [&](std::size_t i) {
        return std::uint8_t(nibble(hex[i]) * 16 + nibble(hex[i + 1]));
      };
      entries.push_back({std::string(line.substr(0, comma)), Rgb{byte(1), byte(3), byte(5)}});
    }
    return ColorVocab(std::move(entries));
  }

  static ColorVocab load_csv(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return parse_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  }

  const std::vector<ColorEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<ColorEntry> entries_;
};

inline const std::string& nearest_color_name(Rgb rgb, const ColorVocab& vocab) {
  if (vocab.size() == 0) throw FormatError("color vocabulary is empty");
  std::size_t best = 0;
  int best_d = rgb_distance2(rgb, vocab.entries()[0].rgb);
  for (std::size_t i = 1; i < vocab.size(); ++i) {
    const int d = rgb_distance2(rgb, vocab.entries()[i].rgb);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return vocab.entries()[best].name;
}

struct ColorTaskConfig {
  int K = 5;              // points per sample
  int r = 5;              // neighborhood side, odd
  double delta = 40.0;    // minimum pairwise RGB distance
  int margin = 20;        // distance from every image edge
  int max_attempts = 1000;

  void validate() const {
    if (K < 2 || K > 26) throw ConfigError("colorization K must be in [2, 26]");
    if (r < 1 || r % 2 == 0) throw ConfigError("colorization r must be odd and >= 1");
    if (!(delta >= 0.0)) throw ConfigError("colorization delta must be >= 0");
    if (margin < (r + 1) / 2) throw ConfigError("colorization margin must be >= ceil(r/2)");
    if (max_attempts < 1) throw ConfigError("colorization max_attempts must be >= 1");
  }
};

inline constexpr int kGrayscaleTolerance = 2;

// True iff no pixel's channel spread (max - min) exceeds 2.
inline bool is_grayscale(const ImageBuffer& img) {
  const auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    const int mx = std::max({px[i], px[i + 1], px[i + 2]});
    const int mn = std::min({px[i], px[i + 1], px[i + 2]});
    if (mx - mn > kGrayscaleTolerance) return false;
  }
  return true;
}

// Per-channel mean over the r x r window centered at p, rounded half up.
// For even r the window spans p - r/2 .. p + r/2 - 1.
inline Rgb mean_rgb(const ImageBuffer& img, Point p, int r) {
  const int x0 = p.x - r / 2;
  const int y0 = p.y - r / 2;
  if (r < 1 || x0 < 0 || y0 < 0 || x0 + r > img.width() || y0 + r > img.height())
    throw WindowOutOfBounds("window of side " + std::to_string(r) + " at (" +
                            std::to_string(p.x) + ", " + std::to_string(p.y) +
                            ") leaves the image");
  long sum[3] = {0, 0, 0};
  for (int y = y0; y < y0 + r; ++y)
    for (int x = x0; x < x0 + r; ++x) {
      const Rgb c = img.at(x, y);
      sum[0] += c.r;
      sum[1] += c.g;
      sum[2] += c.b;
    }
  const long n = long(r) * r;
  auto avg = [n](long s) { return std::uint8_t((2 * s + n) / (2 * n)); };
  return {avg(sum[0]), avg(sum[1]), avg(sum[2])};
}

struct ColoredPoint {
  Point location;
  Rgb color;
};

// Sequential rejection sampling: each draw is a uniform location inside the
// margin; it is accepted iff its mean color is at least delta away from
// every color accepted so far. Every draw counts against max_attempts.
inline std::vector<ColoredPoint> sample_distinct_points(const ImageBuffer& img,
                                                        const ColorTaskConfig& cfg,
                                                        RngStream& rng) {
  cfg.validate();
  if (img.width() < 2 * cfg.margin + 1 || img.height() < 2 * cfg.margin + 1)
    throw DegenerateImage("image " + std::to_string(img.width()) + "x" +
                          std::to_string(img.height()) + " too small for margin " +
                          std::to_string(cfg.margin));
  const double delta2 = cfg.delta * cfg.delta;
  std::vector<ColoredPoint> accepted;
  accepted.reserve(std::size_t(cfg.K));
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    const Point p{int(rng.uniform_int(cfg.margin, img.width() - 1 - cfg.margin)),
                  int(rng.uniform_int(cfg.margin, img.height() - 1 - cfg.margin))};
    const Rgb c = mean_rgb(img, p, cfg.r);
    const bool distinct = std::all_of(accepted.begin(), accepted.end(), [&](const ColoredPoint& a) {
      return double(rgb_distance2(a.color, c)) >= delta2;
    });
    if (!distinct) continue;
    accepted.push_back({p, c});
    if (int(accepted.size()) == cfg.K) return accepted;
  }
  throw RejectionExhausted("found " + std::to_string(accepted.size()) + " of " +
                           std::to_string(cfg.K) + " distinct colors in " +
                           std::to_string(cfg.max_attempts) + " draws");
}

inline std::string point_label(int i) { return std::string(1, char('A' + i)); }

inline std::string format_candidate(int index_1based, Rgb c, std::string_view name) {
  return std::to_string(index_1based) + ". RGB(" + std::to_string(c.r) + ", " +
         std::to_string(c.g) + ", " + std::to_string(c.b) + ") (" + std::string(name) + ")";
}

// "A-i_A,B-i_B,..." where slot_of_point[k] is the 1-based list index of
// point k's color.
inline std::string format_color_answer(const std::vector<int>& slot_of_point) {
  std::string out;
  for (std::size_t k = 0; k < slot_of_point.size(); ++k) {
    if (k) out += ',';
    out += point_label(int(k)) + "-" + std::to_string(slot_of_point[k]);
  }
  return out;
}

inline Json rgb_json(Rgb c) { return Json::array({c.r, c.g, c.b}); }

// Point-wise colorization: K labeled markers on the grayscale image, the
// true colors shuffled into a numbered candidate list, and the response
// mapping each label to its color's list index.
inline GeneratedSample gen_color_sample(const std::string& img_ref, const ImageBuffer& img,
                                        const ColorVocab& vocab, const ColorTaskConfig& cfg,
                                        RngStream& rng, const PromptTemplate& tpl,
                                        const MarkerStyle& style = {}) {
  if (is_grayscale(img)) throw GrayscaleSource(img_ref + " is grayscale");
  const auto points = sample_distinct_points(img, cfg, rng);
  const int K = int(points.size());

  // slot j of the candidate list shows the color of point order[j]
  std::vector<int> order(static_cast<std::size_t>(K));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<int>(order));
  std::vector<int> slot_of_point(static_cast<std::size_t>(K));
  for (int j = 0; j < K; ++j) slot_of_point[std::size_t(order[std::size_t(j)])] = j + 1;

  ImageBuffer canvas = to_grayscale(img);
  for (int k = 0; k < K; ++k)
    draw_point_marker_inplace(canvas, points[std::size_t(k)].location, point_label(k), style);

  std::string candidates;
  std::string labels;
  std::string answer_format;
  Json cand_json = Json::array();
  for (int j = 0; j < K; ++j) {
    const Rgb c = points[std::size_t(order[std::size_t(j)])].color;
    const std::string& name = nearest_color_name(c, vocab);
    if (j) candidates += '\n';
    candidates += format_candidate(j + 1, c, name);
    cand_json.push_back(Json{{"rgb", rgb_json(c)}, {"name", name}});
  }
  Json pts_json = Json::array();
  for (int k = 0; k < K; ++k) {
    const auto& p = points[std::size_t(k)];
    if (k) {
      labels += ", ";
      answer_format += ',';
    }
    labels += point_label(k);
    answer_format += point_label(k) + "-<number>";
    pts_json.push_back(Json{{"label", point_label(k)},
                        {"x", p.location.x},
                        {"y", p.location.y},
                        {"rgb", rgb_json(p.color)},
                        {"name", nearest_color_name(p.color, vocab)},
                        {"index", slot_of_point[std::size_t(k)]}});
  }

  GeneratedSample out;
  out.images.push_back(std::move(canvas));
  auto& s = out.sample;
  s.task = TaskTag::colorization;
  s.instruction = with_image_tokens(
      1, tpl.render({{"labels", labels}, {"candidates", candidates}, {"answer_format", answer_format}}));
  s.response = format_color_answer(slot_of_point);
  s.meta = Json{{"source_image", img_ref},
                {"K", cfg.K},
                {"r", cfg.r},
                {"delta", cfg.delta},
                {"margin", cfg.margin},
                {"points", std::move(pts_json)},
                {"candidates", std::move(cand_json)},
                {"permutation", order},
                {"template", tpl.task + "/" + tpl.version}};
  return out;
}

}  // namespace ssltune
