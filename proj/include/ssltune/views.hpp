#pragma once

#include <cstdint>
#include <vector>

#include "ssltune/augment.hpp"
#include "ssltune/error.hpp"
#include "ssltune/image.hpp"
#include "ssltune/manifest.hpp"
#include "ssltune/rng.hpp"
#include "ssltune/transforms.hpp"

namespace ssltune {

// Augmented-view synthesis from a single source image. Defaults are the
// single-image recipe: 0.1%-8% area crops with 3/4-4/3 aspect, 224x224
// bilinear output, flip p=0.5, and the jitter ranges below.
struct ViewConfig {
  std::uint64_t n_views = 0;  // required, no default
  Range area_range{0.001, 0.08};
  Range ar_range{3.0 / 4.0, 4.0 / 3.0};
  int out_size = 224;
  double flip_prob = 0.5;
  JitterRanges jitter{{0.75, 1.25}, {0.75, 1.25}, {0.70, 1.40}, {-0.05, 0.05}};

  void validate() const {
    if (n_views < 1) throw ConfigError("n_views must be >= 1");
    if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) throw ConfigError("flip_prob must be in [0, 1]");
    if (out_size < 1) throw ConfigError("out_size must be >= 1");
    auto ordered = [](Range r) { return r.lo <= r.hi; };
    if (!ordered(jitter.brightness) || !ordered(jitter.contrast) || !ordered(jitter.saturation) ||
        !ordered(jitter.hue))
      throw ConfigError("jitter ranges must satisfy lo <= hi");
    if (jitter.brightness.lo < 0 || jitter.contrast.lo < 0 || jitter.saturation.lo < 0)
      throw ConfigError("brightness, contrast and saturation factors must be >= 0");
    if (jitter.hue.lo < -0.5 || jitter.hue.hi > 0.5) throw ConfigError("hue shift must be in [-0.5, 0.5]");
  }
};

struct ViewLog {
  std::uint64_t index = 0;
  CropLog crop;
  bool flipped = false;
  JitterFactors jitter;
};

struct View {
  ImageBuffer image;
  ViewLog log;
};

// crop -> optional flip -> jitter; random draws happen in that order.
inline View gen_view(const ImageBuffer& img, const ViewConfig& cfg, RngStream& rng,
                     std::uint64_t index = 0) {
  View v;
  v.log.index = index;
  ImageBuffer crop = random_resized_crop(img, rng, cfg.area_range, cfg.ar_range, cfg.out_size,
                                         &v.log.crop);
  v.log.flipped = rng.bernoulli(cfg.flip_prob);
  if (v.log.flipped) crop = hflip(crop);
  v.image = color_jitter(crop, rng, cfg.jitter, &v.log.jitter);
  return v;
}

inline constexpr std::string_view kViewStreamTag = "views";

// View i draws from its own stream derived from (seed, "views", i), so
// any subset of views can be regenerated independently.
inline View gen_view_at(const ImageBuffer& img, const ViewConfig& cfg, std::uint64_t seed,
                        std::uint64_t index) {
  RngStream rng = RngStream::derive(seed, kViewStreamTag, index);
  return gen_view(img, cfg, rng, index);
}

inline std::vector<View> gen_views(const ImageBuffer& img, const ViewConfig& cfg,
                                   std::uint64_t seed) {
  cfg.validate();
  std::vector<View> views;
  views.reserve(cfg.n_views);
  for (std::uint64_t i = 0; i < cfg.n_views; ++i) views.push_back(gen_view_at(img, cfg, seed, i));
  return views;
}

inline Json view_log_json(const ViewLog& log) {
  const auto& c = log.crop;
  return Json{{"index", log.index},
              {"crop",
               {{"x", c.rect.x},
                {"y", c.rect.y},
                {"width", c.rect.width},
                {"height", c.rect.height},
                {"target_area_fraction", c.target_area_fraction},
                {"target_aspect", c.target_aspect},
                {"area_fraction", c.area_fraction},
                {"aspect", c.aspect},
                {"attempts", c.attempts},
                {"fallback", c.fallback}}},
              {"flipped", log.flipped},
              {"jitter",
               {{"brightness", log.jitter.brightness},
                {"contrast", log.jitter.contrast},
                {"saturation", log.jitter.saturation},
                {"hue", log.jitter.hue}}}};
}

inline Json view_config_json(const ViewConfig& cfg) {
  auto range = [](Range r) { return Json::array({r.lo, r.hi}); };
  return Json{{"n_views", cfg.n_views},
              {"area_range", range(cfg.area_range)},
              {"ar_range", range(cfg.ar_range)},
              {"out_size", cfg.out_size},
              {"flip_prob", cfg.flip_prob},
              {"brightness", range(cfg.jitter.brightness)},
              {"contrast", range(cfg.jitter.contrast)},
              {"saturation", range(cfg.jitter.saturation)},
              {"hue", range(cfg.jitter.hue)}};
}

}  // namespace ssltune
