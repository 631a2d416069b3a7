#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "ssltune/error.hpp"
#include "ssltune/image.hpp"
#include "ssltune/rng.hpp"
#include "ssltune/transforms.hpp"

namespace ssltune {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  constexpr bool contains(double v) const noexcept { return v >= lo && v <= hi; }
  friend constexpr bool operator==(const Range&, const Range&) = default;
};

// Side-channel record of what random_resized_crop actually did.
struct CropLog {
  double target_area_fraction = 0.0;  // sampled
  double target_aspect = 0.0;         // sampled (width / height)
  Rect rect;                          // realized integer crop
  double area_fraction = 0.0;         // rect area / image area
  double aspect = 0.0;                // rect width / height
  int attempts = 0;
  bool fallback = false;
};

inline constexpr int kCropMaxAttempts = 100;

// Samples a crop whose realized area fraction lies in area_range and whose
// realized aspect ratio lies in ar_range, then resizes it to
// out_size x out_size. The aspect ratio is drawn log-uniformly. After
// kCropMaxAttempts rejected draws the crop falls back to a centered
// rectangle built from the range midpoints (clamped to fit).
inline ImageBuffer random_resized_crop(const ImageBuffer& img, RngStream& rng, Range area_range,
                                       Range ar_range, int out_size, CropLog* log = nullptr) {
  if (img.width() < 2 || img.height() < 2)
    throw DegenerateImage("random_resized_crop needs at least a 2x2 image");
  if (!(area_range.lo > 0.0) || area_range.hi > 1.0 || area_range.lo > area_range.hi)
    throw ConfigError("area range must satisfy 0 < lo <= hi <= 1");
  if (!(ar_range.lo > 0.0) || ar_range.lo > ar_range.hi)
    throw ConfigError("aspect ratio range must satisfy 0 < lo <= hi");
  if (out_size < 1) throw ConfigError("out_size must be >= 1");

  const double W = img.width();
  const double H = img.height();
  const double area = W * H;
  const double log_lo = std::log(ar_range.lo);
  const double log_hi = std::log(ar_range.hi);

  CropLog local;
  for (int attempt = 1; attempt <= kCropMaxAttempts; ++attempt) {
    const double frac = rng.uniform(area_range.lo, area_range.hi);
    const double aspect = std::clamp(std::exp(rng.uniform(log_lo, log_hi)), ar_range.lo,
                                     ar_range.hi);
    const int w = int(std::lround(std::sqrt(frac * area * aspect)));
    const int h = int(std::lround(std::sqrt(frac * area / aspect)));
    local.attempts = attempt;
    if (w < 1 || h < 1 || w > img.width() || h > img.height()) continue;
    const double real_frac = double(w) * double(h) / area;
    const double real_aspect = double(w) / double(h);
    if (!area_range.contains(real_frac) || !ar_range.contains(real_aspect)) continue;
    const int x = int(rng.uniform_int(0, img.width() - w));
    const int y = int(rng.uniform_int(0, img.height() - h));
    local.target_area_fraction = frac;
    local.target_aspect = aspect;
    local.rect = Rect{x, y, w, h};
    local.area_fraction = real_frac;
    local.aspect = real_aspect;
    if (log) *log = local;
    return resize_bilinear(img, local.rect, out_size, out_size);
  }

  const double frac = 0.5 * (area_range.lo + area_range.hi);
  const double aspect = std::sqrt(ar_range.lo * ar_range.hi);
  const int w = std::clamp(int(std::lround(std::sqrt(frac * area * aspect))), 1, img.width());
  const int h = std::clamp(int(std::lround(std::sqrt(frac * area / aspect))), 1, img.height());
  local.fallback = true;
  local.target_area_fraction = frac;
  local.target_aspect = aspect;
  local.rect = Rect{(img.width() - w) / 2, (img.height() - h) / 2, w, h};
  local.area_fraction = double(w) * double(h) / area;
  local.aspect = double(w) / double(h);
  if (log) *log = local;
  return resize_bilinear(img, local.rect, out_size, out_size);
}

struct JitterRanges {
  Range brightness{1.0, 1.0};
  Range contrast{1.0, 1.0};
  Range saturation{1.0, 1.0};
  Range hue{0.0, 0.0};

  friend constexpr bool operator==(const JitterRanges&, const JitterRanges&) = default;
};

struct JitterFactors {
  double brightness = 1.0;
  double contrast = 1.0;
  double saturation = 1.0;
  double hue = 0.0;  // fraction of a full hue turn

  friend constexpr bool operator==(const JitterFactors&, const JitterFactors&) = default;
};

// Draw order is brightness, contrast, saturation, hue.
inline JitterFactors sample_jitter(RngStream& rng, const JitterRanges& ranges) {
  JitterFactors f;
  f.brightness = rng.uniform(ranges.brightness.lo, ranges.brightness.hi);
  f.contrast = rng.uniform(ranges.contrast.lo, ranges.contrast.hi);
  f.saturation = rng.uniform(ranges.saturation.lo, ranges.saturation.hi);
  f.hue = rng.uniform(ranges.hue.lo, ranges.hue.hi);
  return f;
}

namespace detail {

inline double luma_f(const std::array<double, 3>& p) noexcept {
  return 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
}

inline void shift_hue(std::array<double, 3>& p, double shift) noexcept {
  const double r = p[0] / 255.0;
  const double g = p[1] / 255.0;
  const double b = p[2] / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  if (delta <= 0.0) return;  // achromatic, hue undefined
  double h;
  if (mx == r)
    h = (g - b) / delta;
  else if (mx == g)
    h = 2.0 + (b - r) / delta;
  else
    h = 4.0 + (r - g) / delta;
  h = h / 6.0 + shift;
  h -= std::floor(h);
  const double s = delta / mx;
  const double v = mx;
  const double h6 = h * 6.0;
  const int sector = int(std::floor(h6)) % 6;
  const double f = h6 - std::floor(h6);
  const double pp = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  double rr, gg, bb;
  switch (sector) {
    case 0: rr = v; gg = t; bb = pp; break;
    case 1: rr = q; gg = v; bb = pp; break;
    case 2: rr = pp; gg = v; bb = t; break;
    case 3: rr = pp; gg = q; bb = v; break;
    case 4: rr = t; gg = pp; bb = v; break;
    default: rr = v; gg = pp; bb = q; break;
  }
  p = {rr * 255.0, gg * 255.0, bb * 255.0};
}

}  // namespace detail

// Applies brightness -> contrast -> saturation -> hue. Intermediate values
// stay in floating point, clamped to [0, 255] after every stage, and are
// rounded once at the end. A stage whose factor is the identity is skipped
// entirely, so identity factors reproduce the input bit-exactly.
inline ImageBuffer apply_jitter(const ImageBuffer& img, const JitterFactors& f) {
  const std::size_t n = img.area();
  std::vector<std::array<double, 3>> buf(n);
  const auto src = img.pixels();
  for (std::size_t i = 0; i < n; ++i)
    buf[i] = {double(src[3 * i]), double(src[3 * i + 1]), double(src[3 * i + 2])};

  auto clamp3 = [](std::array<double, 3>& p) {
    for (double& c : p) c = std::clamp(c, 0.0, 255.0);
  };

  if (f.brightness != 1.0)
    for (auto& p : buf) {
      for (double& c : p) c *= f.brightness;
      clamp3(p);
    }
  if (f.contrast != 1.0) {
    double mean = 0.0;
    for (const auto& p : buf) mean += detail::luma_f(p);
    mean /= double(n);
    for (auto& p : buf) {
      for (double& c : p) c = f.contrast * c + (1.0 - f.contrast) * mean;
      clamp3(p);
    }
  }
  if (f.saturation != 1.0)
    for (auto& p : buf) {
      const double gray = detail::luma_f(p);
      for (double& c : p) c = f.saturation * c + (1.0 - f.saturation) * gray;
      clamp3(p);
    }
  if (f.hue != 0.0)
    for (auto& p : buf) {
      detail::shift_hue(p, f.hue);
      clamp3(p);
    }

  std::vector<std::uint8_t> out(n * 3);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) out[3 * i + c] = to_u8(buf[i][c]);
  return ImageBuffer(img.width(), img.height(), std::move(out));
}

inline ImageBuffer color_jitter(const ImageBuffer& img, RngStream& rng, const JitterRanges& ranges,
                                JitterFactors* log = nullptr) {
  const JitterFactors f = sample_jitter(rng, ranges);
  if (log) *log = f;
  return apply_jitter(img, f);
}

}  // namespace ssltune
