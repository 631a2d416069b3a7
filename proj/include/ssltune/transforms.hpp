#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "ssltune/error.hpp"
#include "ssltune/image.hpp"

namespace ssltune {

// Round half up and clamp into the 8-bit range.
inline std::uint8_t to_u8(double v) noexcept {
  const double r = std::floor(v + 0.5);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

// Clockwise rotation by a multiple of 90 degrees. For 90 degrees the input
// pixel (x, y) lands at (height - 1 - y, x).
inline ImageBuffer rotate90(const ImageBuffer& img, int theta) {
  if (theta != 0 && theta != 90 && theta != 180 && theta != 270)
    throw InvalidAngle("rotation angle must be one of 0, 90, 180, 270; got " +
                       std::to_string(theta));
  const int w = img.width();
  const int h = img.height();
  if (theta == 0) return img;
  if (theta == 180) {
    ImageBuffer out(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.set(w - 1 - x, h - 1 - y, img.at(x, y));
    return out;
  }
  ImageBuffer out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (theta == 90)
        out.set(h - 1 - y, x, img.at(x, y));
      else
        out.set(y, w - 1 - x, img.at(x, y));
    }
  }
  return out;
}

// BT.601 luma, computed in integer arithmetic so round-half-up is exact.
constexpr std::uint8_t luma(Rgb c) noexcept {
  return static_cast<std::uint8_t>((299 * int(c.r) + 587 * int(c.g) + 114 * int(c.b) + 500) /
                                   1000);
}

inline ImageBuffer to_grayscale(const ImageBuffer& img) {
  ImageBuffer out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const std::uint8_t l = luma(img.at(x, y));
      out.set(x, y, {l, l, l});
    }
  return out;
}

inline ImageBuffer hflip(const ImageBuffer& img) {
  ImageBuffer out(img.width(), img.height());
  const int w = img.width();
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < w; ++x) out.set(w - 1 - x, y, img.at(x, y));
  return out;
}

inline ImageBuffer vflip(const ImageBuffer& img) {
  ImageBuffer out(img.width(), img.height());
  const int h = img.height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < img.width(); ++x) out.set(x, h - 1 - y, img.at(x, y));
  return out;
}

struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  friend constexpr bool operator==(const Rect&, const Rect&) = default;
};

// Bilinear resampling of `src` restricted to `region` onto an
// out_w x out_h grid. Sample centers use half-pixel alignment
// (src = (dst + 0.5) * scale - 0.5) and coordinates are clamped to the
// region, so no pixel outside `region` ever contributes.
inline ImageBuffer resize_bilinear(const ImageBuffer& src, Rect region, int out_w, int out_h) {
  if (region.width < 1 || region.height < 1 || region.x < 0 || region.y < 0 ||
      region.x + region.width > src.width() || region.y + region.height > src.height())
    throw DegenerateImage("resize region outside source image");
  ImageBuffer out(out_w, out_h);
  const double sx = double(region.width) / out_w;
  const double sy = double(region.height) / out_h;
  const auto pixels = src.pixels();
  const std::size_t stride = std::size_t(src.width()) * 3;
  for (int oy = 0; oy < out_h; ++oy) {
    const double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, double(region.height - 1));
    const int y0 = int(std::floor(fy));
    const int y1 = std::min(y0 + 1, region.height - 1);
    const double wy = fy - y0;
    for (int ox = 0; ox < out_w; ++ox) {
      const double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, double(region.width - 1));
      const int x0 = int(std::floor(fx));
      const int x1 = std::min(x0 + 1, region.width - 1);
      const double wx = fx - x0;
      const std::size_t r0 = std::size_t(region.y + y0) * stride;
      const std::size_t r1 = std::size_t(region.y + y1) * stride;
      const std::size_t c0 = std::size_t(region.x + x0) * 3;
      const std::size_t c1 = std::size_t(region.x + x1) * 3;
      std::uint8_t px[3];
      for (int c = 0; c < 3; ++c) {
        const double top = pixels[r0 + c0 + c] * (1.0 - wx) + pixels[r0 + c1 + c] * wx;
        const double bot = pixels[r1 + c0 + c] * (1.0 - wx) + pixels[r1 + c1 + c] * wx;
        px[c] = to_u8(top * (1.0 - wy) + bot * wy);
      }
      out.set(ox, oy, {px[0], px[1], px[2]});
    }
  }
  return out;
}

inline ImageBuffer resize_bilinear(const ImageBuffer& src, int out_w, int out_h) {
  return resize_bilinear(src, Rect{0, 0, src.width(), src.height()}, out_w, out_h);
}

}  // namespace ssltune
