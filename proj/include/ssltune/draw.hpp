#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "ssltune/error.hpp"
#include "ssltune/image.hpp"
#include "ssltune/transforms.hpp"

namespace ssltune {

namespace font8x8 {

// Digits and uppercase letters from the public-domain font8x8 "basic" set.
// Each row byte stores the leftmost pixel in bit 0.
inline constexpr std::array<std::array<std::uint8_t, 8>, 10> kDigits = {{
    {0x3E, 0x63, 0x73, 0x7B, 0x6F, 0x67, 0x3E, 0x00},  // 0
    {0x0C, 0x0E, 0x0C, 0x0C, 0x0C, 0x0C, 0x3F, 0x00},  // 1
    {0x1E, 0x33, 0x30, 0x1C, 0x06, 0x33, 0x3F, 0x00},  // 2
    {0x1E, 0x33, 0x30, 0x1C, 0x30, 0x33, 0x1E, 0x00},  // 3
    {0x38, 0x3C, 0x36, 0x33, 0x7F, 0x30, 0x78, 0x00},  // 4
    {0x3F, 0x03, 0x1F, 0x30, 0x30, 0x33, 0x1E, 0x00},  // 5
    {0x1C, 0x06, 0x03, 0x1F, 0x33, 0x33, 0x1E, 0x00},  // 6
    {0x3F, 0x33, 0x30, 0x18, 0x0C, 0x0C, 0x0C, 0x00},  // 7
    {0x1E, 0x33, 0x33, 0x1E, 0x33, 0x33, 0x1E, 0x00},  // 8
    {0x1E, 0x33, 0x33, 0x3E, 0x30, 0x18, 0x0E, 0x00},  // 9
}};

inline constexpr std::array<std::array<std::uint8_t, 8>, 26> kUpper = {{
    {0x0C, 0x1E, 0x33, 0x33, 0x3F, 0x33, 0x33, 0x00},  // A
    {0x3F, 0x66, 0x66, 0x3E, 0x66, 0x66, 0x3F, 0x00},  // B
    {0x3C, 0x66, 0x03, 0x03, 0x03, 0x66, 0x3C, 0x00},  // C
    {0x1F, 0x36, 0x66, 0x66, 0x66, 0x36, 0x1F, 0x00},  // D
    {0x7F, 0x46, 0x16, 0x1E, 0x16, 0x46, 0x7F, 0x00},  // E
    {0x7F, 0x46, 0x16, 0x1E, 0x16, 0x06, 0x0F, 0x00},  // F
    {0x3C, 0x66, 0x03, 0x03, 0x73, 0x66, 0x7C, 0x00},  // G
    {0x33, 0x33, 0x33, 0x3F, 0x33, 0x33, 0x33, 0x00},  // H
    {0x1E, 0x0C, 0x0C, 0x0C, 0x0C, 0x0C, 0x1E, 0x00},  // I
    {0x78, 0x30, 0x30, 0x30, 0x33, 0x33, 0x1E, 0x00},  // J
    {0x67, 0x66, 0x36, 0x1E, 0x36, 0x66, 0x67, 0x00},  // K
    {0x0F, 0x06, 0x06, 0x06, 0x46, 0x66, 0x7F, 0x00},  // L
    {0x63, 0x77, 0x7F, 0x7F, 0x6B, 0x63, 0x63, 0x00},  // M
    {0x63, 0x67, 0x6F, 0x7B, 0x73, 0x63, 0x63, 0x00},  // N
    {0x1C, 0x36, 0x63, 0x63, 0x63, 0x36, 0x1C, 0x00},  // O
    {0x3F, 0x66, 0x66, 0x3E, 0x06, 0x06, 0x0F, 0x00},  // P
    {0x1E, 0x33, 0x33, 0x33, 0x3B, 0x1E, 0x38, 0x00},  // Q
    {0x3F, 0x66, 0x66, 0x3E, 0x36, 0x66, 0x67, 0x00},  // R
    {0x1E, 0x33, 0x07, 0x0E, 0x38, 0x33, 0x1E, 0x00},  // S
    {0x3F, 0x2D, 0x0C, 0x0C, 0x0C, 0x0C, 0x1E, 0x00},  // T
    {0x33, 0x33, 0x33, 0x33, 0x33, 0x33, 0x3F, 0x00},  // U
    {0x33, 0x33, 0x33, 0x33, 0x33, 0x1E, 0x0C, 0x00},  // V
    {0x63, 0x63, 0x63, 0x6B, 0x7F, 0x77, 0x63, 0x00},  // W
    {0x63, 0x63, 0x36, 0x1C, 0x1C, 0x36, 0x63, 0x00},  // X
    {0x33, 0x33, 0x33, 0x1E, 0x0C, 0x0C, 0x1E, 0x00},  // Y
    {0x7F, 0x63, 0x31, 0x18, 0x4C, 0x66, 0x7F, 0x00},  // Z
}};

inline constexpr int kGlyphSize = 8;

// Returns nullptr for characters outside [0-9A-Z]; those advance the pen
// without drawing.
inline const std::array<std::uint8_t, 8>* glyph(char c) noexcept {
  if (c >= '0' && c <= '9') return &kDigits[std::size_t(c - '0')];
  if (c >= 'A' && c <= 'Z') return &kUpper[std::size_t(c - 'A')];
  return nullptr;
}

}  // namespace font8x8

struct MarkerStyle {
  int radius = 8;
  Rgb fill{255, 0, 0};
  Rgb label_color{255, 255, 255};
  Point label_offset{10, -4};  // radius + 2, -4

  static MarkerStyle with_radius(int r) { return MarkerStyle{r, {255, 0, 0}, {255, 255, 255}, {r + 2, -4}}; }
};

// Filled disc (dx^2 + dy^2 <= r^2) at p plus the label drawn from the
// embedded font with its top-left at p + label_offset. Both are clipped to
// the image; nothing is anti-aliased.
inline void draw_point_marker_inplace(ImageBuffer& img, Point p, std::string_view label,
                                      const MarkerStyle& style) {
  if (!img.contains(p))
    throw PointOutOfBounds("marker center (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                           ") outside " + std::to_string(img.width()) + "x" +
                           std::to_string(img.height()) + " image");
  if (style.radius < 1) throw ConfigError("marker radius must be >= 1");
  const int r = style.radius;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy > r * r) continue;
      const Point q{p.x + dx, p.y + dy};
      if (img.contains(q)) img.set(q.x, q.y, style.fill);
    }
  int pen_x = p.x + style.label_offset.x;
  const int pen_y = p.y + style.label_offset.y;
  for (char c : label) {
    if (const auto* rows = font8x8::glyph(c)) {
      for (int gy = 0; gy < font8x8::kGlyphSize; ++gy)
        for (int gx = 0; gx < font8x8::kGlyphSize; ++gx) {
          if (!(((*rows)[std::size_t(gy)] >> gx) & 1u)) continue;
          const Point q{pen_x + gx, pen_y + gy};
          if (img.contains(q)) img.set(q.x, q.y, style.label_color);
        }
    }
    pen_x += font8x8::kGlyphSize;
  }
}

inline ImageBuffer draw_point_marker(const ImageBuffer& img, Point p, std::string_view label,
                                     const MarkerStyle& style = {}) {
  ImageBuffer out = img;
  draw_point_marker_inplace(out, p, label, style);
  return out;
}

// Geometry of a side-by-side composite: image 2 sits at x_offset after a
// uniform rescale by scale2.
struct CompositeLayout {
  int x_offset = 0;
  double scale2 = 1.0;
  int width2 = 0;   // rescaled width of image 2
  int height = 0;   // common height

  // Maps a pixel of image 2 into composite coordinates (round half up,
  // clamped to the rescaled image).
  Point map_image2(Point p) const noexcept {
    const int x = std::min(int(std::floor(p.x * scale2 + 0.5)), width2 - 1);
    const int y = std::min(int(std::floor(p.y * scale2 + 0.5)), height - 1);
    return {x_offset + x, y};
  }
};

struct Composite {
  ImageBuffer image;
  CompositeLayout layout;
};

// img1 on the left; img2 rescaled (bilinear) to img1's height, aspect
// preserved, on the right.
inline Composite compose_side_by_side(const ImageBuffer& img1, const ImageBuffer& img2) {
  CompositeLayout layout;
  layout.height = img1.height();
  layout.x_offset = img1.width();
  layout.scale2 = double(img1.height()) / double(img2.height());
  ImageBuffer right = img2;
  if (img2.height() != img1.height()) {
    const int w2 = std::max(1, int(std::floor(img2.width() * layout.scale2 + 0.5)));
    right = resize_bilinear(img2, w2, img1.height());
  }
  layout.width2 = right.width();

  ImageBuffer out(img1.width() + right.width(), img1.height());
  for (int y = 0; y < img1.height(); ++y) {
    for (int x = 0; x < img1.width(); ++x) out.set(x, y, img1.at(x, y));
    for (int x = 0; x < right.width(); ++x) out.set(layout.x_offset + x, y, right.at(x, y));
  }
  return {std::move(out), layout};
}

}  // namespace ssltune
