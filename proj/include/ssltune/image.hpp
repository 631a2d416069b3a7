#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ssltune/error.hpp"

namespace ssltune {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend constexpr bool operator==(const Rgb&, const Rgb&) = default;
};

// Squared Euclidean distance in RGB space.
constexpr int rgb_distance2(Rgb a, Rgb b) noexcept {
  const int dr = int(a.r) - int(b.r);
  const int dg = int(a.g) - int(b.g);
  const int db = int(a.b) - int(b.b);
  return dr * dr + dg * dg + db * db;
}

struct Point {
  int x = 0;  // column
  int y = 0;  // row

  friend constexpr bool operator==(const Point&, const Point&) = default;
};

// Row-major interleaved RGB8 raster. Width and height are always >= 1 and
// the pixel vector always holds exactly width * height * 3 samples.
class ImageBuffer {
 public:
  ImageBuffer() = default;

  ImageBuffer(int width, int height, Rgb fill = {}) : width_(width), height_(height) {
    check_dims(width, height);
    pixels_.resize(std::size_t(width) * std::size_t(height) * 3);
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
      pixels_[i] = fill.r;
      pixels_[i + 1] = fill.g;
      pixels_[i + 2] = fill.b;
    }
  }

  ImageBuffer(int width, int height, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    check_dims(width, height);
    if (pixels_.size() != std::size_t(width) * std::size_t(height) * 3)
      throw FormatError("pixel buffer length " + std::to_string(pixels_.size()) +
                        " does not match " + std::to_string(width) + "x" +
                        std::to_string(height) + "x3");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }
  std::size_t area() const noexcept { return std::size_t(width_) * std::size_t(height_); }

  bool contains(Point p) const noexcept {
    return p.x >= 0 && p.y >= 0 && p.x < width_ && p.y < height_;
  }

  Rgb at(int x, int y) const noexcept {
    const std::uint8_t* p = &pixels_[offset(x, y)];
    return {p[0], p[1], p[2]};
  }
  Rgb at(Point p) const noexcept { return at(p.x, p.y); }

  void set(int x, int y, Rgb c) noexcept {
    std::uint8_t* p = &pixels_[offset(x, y)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  static void check_dims(int width, int height) {
    if (width < 1 || height < 1)
      throw FormatError("image dimensions must be >= 1, got " + std::to_string(width) + "x" +
                        std::to_string(height));
  }

  std::size_t offset(int x, int y) const noexcept {
    return (std::size_t(y) * std::size_t(width_) + std::size_t(x)) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

}  // namespace ssltune
