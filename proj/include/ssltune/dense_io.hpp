#pragma once

// Binary containers for dense patch features ("VGFT") and per-pixel
// pseudo-class maps ("VGLM"). Both are little-endian:
//
//   VGFT: "VGFT" | u16 version | u32 h | u32 w | u32 D | h*w*D f32 (row-major, D innermost)
//   VGLM: "VGLM" | u16 version | u32 H | u32 W | u32 K | H*W u16 class ids (row-major)

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ssltune/codec.hpp"
#include "ssltune/error.hpp"

namespace ssltune {

inline constexpr std::uint16_t kDenseFormatVersion = 1;

class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int h, int w, int dim, std::vector<float> values)
      : h_(h), w_(w), dim_(dim), values_(std::move(values)) {
    if (h < 1 || w < 1 || dim < 1) throw FormatError("feature map dimensions must be >= 1");
    if (values_.size() != std::size_t(h) * std::size_t(w) * std::size_t(dim))
      throw FormatError("feature map value count does not match h*w*D");
    for (float v : values_)
      if (!std::isfinite(v)) throw FormatError("feature map contains a non-finite value");
  }

  int rows() const noexcept { return h_; }
  int cols() const noexcept { return w_; }
  int dim() const noexcept { return dim_; }

  std::span<const float> at(int row, int col) const noexcept {
    return std::span(values_).subspan(
        (std::size_t(row) * std::size_t(w_) + std::size_t(col)) * std::size_t(dim_),
        std::size_t(dim_));
  }
  std::span<const float> values() const noexcept { return values_; }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  int h_ = 0;
  int w_ = 0;
  int dim_ = 0;
  std::vector<float> values_;
};

class RegionLabelMap {
 public:
  RegionLabelMap() = default;
  RegionLabelMap(int height, int width, int classes, std::vector<std::uint16_t> labels)
      : height_(height), width_(width), classes_(classes), labels_(std::move(labels)) {
    if (height < 1 || width < 1 || classes < 1)
      throw FormatError("label map dimensions and class count must be >= 1");
    if (labels_.size() != std::size_t(height) * std::size_t(width))
      throw FormatError("label map length does not match H*W");
    for (auto l : labels_)
      if (int(l) >= classes)
        throw FormatError("label " + std::to_string(l) + " >= class count " +
                          std::to_string(classes));
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int classes() const noexcept { return classes_; }
  int at(int x, int y) const noexcept {
    return labels_[std::size_t(y) * std::size_t(width_) + std::size_t(x)];
  }
  std::span<const std::uint16_t> labels() const noexcept { return labels_; }

  friend bool operator==(const RegionLabelMap&, const RegionLabelMap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int classes_ = 0;
  std::vector<std::uint16_t> labels_;
};

namespace detail {

class LeWriter {
 public:
  void bytes(const char* s, std::size_t n) { out_.insert(out_.end(), s, s + n); }
  void u16(std::uint16_t v) {
    out_.push_back(std::uint8_t(v));
    out_.push_back(std::uint8_t(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(std::uint8_t(v >> (8 * i)));
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class LeReader {
 public:
  LeReader(std::span<const std::uint8_t> in, const char* what) : in_(in), what_(what) {}

  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw FormatError(std::string(what_) + ": truncated file");
  }
  void magic(const char (&m)[5]) {
    need(4);
    if (std::memcmp(in_.data() + pos_, m, 4) != 0)
      throw FormatError(std::string(what_) + ": bad magic, expected " + m);
    pos_ += 4;
  }
  std::uint16_t u16() {
    need(2);
    const std::uint16_t v = std::uint16_t(in_[pos_] | (in_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(in_[pos_ + std::size_t(i)]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::size_t remaining() const noexcept { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  const char* what_;
  std::size_t pos_ = 0;
};

inline void check_version(std::uint16_t v, const char* what) {
  if (v != kDenseFormatVersion)
    throw FormatError(std::string(what) + ": unsupported format version " + std::to_string(v));
}

inline int checked_dim(std::uint32_t v, const char* what, const char* name) {
  if (v < 1 || v > (1u << 20))
    throw FormatError(std::string(what) + ": " + name + " out of range");
  return int(v);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_feature_map(const FeatureMap& f) {
  detail::LeWriter w;
  w.bytes("VGFT", 4);
  w.u16(kDenseFormatVersion);
  w.u32(std::uint32_t(f.rows()));
  w.u32(std::uint32_t(f.cols()));
  w.u32(std::uint32_t(f.dim()));
  for (float v : f.values()) w.f32(v);
  return w.take();
}

inline FeatureMap decode_feature_map(std::span<const std::uint8_t> bytes) {
  detail::LeReader r(bytes, "VGFT");
  r.magic("VGFT");
  detail::check_version(r.u16(), "VGFT");
  const int h = detail::checked_dim(r.u32(), "VGFT", "h");
  const int w = detail::checked_dim(r.u32(), "VGFT", "w");
  const int d = detail::checked_dim(r.u32(), "VGFT", "D");
  const std::size_t n = std::size_t(h) * std::size_t(w) * std::size_t(d);
  if (r.remaining() != n * 4)
    throw FormatError("VGFT: payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                      std::to_string(n * 4));
  std::vector<float> values(n);
  for (auto& v : values) v = r.f32();
  return FeatureMap(h, w, d, std::move(values));
}

inline std::vector<std::uint8_t> encode_label_map(const RegionLabelMap& m) {
  detail::LeWriter w;
  w.bytes("VGLM", 4);
  w.u16(kDenseFormatVersion);
  w.u32(std::uint32_t(m.height()));
  w.u32(std::uint32_t(m.width()));
  w.u32(std::uint32_t(m.classes()));
  for (auto l : m.labels()) w.u16(l);
  return w.take();
}

inline RegionLabelMap decode_label_map(std::span<const std::uint8_t> bytes) {
  detail::LeReader r(bytes, "VGLM");
  r.magic("VGLM");
  detail::check_version(r.u16(), "VGLM");
  const int H = detail::checked_dim(r.u32(), "VGLM", "H");
  const int W = detail::checked_dim(r.u32(), "VGLM", "W");
  const std::uint32_t K = r.u32();
  if (K < 1 || K > 65536) throw FormatError("VGLM: class count out of range");
  const std::size_t n = std::size_t(H) * std::size_t(W);
  if (r.remaining() != n * 2)
    throw FormatError("VGLM: payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                      std::to_string(n * 2));
  std::vector<std::uint16_t> labels(n);
  for (auto& l : labels) l = r.u16();
  return RegionLabelMap(H, W, int(K), std::move(labels));
}

inline FeatureMap read_feature_map(const std::filesystem::path& path) {
  try {
    return decode_feature_map(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline RegionLabelMap read_label_map(const std::filesystem::path& path) {
  try {
    return decode_label_map(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline void write_feature_map(const FeatureMap& f, const std::filesystem::path& path) {
  write_file(path, encode_feature_map(f));
}

inline void write_label_map(const RegionLabelMap& m, const std::filesystem::path& path) {
  write_file(path, encode_label_map(m));
}

}  // namespace ssltune
