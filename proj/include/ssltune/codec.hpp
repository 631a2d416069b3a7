#pragma once

// PNG/JPEG decoding and deterministic PNG encoding on top of libpng and
// libjpeg. Both libraries report errors via longjmp, so every function
// that calls setjmp keeps only trivially destructible locals alive across
// the jump and converts the failure into an exception afterwards.

#include <png.h>
#include <jpeglib.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "ssltune/error.hpp"
#include "ssltune/image.hpp"

namespace ssltune {

inline constexpr int kPngCompressionLevel = 6;

namespace detail {

inline bool is_png(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

inline bool is_jpeg(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
}

inline ImageBuffer decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError("PNG header: " + msg);
  }
  image.format = PNG_FORMAT_RGB;
  if (image.width == 0 || image.height == 0 || image.width > (1u << 15) ||
      image.height > (1u << 15)) {
    png_image_free(&image);
    throw DecodeError("PNG dimensions out of range");
  }
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  // Alpha is composited onto black by the simplified API.
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError("PNG data: " + msg);
  }
  return ImageBuffer(int(image.width), int(image.height), std::move(pixels));
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

inline void jpeg_silent(j_common_ptr, int) {}

// Runs the libjpeg decode; returns false (with err.message filled) on
// failure. `pixels` must be sized by the caller after the header is read,
// which is why the work is split around the jump buffer.
inline bool jpeg_decode_raw(std::span<const std::uint8_t> bytes, jpeg_decompress_struct& cinfo,
                            JpegErrorManager& err, std::vector<std::uint8_t>& pixels,
                            int& width, int& height) {
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.emit_message = jpeg_silent;
  err.message[0] = '\0';
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  if (cinfo.jpeg_color_space != JCS_GRAYSCALE && cinfo.jpeg_color_space != JCS_YCbCr &&
      cinfo.jpeg_color_space != JCS_RGB) {
    std::snprintf(err.message, sizeof err.message, "unsupported JPEG color space %d",
                  int(cinfo.jpeg_color_space));
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = int(cinfo.output_width);
  height = int(cinfo.output_height);
  pixels.resize(std::size_t(width) * std::size_t(height) * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + std::size_t(cinfo.output_scanline) * std::size_t(width) * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

inline ImageBuffer decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  std::vector<std::uint8_t> pixels;
  int width = 0;
  int height = 0;
  if (!jpeg_decode_raw(bytes, cinfo, err, pixels, width, height))
    throw DecodeError(std::string("JPEG: ") + err.message);
  if (width < 1 || height < 1) throw DecodeError("JPEG: empty image");
  return ImageBuffer(width, height, std::move(pixels));
}

struct PngWriteState {
  std::vector<std::uint8_t>* out;
};

inline void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* state = static_cast<PngWriteState*>(png_get_io_ptr(png));
  state->out->insert(state->out->end(), data, data + length);
}

inline void png_flush_noop(png_structp) {}

inline bool png_encode_raw(const ImageBuffer& img, std::vector<std::uint8_t>& out) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  PngWriteState state{&out};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &state, png_write_to_vector, png_flush_noop);
  png_set_compression_level(png, kPngCompressionLevel);
  png_set_IHDR(png, info, png_uint_32(img.width()), png_uint_32(img.height()), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const auto stride = std::size_t(img.width()) * 3;
  const std::uint8_t* base = img.pixels().data();
  for (int y = 0; y < img.height(); ++y)
    png_write_row(png, const_cast<png_bytep>(base + std::size_t(y) * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace detail

// Decodes a PNG or JPEG stream into RGB8. Grayscale sources are expanded
// to R = G = B.
inline ImageBuffer decode_image(std::span<const std::uint8_t> bytes) {
  if (detail::is_png(bytes)) return detail::decode_png(bytes);
  if (detail::is_jpeg(bytes)) return detail::decode_jpeg(bytes);
  throw DecodeError("unrecognized image signature");
}

// 8-bit RGB, non-interlaced, no timestamp or text chunks, fixed zlib
// level: identical pixels always produce identical bytes.
inline std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
  if (img.empty()) throw EncodeError("cannot encode an empty image");
  std::vector<std::uint8_t> out;
  if (!detail::png_encode_raw(img, out)) throw EncodeError("libpng failed to encode image");
  return out;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline ImageBuffer read_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_image(bytes);
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

inline void write_png(const ImageBuffer& img, const std::filesystem::path& path) {
  write_file(path, encode_png(img));
}

}  // namespace ssltune
