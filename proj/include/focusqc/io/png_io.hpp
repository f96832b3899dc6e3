#pragma once

// 8-bit PNG encode/decode on top of libpng, operating on in-memory byte
// strings so file output can reuse the atomic write path. Decoding folds
// palette, low-bit-depth, 16-bit, and alpha variants down to 8-bit
// grayscale or RGB.

#include <png.h>

#include <csetjmp>
#include <cstring>
#include <string>
#include <vector>

#include "focusqc/errors.hpp"
#include "focusqc/image.hpp"
#include "focusqc/io/atomic_file.hpp"

namespace focusqc {

namespace detail {

struct PngByteCursor {
  const unsigned char* data = nullptr;
  std::size_t size = 0;
  std::size_t pos = 0;
};

inline void png_pull_bytes(png_structp png, png_bytep out,
                           png_size_t count) {
  auto* cursor = static_cast<PngByteCursor*>(png_get_io_ptr(png));
  if (cursor->pos + count > cursor->size) {
    png_error(png, "unexpected end of PNG stream");
  }
  std::memcpy(out, cursor->data + cursor->pos, count);
  cursor->pos += count;
}

inline void png_push_bytes(png_structp png, png_bytep data,
                           png_size_t count) {
  auto* sink = static_cast<std::string*>(png_get_io_ptr(png));
  sink->append(reinterpret_cast<const char*>(data), count);
}

inline void png_flush_noop(png_structp) {}

}  // namespace detail

inline ImageU8 decode_png(const std::string& bytes) {
  if (bytes.size() < 8 ||
      png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) !=
          0) {
    throw DataError("not a PNG stream");
  }
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng read-struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng info-struct allocation failed");
  }

  ImageU8 image;
  std::vector<png_bytep> row_pointers;
  detail::PngByteCursor cursor{
      reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), 0};

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("corrupt or unsupported PNG stream");
  }
  png_set_read_fn(png, &cursor, detail::png_pull_bytes);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("PNG decodes to unsupported channel count " +
                    std::to_string(channels));
  }
  image = ImageU8(static_cast<int>(height), static_cast<int>(width), channels);
  row_pointers.resize(height);
  const std::size_t stride =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
  for (png_uint_32 y = 0; y < height; ++y) {
    row_pointers[y] = image.pixels.data() + static_cast<std::size_t>(y) * stride;
  }
  png_read_image(png, row_pointers.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

inline std::string encode_png(const ImageU8& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw DataError("PNG encoding supports 1 or 3 channels, got " +
                    std::to_string(image.channels));
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  if (!png) throw IoError("libpng write-struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng info-struct allocation failed");
  }

  std::string sink;
  std::vector<png_bytep> row_pointers(image.height);
  const std::size_t stride = static_cast<std::size_t>(image.width) *
                             static_cast<std::size_t>(image.channels);
  for (int y = 0; y < image.height; ++y) {
    row_pointers[static_cast<std::size_t>(y)] = const_cast<png_bytep>(
        image.pixels.data() + static_cast<std::size_t>(y) * stride);
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encoding failed");
  }
  png_set_write_fn(png, &sink, detail::png_push_bytes,
                   detail::png_flush_noop);
  const int color_type =
      image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, row_pointers.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return sink;
}

inline ImageU8 read_png(const std::string& path) {
  return decode_png(read_file(path));
}

inline void write_png(const std::string& path, const ImageU8& image) {
  write_file_atomic(path, encode_png(image));
}

}  // namespace focusqc
