#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "focusqc/errors.hpp"

namespace focusqc {

/// 8-bit image with interleaved channels, row-major storage.
struct ImageU8 {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  ImageU8() = default;
  ImageU8(int h, int w, int c)
      : width(w), height(h), channels(c),
        pixels(static_cast<std::size_t>(h) * w * c, 0) {
    if (h <= 0 || w <= 0 || c <= 0) {
      throw DataError("image dimensions must be positive, got " +
                      std::to_string(h) + "x" + std::to_string(w) + "x" +
                      std::to_string(c));
    }
  }

  std::uint8_t& at(int y, int x, int c = 0) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int y, int x, int c = 0) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t* row(int y) {
    return pixels.data() + static_cast<std::size_t>(y) * width * channels;
  }
  const std::uint8_t* row(int y) const {
    return pixels.data() + static_cast<std::size_t>(y) * width * channels;
  }
};

/// Single-channel double-precision image, row-major storage.
struct ImageF {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  ImageF() = default;
  ImageF(int h, int w)
      : width(w), height(h), pixels(static_cast<std::size_t>(h) * w, 0.0) {
    if (h <= 0 || w <= 0) {
      throw DataError("image dimensions must be positive, got " +
                      std::to_string(h) + "x" + std::to_string(w));
    }
  }

  double& at(int y, int x) {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  double at(int y, int x) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  double* row(int y) {
    return pixels.data() + static_cast<std::size_t>(y) * width;
  }
  const double* row(int y) const {
    return pixels.data() + static_cast<std::size_t>(y) * width;
  }
  void resize(int h, int w) {
    if (h <= 0 || w <= 0) {
      throw DataError("image dimensions must be positive, got " +
                      std::to_string(h) + "x" + std::to_string(w));
    }
    width = w;
    height = h;
    pixels.assign(static_cast<std::size_t>(h) * w, 0.0);
  }
};

/// Flips an image left-right (mirror across the vertical axis).
inline ImageU8 flip_horizontal(const ImageU8& img) {
  ImageU8 out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        out.at(y, img.width - 1 - x, c) = img.at(y, x, c);
      }
    }
  }
  return out;
}

/// Flips an image top-bottom (mirror across the horizontal axis).
inline ImageU8 flip_vertical(const ImageU8& img) {
  ImageU8 out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        out.at(img.height - 1 - y, x, c) = img.at(y, x, c);
      }
    }
  }
  return out;
}

/// Transposes an image (swaps rows and columns).
inline ImageU8 transpose(const ImageU8& img) {
  ImageU8 out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        out.at(x, y, c) = img.at(y, x, c);
      }
    }
  }
  return out;
}

}  // namespace focusqc
