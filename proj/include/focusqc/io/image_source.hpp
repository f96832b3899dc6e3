#pragma once

// Uniform row-band access to slide images. TIFF files stream band by band
// so slides larger than memory stay processable; PNGs decode fully (they
// are used for patches and rendered outputs, not gigapixel slides).
// Formats are recognized by magic bytes, not file extension.

#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "focusqc/errors.hpp"
#include "focusqc/image.hpp"
#include "focusqc/io/png_io.hpp"
#include "focusqc/io/tiff_io.hpp"

namespace focusqc {

class ImageSource {
 public:
  virtual ~ImageSource() = default;
  virtual int width() const = 0;
  virtual int height() const = 0;
  virtual int channels() const = 0;
  // Fills `out` (resized to width x count) with rows [y0, y0 + count).
  virtual void read_rows(int y0, int count, ImageU8& out) = 0;
};

class MemoryImageSource final : public ImageSource {
 public:
  explicit MemoryImageSource(ImageU8 image) : image_(std::move(image)) {}

  int width() const override { return image_.width; }
  int height() const override { return image_.height; }
  int channels() const override { return image_.channels; }

  void read_rows(int y0, int count, ImageU8& out) override {
    if (y0 < 0 || count <= 0 || y0 + count > image_.height) {
      throw DataError("row range outside the image");
    }
    if (out.width != image_.width || out.height != count ||
        out.channels != image_.channels) {
      out = ImageU8(count, image_.width, image_.channels);
    }
    const std::size_t row_bytes = static_cast<std::size_t>(image_.width) *
                                  static_cast<std::size_t>(image_.channels);
    std::memcpy(out.pixels.data(),
                image_.pixels.data() + static_cast<std::size_t>(y0) * row_bytes,
                static_cast<std::size_t>(count) * row_bytes);
  }

 private:
  ImageU8 image_;
};

class TiffImageSource final : public ImageSource {
 public:
  explicit TiffImageSource(const std::string& path) : reader_(path) {}

  int width() const override { return reader_.width(); }
  int height() const override { return reader_.height(); }
  int channels() const override { return reader_.channels(); }

  void read_rows(int y0, int count, ImageU8& out) override {
    reader_.read_rows(y0, count, out);
  }

 private:
  TiffReader reader_;
};

inline std::unique_ptr<ImageSource> open_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open " + path + " for reading");
  unsigned char magic[4] = {0, 0, 0, 0};
  probe.read(reinterpret_cast<char*>(magic), 4);
  probe.close();
  if (magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N' &&
      magic[3] == 'G') {
    return std::make_unique<MemoryImageSource>(read_png(path));
  }
  if ((magic[0] == 'I' && magic[1] == 'I') ||
      (magic[0] == 'M' && magic[1] == 'M')) {
    return std::make_unique<TiffImageSource>(path);
  }
  throw DataError(path + ": unrecognized image format (PNG or TIFF expected)");
}

}  // namespace focusqc
