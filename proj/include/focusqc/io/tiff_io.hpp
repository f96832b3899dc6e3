#pragma once

// Self-contained classic-TIFF support for 8-bit grayscale and RGB images:
// a streaming reader for striped or tiled files (uncompressed or deflate,
// with optional horizontal-differencing predictor, either byte order) and
// a streaming writer emitting uncompressed striped little-endian files.
// Only a single image directory is consumed; planar configuration must be
// chunky.

#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "focusqc/errors.hpp"
#include "focusqc/image.hpp"

namespace focusqc {

namespace detail {

enum TiffTag : uint16_t {
  kTagImageWidth = 256,
  kTagImageLength = 257,
  kTagBitsPerSample = 258,
  kTagCompression = 259,
  kTagPhotometric = 262,
  kTagStripOffsets = 273,
  kTagSamplesPerPixel = 277,
  kTagRowsPerStrip = 278,
  kTagStripByteCounts = 279,
  kTagPlanarConfig = 284,
  kTagPredictor = 317,
  kTagTileWidth = 322,
  kTagTileLength = 323,
  kTagTileOffsets = 324,
  kTagTileByteCounts = 325,
};

inline uint16_t tiff_u16(const uint8_t* p, bool big_endian) {
  return big_endian ? static_cast<uint16_t>((p[0] << 8) | p[1])
                    : static_cast<uint16_t>((p[1] << 8) | p[0]);
}

inline uint32_t tiff_u32(const uint8_t* p, bool big_endian) {
  return big_endian ? (static_cast<uint32_t>(p[0]) << 24) |
                          (static_cast<uint32_t>(p[1]) << 16) |
                          (static_cast<uint32_t>(p[2]) << 8) | p[3]
                    : (static_cast<uint32_t>(p[3]) << 24) |
                          (static_cast<uint32_t>(p[2]) << 16) |
                          (static_cast<uint32_t>(p[1]) << 8) | p[0];
}

inline std::size_t tiff_type_size(uint16_t type) {
  switch (type) {
    case 1:  // BYTE
    case 2:  // ASCII
      return 1;
    case 3:  // SHORT
      return 2;
    case 4:  // LONG
      return 4;
    default:
      return 0;
  }
}

// zlib inflate of a deflate-compressed block with a known decoded size.
inline std::vector<uint8_t> zlib_inflate(const std::vector<uint8_t>& input,
                                         std::size_t expected) {
  std::vector<uint8_t> output(expected);
  z_stream stream;
  std::memset(&stream, 0, sizeof(stream));
  if (inflateInit(&stream) != Z_OK) {
    throw IoError("zlib inflate initialization failed");
  }
  stream.next_in = const_cast<Bytef*>(input.data());
  stream.avail_in = static_cast<uInt>(input.size());
  stream.next_out = output.data();
  stream.avail_out = static_cast<uInt>(output.size());
  const int status = inflate(&stream, Z_FINISH);
  inflateEnd(&stream);
  if (status != Z_STREAM_END || stream.total_out != expected) {
    throw DataError("corrupt deflate-compressed TIFF data block");
  }
  return output;
}

// Reverses TIFF predictor 2 (horizontal byte differencing) in place.
inline void undo_horizontal_predictor(std::vector<uint8_t>& data,
                                      std::size_t row_bytes,
                                      std::size_t channels) {
  for (std::size_t start = 0; start + row_bytes <= data.size();
       start += row_bytes) {
    for (std::size_t x = channels; x < row_bytes; ++x) {
      data[start + x] = static_cast<uint8_t>(data[start + x] +
                                             data[start + x - channels]);
    }
  }
}

}  // namespace detail

class TiffReader {
 public:
  explicit TiffReader(const std::string& path) : path_(path) {
    stream_.open(path, std::ios::binary);
    if (!stream_) throw IoError("cannot open " + path + " for reading");
    parse_directory();
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }

  // Fills `out` (resized to width x count) with rows [y0, y0 + count).
  void read_rows(int y0, int count, ImageU8& out) {
    if (y0 < 0 || count <= 0 || y0 + count > height_) {
      throw DataError("TIFF row range outside the image");
    }
    if (out.width != width_ || out.height != count ||
        out.channels != channels_) {
      out = ImageU8(count, width_, channels_);
    }
    const std::size_t row_bytes = static_cast<std::size_t>(width_) *
                                  static_cast<std::size_t>(channels_);
    for (int y = y0; y < y0 + count; ++y) {
      ensure_band(y);
      const std::size_t band_row = static_cast<std::size_t>(y - band_y0_);
      std::memcpy(out.pixels.data() +
                      static_cast<std::size_t>(y - y0) * row_bytes,
                  band_.data() + band_row * row_bytes, row_bytes);
    }
  }

 private:
  using TagMap = std::map<uint16_t, std::vector<uint64_t>>;

  void parse_directory() {
    uint8_t header[8];
    stream_.read(reinterpret_cast<char*>(header), 8);
    if (!stream_) throw DataError(path_ + ": truncated TIFF header");
    if (header[0] == 'I' && header[1] == 'I') {
      big_endian_ = false;
    } else if (header[0] == 'M' && header[1] == 'M') {
      big_endian_ = true;
    } else {
      throw DataError(path_ + ": not a TIFF file");
    }
    if (detail::tiff_u16(header + 2, big_endian_) != 42) {
      throw DataError(path_ + ": bad TIFF magic number");
    }
    const uint32_t ifd_offset = detail::tiff_u32(header + 4, big_endian_);
    const TagMap tags = read_ifd(ifd_offset);

    width_ = static_cast<int>(require_scalar(tags, detail::kTagImageWidth));
    height_ = static_cast<int>(require_scalar(tags, detail::kTagImageLength));
    if (width_ <= 0 || height_ <= 0) {
      throw DataError(path_ + ": empty TIFF image");
    }
    channels_ = static_cast<int>(
        scalar_or(tags, detail::kTagSamplesPerPixel, 1));
    if (channels_ != 1 && channels_ != 3) {
      throw DataError(path_ + ": unsupported samples per pixel " +
                      std::to_string(channels_));
    }
    const auto bits = tags.find(detail::kTagBitsPerSample);
    if (bits == tags.end()) {
      throw DataError(path_ + ": only 8-bit TIFF samples are supported");
    }
    for (uint64_t b : bits->second) {
      if (b != 8) {
        throw DataError(path_ + ": only 8-bit TIFF samples are supported");
      }
    }
    compression_ = static_cast<uint16_t>(
        scalar_or(tags, detail::kTagCompression, 1));
    if (compression_ != 1 && compression_ != 8 && compression_ != 32946) {
      throw DataError(path_ + ": unsupported TIFF compression " +
                      std::to_string(compression_));
    }
    predictor_ = static_cast<uint16_t>(
        scalar_or(tags, detail::kTagPredictor, 1));
    if (predictor_ != 1 && predictor_ != 2) {
      throw DataError(path_ + ": unsupported TIFF predictor " +
                      std::to_string(predictor_));
    }
    if (scalar_or(tags, detail::kTagPlanarConfig, 1) != 1) {
      throw DataError(path_ + ": planar TIFF layout is not supported");
    }

    tiled_ = tags.count(detail::kTagTileOffsets) > 0;
    const std::size_t row_bytes = static_cast<std::size_t>(width_) *
                                  static_cast<std::size_t>(channels_);
    if (tiled_) {
      tile_width_ = static_cast<int>(require_scalar(tags, detail::kTagTileWidth));
      unit_rows_ = static_cast<int>(require_scalar(tags, detail::kTagTileLength));
      if (tile_width_ <= 0 || unit_rows_ <= 0) {
        throw DataError(path_ + ": bad TIFF tile geometry");
      }
      offsets_ = tags.at(detail::kTagTileOffsets);
      const auto counts = tags.find(detail::kTagTileByteCounts);
      if (counts != tags.end()) {
        byte_counts_ = counts->second;
      } else if (compression_ == 1) {
        byte_counts_.assign(offsets_.size(),
                            static_cast<uint64_t>(tile_width_) *
                                static_cast<uint64_t>(unit_rows_) *
                                static_cast<uint64_t>(channels_));
      } else {
        throw DataError(path_ + ": compressed TIFF without tile byte counts");
      }
      tiles_across_ = (width_ + tile_width_ - 1) / tile_width_;
      const int tiles_down = (height_ + unit_rows_ - 1) / unit_rows_;
      if (offsets_.size() != byte_counts_.size() ||
          offsets_.size() !=
              static_cast<std::size_t>(tiles_across_) *
                  static_cast<std::size_t>(tiles_down)) {
        throw DataError(path_ + ": inconsistent TIFF tile tables");
      }
    } else {
      const auto strip_offsets = tags.find(detail::kTagStripOffsets);
      if (strip_offsets == tags.end()) {
        throw DataError(path_ + ": TIFF has neither strips nor tiles");
      }
      offsets_ = strip_offsets->second;
      uint64_t rows_per_strip =
          scalar_or(tags, detail::kTagRowsPerStrip,
                    static_cast<uint64_t>(height_));
      if (rows_per_strip == 0 ||
          rows_per_strip > static_cast<uint64_t>(height_)) {
        rows_per_strip = static_cast<uint64_t>(height_);
      }
      unit_rows_ = static_cast<int>(rows_per_strip);
      const auto counts = tags.find(detail::kTagStripByteCounts);
      if (counts != tags.end()) {
        byte_counts_ = counts->second;
      } else if (compression_ == 1) {
        byte_counts_.resize(offsets_.size());
        for (std::size_t s = 0; s < offsets_.size(); ++s) {
          const int first_row = static_cast<int>(s) * unit_rows_;
          const int rows = std::min(unit_rows_, height_ - first_row);
          byte_counts_[s] = static_cast<uint64_t>(rows) * row_bytes;
        }
      } else {
        throw DataError(path_ + ": compressed TIFF without strip byte counts");
      }
      const std::size_t expected_strips =
          (static_cast<std::size_t>(height_) +
           static_cast<std::size_t>(unit_rows_) - 1) /
          static_cast<std::size_t>(unit_rows_);
      if (offsets_.size() != byte_counts_.size() ||
          offsets_.size() != expected_strips) {
        throw DataError(path_ + ": inconsistent TIFF strip tables");
      }
    }
  }

  TagMap read_ifd(uint32_t offset) {
    stream_.seekg(offset);
    uint8_t count_bytes[2];
    stream_.read(reinterpret_cast<char*>(count_bytes), 2);
    if (!stream_) throw DataError(path_ + ": truncated TIFF directory");
    const uint16_t entry_count = detail::tiff_u16(count_bytes, big_endian_);
    std::vector<uint8_t> entries(static_cast<std::size_t>(entry_count) * 12);
    stream_.read(reinterpret_cast<char*>(entries.data()),
                 static_cast<std::streamsize>(entries.size()));
    if (!stream_) throw DataError(path_ + ": truncated TIFF directory");

    TagMap tags;
    for (uint16_t e = 0; e < entry_count; ++e) {
      const uint8_t* entry = entries.data() + static_cast<std::size_t>(e) * 12;
      const uint16_t tag = detail::tiff_u16(entry, big_endian_);
      const uint16_t type = detail::tiff_u16(entry + 2, big_endian_);
      const uint32_t count = detail::tiff_u32(entry + 4, big_endian_);
      const std::size_t elem_size = detail::tiff_type_size(type);
      if (elem_size == 0) continue;  // tag type we never need (e.g. RATIONAL)
      const std::size_t total = elem_size * count;
      std::vector<uint8_t> raw(total);
      if (total <= 4) {
        std::memcpy(raw.data(), entry + 8, total);
      } else {
        const uint32_t value_offset = detail::tiff_u32(entry + 8, big_endian_);
        const std::streampos keep = stream_.tellg();
        stream_.seekg(value_offset);
        stream_.read(reinterpret_cast<char*>(raw.data()),
                     static_cast<std::streamsize>(total));
        if (!stream_) throw DataError(path_ + ": truncated TIFF tag data");
        stream_.seekg(keep);
      }
      std::vector<uint64_t>& values = tags[tag];
      values.reserve(count);
      for (uint32_t i = 0; i < count; ++i) {
        const uint8_t* p = raw.data() + static_cast<std::size_t>(i) * elem_size;
        switch (elem_size) {
          case 1:
            values.push_back(*p);
            break;
          case 2:
            values.push_back(detail::tiff_u16(p, big_endian_));
            break;
          default:
            values.push_back(detail::tiff_u32(p, big_endian_));
            break;
        }
      }
    }
    return tags;
  }

  uint64_t require_scalar(const TagMap& tags, uint16_t tag) {
    const auto it = tags.find(tag);
    if (it == tags.end() || it->second.empty()) {
      throw DataError(path_ + ": missing required TIFF tag " +
                      std::to_string(tag));
    }
    return it->second.front();
  }

  static uint64_t scalar_or(const TagMap& tags, uint16_t tag,
                            uint64_t fallback) {
    const auto it = tags.find(tag);
    return (it == tags.end() || it->second.empty()) ? fallback
                                                    : it->second.front();
  }

  std::vector<uint8_t> decode_unit(std::size_t index, std::size_t expected) {
    std::vector<uint8_t> raw(byte_counts_[index]);
    stream_.seekg(static_cast<std::streamoff>(offsets_[index]));
    stream_.read(reinterpret_cast<char*>(raw.data()),
                 static_cast<std::streamsize>(raw.size()));
    if (!stream_) throw DataError(path_ + ": truncated TIFF pixel data");
    std::vector<uint8_t> data;
    if (compression_ == 1) {
      if (raw.size() < expected) {
        throw DataError(path_ + ": TIFF data block shorter than declared");
      }
      raw.resize(expected);
      data = std::move(raw);
    } else {
      data = detail::zlib_inflate(raw, expected);
    }
    return data;
  }

  // Decodes the strip / tile row containing image row y into band_.
  void ensure_band(int y) {
    const int unit_row = y / unit_rows_;
    const int band_y0 = unit_row * unit_rows_;
    if (band_y0 == band_y0_ && !band_.empty()) return;
    const std::size_t row_bytes = static_cast<std::size_t>(width_) *
                                  static_cast<std::size_t>(channels_);
    const int band_rows = std::min(unit_rows_, height_ - band_y0);
    if (tiled_) {
      band_.assign(row_bytes * static_cast<std::size_t>(unit_rows_), 0);
      const std::size_t tile_row_bytes =
          static_cast<std::size_t>(tile_width_) *
          static_cast<std::size_t>(channels_);
      for (int tc = 0; tc < tiles_across_; ++tc) {
        const std::size_t index =
            static_cast<std::size_t>(unit_row) *
                static_cast<std::size_t>(tiles_across_) +
            static_cast<std::size_t>(tc);
        std::vector<uint8_t> tile = decode_unit(
            index, tile_row_bytes * static_cast<std::size_t>(unit_rows_));
        if (predictor_ == 2) {
          detail::undo_horizontal_predictor(
              tile, tile_row_bytes, static_cast<std::size_t>(channels_));
        }
        const int valid_cols =
            std::min(tile_width_, width_ - tc * tile_width_);
        const std::size_t copy_bytes = static_cast<std::size_t>(valid_cols) *
                                       static_cast<std::size_t>(channels_);
        for (int r = 0; r < band_rows; ++r) {
          std::memcpy(band_.data() + static_cast<std::size_t>(r) * row_bytes +
                          static_cast<std::size_t>(tc) *
                              static_cast<std::size_t>(tile_width_) *
                              static_cast<std::size_t>(channels_),
                      tile.data() + static_cast<std::size_t>(r) * tile_row_bytes,
                      copy_bytes);
        }
      }
    } else {
      band_ = decode_unit(static_cast<std::size_t>(unit_row),
                          row_bytes * static_cast<std::size_t>(band_rows));
      if (predictor_ == 2) {
        detail::undo_horizontal_predictor(
            band_, row_bytes, static_cast<std::size_t>(channels_));
      }
    }
    band_y0_ = band_y0;
  }

  std::string path_;
  std::ifstream stream_;
  bool big_endian_ = false;
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  uint16_t compression_ = 1;
  uint16_t predictor_ = 1;
  bool tiled_ = false;
  int tile_width_ = 0;
  int tiles_across_ = 0;
  int unit_rows_ = 0;  // rows per strip, or tile height
  std::vector<uint64_t> offsets_;
  std::vector<uint64_t> byte_counts_;
  std::vector<uint8_t> band_;
  int band_y0_ = -1;
};

// Streaming writer for uncompressed striped little-endian TIFF. Rows are
// appended in order; finish() writes the directory and atomically renames
// the temp file into place.
class TiffWriter {
 public:
  // rows_per_strip 0 picks a strip height targeting ~8 MB strips.
  TiffWriter(const std::string& path, int width, int height, int channels,
             int rows_per_strip = 0)
      : path_(path), tmp_(path + ".tmp"), width_(width), height_(height),
        channels_(channels) {
    if (width <= 0 || height <= 0 || (channels != 1 && channels != 3)) {
      throw DataError("TIFF writer requires positive dimensions and 1 or 3 "
                      "channels");
    }
    stream_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!stream_) throw IoError("cannot open " + tmp_ + " for writing");
    const std::size_t row_bytes = static_cast<std::size_t>(width) *
                                  static_cast<std::size_t>(channels);
    rows_per_strip_ =
        rows_per_strip > 0
            ? std::min(rows_per_strip, height)
            : static_cast<int>(std::min<std::size_t>(
                  static_cast<std::size_t>(height),
                  std::max<std::size_t>(1, (8u << 20) / row_bytes)));
    const uint8_t header[8] = {'I', 'I', 42, 0, 0, 0, 0, 0};
    stream_.write(reinterpret_cast<const char*>(header), 8);
  }

  ~TiffWriter() {
    if (!finished_) {
      stream_.close();
      std::remove(tmp_.c_str());
    }
  }

  TiffWriter(const TiffWriter&) = delete;
  TiffWriter& operator=(const TiffWriter&) = delete;

  void write_rows(const ImageU8& band) {
    if (finished_) throw IoError("TIFF writer already finished");
    if (band.width != width_ || band.channels != channels_) {
      throw DataError("TIFF band shape does not match the writer");
    }
    if (rows_written_ + band.height > height_) {
      throw DataError("more rows written than the TIFF height");
    }
    stream_.write(reinterpret_cast<const char*>(band.pixels.data()),
                  static_cast<std::streamsize>(band.pixels.size()));
    if (!stream_) throw IoError("failed writing " + tmp_);
    rows_written_ += band.height;
  }

  void finish() {
    if (finished_) return;
    if (rows_written_ != height_) {
      throw DataError("TIFF writer finished after " +
                      std::to_string(rows_written_) + " of " +
                      std::to_string(height_) + " rows");
    }
    const std::size_t row_bytes = static_cast<std::size_t>(width_) *
                                  static_cast<std::size_t>(channels_);
    const int strips = (height_ + rows_per_strip_ - 1) / rows_per_strip_;
    std::vector<uint32_t> offsets(static_cast<std::size_t>(strips));
    std::vector<uint32_t> counts(static_cast<std::size_t>(strips));
    for (int s = 0; s < strips; ++s) {
      const int first_row = s * rows_per_strip_;
      const int rows = std::min(rows_per_strip_, height_ - first_row);
      offsets[static_cast<std::size_t>(s)] = static_cast<uint32_t>(
          8 + static_cast<std::size_t>(first_row) * row_bytes);
      counts[static_cast<std::size_t>(s)] =
          static_cast<uint32_t>(static_cast<std::size_t>(rows) * row_bytes);
    }

    uint64_t position = 8 + static_cast<uint64_t>(height_) * row_bytes;
    if (position % 2 == 1) {
      put_u8(0);
      ++position;
    }
    const uint32_t ifd_offset = static_cast<uint32_t>(position);

    const int entry_count = 10;
    uint32_t external = ifd_offset + 2 + 12 * entry_count + 4;
    std::vector<std::pair<uint32_t, std::vector<uint8_t>>> external_blocks;
    const auto external_slot = [&](std::vector<uint8_t> bytes) {
      const uint32_t at = external;
      external += static_cast<uint32_t>(bytes.size());
      if (external % 2 == 1) {
        bytes.push_back(0);
        ++external;
      }
      external_blocks.emplace_back(at, std::move(bytes));
      return at;
    };

    put_u16(static_cast<uint16_t>(entry_count));
    put_entry_long(detail::kTagImageWidth, static_cast<uint32_t>(width_));
    put_entry_long(detail::kTagImageLength, static_cast<uint32_t>(height_));
    if (channels_ == 1) {
      put_entry_short(detail::kTagBitsPerSample, 8);
    } else {
      std::vector<uint8_t> bits;
      for (int c = 0; c < channels_; ++c) {
        bits.push_back(8);
        bits.push_back(0);
      }
      put_entry(detail::kTagBitsPerSample, 3,
                static_cast<uint32_t>(channels_), external_slot(bits));
    }
    put_entry_short(detail::kTagCompression, 1);
    put_entry_short(detail::kTagPhotometric,
                    static_cast<uint16_t>(channels_ == 1 ? 1 : 2));
    if (strips == 1) {
      put_entry_long(detail::kTagStripOffsets, offsets[0]);
    } else {
      put_entry(detail::kTagStripOffsets, 4, static_cast<uint32_t>(strips),
                external_slot(pack_u32(offsets)));
    }
    put_entry_short(detail::kTagSamplesPerPixel,
                    static_cast<uint16_t>(channels_));
    put_entry_long(detail::kTagRowsPerStrip,
                   static_cast<uint32_t>(rows_per_strip_));
    if (strips == 1) {
      put_entry_long(detail::kTagStripByteCounts, counts[0]);
    } else {
      put_entry(detail::kTagStripByteCounts, 4, static_cast<uint32_t>(strips),
                external_slot(pack_u32(counts)));
    }
    put_entry_short(detail::kTagPlanarConfig, 1);
    put_u32(0);  // no further directories
    for (const auto& [at, bytes] : external_blocks) {
      (void)at;  // blocks are laid out contiguously in emission order
      stream_.write(reinterpret_cast<const char*>(bytes.data()),
                    static_cast<std::streamsize>(bytes.size()));
    }

    stream_.seekp(4);
    put_u32(ifd_offset);
    stream_.flush();
    if (!stream_) throw IoError("failed writing " + tmp_);
    stream_.close();
    if (std::rename(tmp_.c_str(), path_.c_str()) != 0) {
      std::remove(tmp_.c_str());
      throw IoError("failed renaming " + tmp_ + " to " + path_);
    }
    finished_ = true;
  }

 private:
  void put_u8(uint8_t v) {
    stream_.write(reinterpret_cast<const char*>(&v), 1);
  }
  void put_u16(uint16_t v) {
    const uint8_t bytes[2] = {static_cast<uint8_t>(v & 0xff),
                              static_cast<uint8_t>(v >> 8)};
    stream_.write(reinterpret_cast<const char*>(bytes), 2);
  }
  void put_u32(uint32_t v) {
    const uint8_t bytes[4] = {static_cast<uint8_t>(v & 0xff),
                              static_cast<uint8_t>((v >> 8) & 0xff),
                              static_cast<uint8_t>((v >> 16) & 0xff),
                              static_cast<uint8_t>(v >> 24)};
    stream_.write(reinterpret_cast<const char*>(bytes), 4);
  }
  void put_entry(uint16_t tag, uint16_t type, uint32_t count,
                 uint32_t value) {
    put_u16(tag);
    put_u16(type);
    put_u32(count);
    put_u32(value);
  }
  void put_entry_short(uint16_t tag, uint16_t value) {
    put_u16(tag);
    put_u16(3);
    put_u32(1);
    put_u16(value);
    put_u16(0);
  }
  void put_entry_long(uint16_t tag, uint32_t value) {
    put_entry(tag, 4, 1, value);
  }
  static std::vector<uint8_t> pack_u32(const std::vector<uint32_t>& values) {
    std::vector<uint8_t> bytes;
    bytes.reserve(values.size() * 4);
    for (uint32_t v : values) {
      bytes.push_back(static_cast<uint8_t>(v & 0xff));
      bytes.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
      bytes.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
      bytes.push_back(static_cast<uint8_t>(v >> 24));
    }
    return bytes;
  }

  std::string path_;
  std::string tmp_;
  std::ofstream stream_;
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  int rows_per_strip_ = 0;
  int rows_written_ = 0;
  bool finished_ = false;
};

inline ImageU8 read_tiff(const std::string& path) {
  TiffReader reader(path);
  ImageU8 image(reader.height(), reader.width(), reader.channels());
  ImageU8 band;
  const std::size_t row_bytes = static_cast<std::size_t>(reader.width()) *
                                static_cast<std::size_t>(reader.channels());
  const int band_rows = 256;
  for (int y = 0; y < reader.height(); y += band_rows) {
    const int rows = std::min(band_rows, reader.height() - y);
    reader.read_rows(y, rows, band);
    std::memcpy(image.pixels.data() + static_cast<std::size_t>(y) * row_bytes,
                band.pixels.data(),
                static_cast<std::size_t>(rows) * row_bytes);
  }
  return image;
}

inline void write_tiff(const std::string& path, const ImageU8& image) {
  TiffWriter writer(path, image.width, image.height, image.channels);
  writer.write_rows(image);
  writer.finish();
}

}  // namespace focusqc
