#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "focusqc/convolve.hpp"
#include "focusqc/errors.hpp"
#include "focusqc/image.hpp"
#include "focusqc/optics.hpp"

namespace focusqc {

/// Deterministic uniform generator: a fixed engine plus an explicit
/// bits-to-double mapping, so the byte stream is identical across
/// platforms and standard-library versions.
class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Synthesizes a value-noise texture in [0, 1]: octaves of bilinearly
/// upsampled uniform lattices with geometrically decaying amplitude,
/// normalized to full range.
inline ImageF make_texture(DeterministicRng& rng, int size, int octaves = 5,
                           double persistence = 0.55) {
  if (size < 2) {
    throw DataError("texture size must be at least 2, got " +
                    std::to_string(size));
  }
  if (octaves < 1) {
    throw DataError("texture needs at least one octave");
  }
  ImageF img(size, size);
  double amplitude = 1.0;
  std::vector<double> lattice;
  for (int o = 0; o < octaves; ++o) {
    const int cells = 4 << o;
    if (cells >= size) break;
    const int g = cells + 1;
    lattice.resize(static_cast<std::size_t>(g) * g);
    for (double& v : lattice) v = rng.next_unit();
    for (int y = 0; y < size; ++y) {
      const double fy = static_cast<double>(y) * cells / size;
      const int y0 = static_cast<int>(fy);
      const double ty = fy - y0;
      const double* top = lattice.data() + static_cast<std::size_t>(y0) * g;
      const double* bottom = top + g;
      double* row = img.row(y);
      for (int x = 0; x < size; ++x) {
        const double fx = static_cast<double>(x) * cells / size;
        const int x0 = static_cast<int>(fx);
        const double tx = fx - x0;
        const double upper = top[x0] * (1.0 - tx) + top[x0 + 1] * tx;
        const double lower = bottom[x0] * (1.0 - tx) + bottom[x0 + 1] * tx;
        row[x] += amplitude * (upper * (1.0 - ty) + lower * ty);
      }
    }
    amplitude *= persistence;
  }
  double lo = img.pixels[0];
  double hi = img.pixels[0];
  for (double v : img.pixels) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const double span = hi - lo;
  const double inv = 1.0 / (span > 1e-12 ? span : 1e-12);
  for (double& v : img.pixels) v = (v - lo) * inv;
  return img;
}

/// Rounds a unit-range image to 8-bit gray.
inline ImageU8 quantize_unit(const ImageF& img) {
  ImageU8 out(img.height, img.width, 1);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    double v = img.pixels[i] * 255.0;
    if (v < 0.0) v = 0.0;
    if (v > 255.0) v = 255.0;
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(v));
  }
  return out;
}

/// One-sided taps of a unit-sum Gaussian with half-width ceil(4*sigma).
inline std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma > 0.0)) {
    throw DataError("gaussian blur needs sigma > 0, got " +
                    std::to_string(sigma));
  }
  const int half = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> taps(half + 1);
  double sum = 0.0;
  for (int k = 0; k <= half; ++k) {
    taps[k] = std::exp(-0.5 * (static_cast<double>(k) * k) / (sigma * sigma));
    sum += (k == 0 ? 1.0 : 2.0) * taps[k];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

/// One-sided taps of the unit-sum defocus blur at depth offset z (in
/// depth-step units): the radial intensity profile sampled on the pixel
/// grid, truncated where it falls below `truncation` times its peak.
/// Applied separably as a computationally cheap stand-in for the full
/// radially symmetric spread.
inline std::vector<double> psf_profile_taps(const PsfModel& model, double z,
                                            double truncation = 1e-8) {
  model.validate();
  const int max_half = 128;
  std::vector<double> profile(max_half + 1);
  double peak = 0.0;
  for (int m = 0; m <= max_half; ++m) {
    profile[m] = psf_value(model, m * model.pixel_pitch, z);
    if (profile[m] > peak) peak = profile[m];
  }
  int half = max_half;
  while (half > 1 && profile[half] < truncation * peak) --half;
  profile.resize(half + 1);
  double sum = 0.0;
  for (int k = 0; k <= half; ++k) {
    sum += (k == 0 ? 1.0 : 2.0) * profile[k];
  }
  if (!(sum > 0.0)) {
    throw DataError("defocus profile has non-positive mass; cannot normalize");
  }
  for (double& t : profile) t /= sum;
  return profile;
}

/// Applies one ladder level to a unit-range texture: strength 0 is the
/// identity (bitwise), positive strengths blur separably with either the
/// defocus profile at z = strength or a Gaussian with sigma = strength.
enum class BlurFamily { defocus, gaussian };

inline ImageF apply_blur_level(const ImageF& texture, double strength,
                               BlurFamily family, const PsfModel& model) {
  if (strength < 0.0) {
    throw DataError("blur strength must be non-negative, got " +
                    std::to_string(strength));
  }
  if (strength == 0.0) return texture;
  const std::vector<double> taps = family == BlurFamily::gaussian
                                       ? gaussian_taps(strength)
                                       : psf_profile_taps(model, strength);
  return convolve_separable_symmetric(texture, taps);
}

/// Parameters for a labeled synthetic blur dataset: `count` deterministic
/// textures, each emitted once per entry of `levels` (blur strengths; 0 is
/// the identity level and reproduces the source texture bitwise).
struct BlurLadderSpec {
  std::uint64_t seed = 0;
  int count = 1;
  std::vector<double> levels;
  int texture_size = 256;
  BlurFamily family = BlurFamily::defocus;
  PsfModel optics{};

  void validate() const {
    if (count < 1) {
      throw DataError("ladder count must be at least 1, got " +
                      std::to_string(count));
    }
    if (levels.empty()) throw DataError("ladder needs at least one level");
    for (double level : levels) {
      if (!(level >= 0.0)) {
        throw DataError("ladder levels must be non-negative");
      }
    }
    if (texture_size < 64) {
      throw DataError("ladder texture size must be at least 64, got " +
                      std::to_string(texture_size));
    }
  }
};

/// One emitted ladder entry: image filename (relative to the output
/// directory) and its blur strength.
struct LadderEntry {
  std::string filename;
  double level = 0.0;
};

/// Generates the textures for one ladder without touching the filesystem:
/// entry (t, l) of the result is texture t blurred at levels[l], already
/// quantized to 8-bit. Texture t's random stream depends only on
/// (seed, t), so any subset is reproducible.
inline std::vector<std::vector<ImageU8>> make_blur_ladder(
    const BlurLadderSpec& spec) {
  spec.validate();
  std::vector<std::vector<ImageU8>> ladder(
      static_cast<std::size_t>(spec.count));
  for (int t = 0; t < spec.count; ++t) {
    DeterministicRng rng(spec.seed ^
                         (0x9E3779B97F4A7C15ULL *
                          static_cast<std::uint64_t>(t + 1)));
    const ImageF texture = make_texture(rng, spec.texture_size);
    const ImageU8 sharp = quantize_unit(texture);
    std::vector<ImageU8>& row = ladder[static_cast<std::size_t>(t)];
    row.reserve(spec.levels.size());
    for (double level : spec.levels) {
      if (level == 0.0) {
        row.push_back(sharp);
      } else {
        row.push_back(quantize_unit(
            apply_blur_level(texture, level, spec.family, spec.optics)));
      }
    }
  }
  return ladder;
}

}  // namespace focusqc
