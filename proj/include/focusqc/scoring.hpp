#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "focusqc/convolve.hpp"
#include "focusqc/errors.hpp"
#include "focusqc/hvsm.hpp"
#include "focusqc/image.hpp"

namespace focusqc {

/// Knobs of the patch scorer.  The retention constants map a feature
/// quantile to the fraction of pixels kept for pooling; moment_order is
/// the central moment whose negative log becomes the score.
struct ScoringParams {
  int moment_order = 2;
  double retention_alpha = 0.25;
  double retention_beta = 60.0;
  double retention_gamma = 0.095;
  double retention_delta = 0.09;
  double percentile = 0.95;
  double log_floor = 1e-12;

  void validate() const {
    if (moment_order < 2 || moment_order % 2 != 0) {
      throw DataError("moment order must be an even integer >= 2, got " +
                      std::to_string(moment_order));
    }
    if (!(retention_alpha > 0.0) || !(retention_beta > 0.0)) {
      throw DataError("retention scale and slope must be positive");
    }
    if (!(percentile > 0.0) || !(percentile < 1.0)) {
      throw DataError("percentile must lie in (0, 1), got " +
                      std::to_string(percentile));
    }
    if (!(log_floor > 0.0)) {
      throw DataError("log floor must be positive, got " +
                      std::to_string(log_floor));
    }
  }
};

/// Result of scoring one patch.  Lower raw means sharper.
struct PatchScore {
  double raw = 0.0;
  long long n_retained = 0;
  double sigma95 = 0.0;
  bool degenerate = false;
};

/// Reusable buffers so repeated scoring (tile loops) does not reallocate.
struct ScoringScratch {
  ImageF gray;
  ImageF response_x;
  ImageF response_y;
  std::vector<double> positives;
  std::vector<double> pooled;
  std::vector<std::uint64_t> sort_keys;
  std::vector<std::uint64_t> sort_swap;
};

/// Fraction of pixels retained for pooling, as a function of the feature
/// quantile sigma: alpha*(1 - tanh(beta*(sigma - gamma))) + delta.
/// Always lies in (delta, 2*alpha + delta].
inline double retention_fraction(double sigma, const ScoringParams& params) {
  return params.retention_alpha *
             (1.0 - std::tanh(params.retention_beta *
                              (sigma - params.retention_gamma))) +
         params.retention_delta;
}

/// Converts an 8-bit image to a unit-range single-channel image, writing
/// into `out` (reused without reallocation when dimensions match).
/// Three channels combine with luma weights (0.299, 0.587, 0.114); one
/// channel scales by 1/255.
inline void to_grayscale_unit(const ImageU8& image, ImageF& out) {
  if (image.height <= 0 || image.width <= 0) {
    throw DataError("grayscale conversion needs a non-empty image");
  }
  if (out.height != image.height || out.width != image.width) {
    out.resize(image.height, image.width);
  }
  const std::size_t count =
      static_cast<std::size_t>(image.height) * image.width;
  if (image.channels == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      out.pixels[i] = static_cast<double>(image.pixels[i]) / 255.0;
    }
  } else if (image.channels == 3) {
    const std::uint8_t* p = image.pixels.data();
    for (std::size_t i = 0; i < count; ++i, p += 3) {
      out.pixels[i] =
          (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
    }
  } else {
    throw DataError("grayscale conversion expects 1 or 3 channels, got " +
                    std::to_string(image.channels));
  }
}

inline ImageF to_grayscale_unit(const ImageU8& image) {
  ImageF out;
  to_grayscale_unit(image, out);
  return out;
}

/// Filters the image with the deblur kernel along each axis: response_x
/// convolves every row, response_y every column, both with mirror
/// boundary handling.
inline void decompose(const ImageF& image, const HvsmKernel& kernel,
                      ImageF& response_x, ImageF& response_y) {
  const std::vector<double> taps = kernel.one_sided();
  const int support = static_cast<int>(taps.size());
  if (image.height < support || image.width < support) {
    throw DataError("patch " + std::to_string(image.height) + "x" +
                    std::to_string(image.width) +
                    " is smaller than the kernel support (" +
                    std::to_string(support) + ")");
  }
  convolve_rows_symmetric(image, taps, response_x);
  convolve_cols_symmetric(image, taps, response_y);
}

namespace detail {

/// Quantile with linear interpolation between order statistics at rank
/// q*(n-1).  Partially reorders `values`; the result depends only on the
/// multiset of values.
inline double interpolated_quantile(std::vector<double>& values, double q) {
  const std::size_t n = values.size();
  const double rank = q * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  std::nth_element(values.begin(), values.begin() + lo, values.end());
  const double below = values[lo];
  if (rank == static_cast<double>(lo) || lo + 1 == n) {
    return below;
  }
  const double above =
      *std::min_element(values.begin() + lo + 1, values.end());
  return below + (rank - static_cast<double>(lo)) * (above - below);
}

inline double integer_power(double base, int exponent) {
  double result = 1.0;
  for (int i = 0; i < exponent; ++i) result *= base;
  return result;
}

/// Sorts the first n values into descending order.  The values are
/// non-negative finite doubles, whose raw IEEE bit patterns order exactly
/// like the values themselves, so an LSD radix sort over the bits yields
/// the same sequence a comparison sort would -- in linear time, which is
/// what keeps large-patch scoring inside its runtime budget.
inline void sort_prefix_descending(std::vector<double>& values, std::size_t n,
                                   std::vector<std::uint64_t>& keys,
                                   std::vector<std::uint64_t>& swap) {
  if (n < 2048) {  // small inputs: the library sort is already cheap
    std::sort(values.begin(),
              values.begin() + static_cast<std::ptrdiff_t>(n),
              std::greater<double>());
    return;
  }
  keys.resize(n);
  swap.resize(n);
  std::memcpy(keys.data(), values.data(), n * sizeof(double));

  // 11-bit digits balance pass count against scatter locality: 2048
  // bucket streams stay cache-resident, unlike a 16-bit-digit sort.
  constexpr int kDigitBits = 11;
  constexpr std::size_t kBuckets = std::size_t{1} << kDigitBits;
  constexpr int kPasses = 6;
  static thread_local std::vector<std::uint32_t> histogram;
  histogram.assign(kPasses * kBuckets, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t key = keys[i];
    for (int pass = 0; pass < kPasses; ++pass) {
      ++histogram[static_cast<std::size_t>(pass) * kBuckets +
                  ((key >> (kDigitBits * pass)) & (kBuckets - 1))];
    }
  }

  std::uint64_t* src = keys.data();
  std::uint64_t* dst = swap.data();
  for (int pass = 0; pass < kPasses; ++pass) {
    std::uint32_t* counts =
        histogram.data() + static_cast<std::size_t>(pass) * kBuckets;
    const int shift = kDigitBits * pass;
    // A pass whose digit is constant across all keys moves nothing.
    if (counts[(src[0] >> shift) & (kBuckets - 1)] == n) continue;
    // Turn the counts into running start offsets, in place.
    std::uint32_t running = 0;
    for (std::size_t digit = 0; digit < kBuckets; ++digit) {
      const std::uint32_t count = counts[digit];
      counts[digit] = running;
      running += count;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t key = src[i];
      dst[counts[(key >> shift) & (kBuckets - 1)]++] = key;
    }
    std::swap(src, dst);
  }

  // src now holds the keys ascending; emit the doubles descending.
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = std::bit_cast<double>(src[n - 1 - i]);
  }
}

}  // namespace detail

/// Scores one grayscale unit-range patch.  See score_patch for the
/// contract; this overload skips the 8-bit conversion.
inline PatchScore score_patch_unit(const ImageF& image,
                                   const HvsmKernel& kernel,
                                   const ScoringParams& params = {},
                                   ScoringScratch* scratch = nullptr) {
  params.validate();
  if (image.height < 64 || image.width < 64) {
    throw DataError("patch " + std::to_string(image.height) + "x" +
                    std::to_string(image.width) +
                    " is below the 64-pixel minimum");
  }
  ScoringScratch local;
  ScoringScratch& s = scratch ? *scratch : local;
  decompose(image, kernel, s.response_x, s.response_y);

  const std::size_t count = image.pixels.size();
  // Two passes keep the buffer exactly as large as needed and make the
  // compaction store branch-free; the collected sequence is identical to
  // a filtered copy in scan order.
  std::size_t n_positive = 0;
  for (double v : s.response_x.pixels) n_positive += (v > 0.0) ? 1 : 0;
  for (double v : s.response_y.pixels) n_positive += (v > 0.0) ? 1 : 0;
  // One slack slot absorbs the unconditional store of trailing
  // non-positive values.
  s.positives.resize(n_positive + 1);
  {
    double* out = s.positives.data();
    std::size_t at = 0;
    for (double v : s.response_x.pixels) {
      out[at] = v;
      at += (v > 0.0) ? 1 : 0;
    }
    for (double v : s.response_y.pixels) {
      out[at] = v;
      at += (v > 0.0) ? 1 : 0;
    }
  }
  s.positives.resize(n_positive);

  PatchScore score;
  score.degenerate = s.positives.empty();
  score.sigma95 =
      score.degenerate
          ? 0.0
          : detail::interpolated_quantile(s.positives, params.percentile);

  const double fraction = retention_fraction(score.sigma95, params);
  long long keep = std::llround(fraction * static_cast<double>(count));
  keep = std::max<long long>(1,
                             std::min<long long>(static_cast<long long>(count),
                                                 keep));
  score.n_retained = keep;

  // Per-pixel pooling of the rectified axis responses: (sqrt(a)+sqrt(b))^2.
  s.pooled.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double rx = std::max(s.response_x.pixels[i], 0.0);
    const double ry = std::max(s.response_y.pixels[i], 0.0);
    const double root = std::sqrt(rx) + std::sqrt(ry);
    s.pooled[i] = root * root;
  }

  // Keep the largest pooled values; sorting the kept prefix fixes the
  // accumulation order so the score is a function of the value multiset
  // alone (exact transpose/flip invariance).
  const std::size_t kept = static_cast<std::size_t>(keep);
  std::nth_element(s.pooled.begin(), s.pooled.begin() + (kept - 1),
                   s.pooled.end(), std::greater<double>());
  detail::sort_prefix_descending(s.pooled, kept, s.sort_keys, s.sort_swap);

  double sum = 0.0;
  for (std::size_t i = 0; i < kept; ++i) sum += s.pooled[i];
  const double mean = sum / static_cast<double>(kept);
  double moment_sum = 0.0;
  for (std::size_t i = 0; i < kept; ++i) {
    moment_sum +=
        detail::integer_power(s.pooled[i] - mean, params.moment_order);
  }
  const double moment = moment_sum / static_cast<double>(kept);
  score.raw = -std::log(std::max(moment, params.log_floor));
  return score;
}

/// Scores one 8-bit patch (1 or 3 channels): grayscale conversion, axis
/// filtering, rectification, quantile-driven retention, pooled central
/// moment, and the negative-log score.  Deterministic; transpose leaves
/// the score bit-identical.
inline PatchScore score_patch(const ImageU8& image, const HvsmKernel& kernel,
                              const ScoringParams& params = {},
                              ScoringScratch* scratch = nullptr) {
  params.validate();
  if (image.height < 64 || image.width < 64) {
    throw DataError("patch " + std::to_string(image.height) + "x" +
                    std::to_string(image.width) +
                    " is below the 64-pixel minimum");
  }
  ScoringScratch local;
  ScoringScratch& s = scratch ? *scratch : local;
  to_grayscale_unit(image, s.gray);
  return score_patch_unit(s.gray, kernel, params, &s);
}

}  // namespace focusqc
