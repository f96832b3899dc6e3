#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "focusqc/errors.hpp"
#include "focusqc/image.hpp"

namespace focusqc {

/// Maps an out-of-range index into [0, n) by half-sample symmetric
/// reflection: ... s[1] s[0] | s[0] s[1] ... s[n-1] | s[n-1] s[n-2] ...
/// Valid for single reflection only (|overhang| <= n).
inline int mirror_index(int p, int n) {
  if (p < 0) return -1 - p;
  if (p >= n) return 2 * n - 1 - p;
  return p;
}

namespace detail {

inline void check_symmetric_taps(const std::vector<double>& one_sided,
                                 int extent) {
  if (one_sided.empty()) {
    throw DataError("symmetric convolution needs at least one tap");
  }
  const int tap_count = static_cast<int>(one_sided.size());
  if (extent < tap_count) {
    throw DataError("extent " + std::to_string(extent) +
                    " is smaller than the filter support (" +
                    std::to_string(tap_count) + " one-sided taps)");
  }
}

}  // namespace detail

/// Convolves every row with the symmetric filter whose taps are
/// [h0, h1, ..., hL] (full kernel hL ... h1 h0 h1 ... hL), using mirror
/// boundary handling.  `dst` is resized to match `src`.
///
/// Each output element is accumulated in a fixed order -- h0 times the
/// center sample first, then tap pairs in ascending lag order -- so the
/// row pass and the column pass below produce bitwise-identical values on
/// transposed inputs.
inline void convolve_rows_symmetric(const ImageF& src,
                                    const std::vector<double>& one_sided,
                                    ImageF& dst) {
  detail::check_symmetric_taps(one_sided, src.width);
  const int w = src.width;
  const int half = static_cast<int>(one_sided.size()) - 1;
  if (dst.height != src.height || dst.width != src.width) {
    dst.resize(src.height, src.width);
  }
  std::vector<double> padded(static_cast<std::size_t>(w) + 2 * half);
  double* pad = padded.data() + half;
  const double h0 = one_sided[0];
  for (int y = 0; y < src.height; ++y) {
    const double* s = src.row(y);
    for (int p = -half; p < w + half; ++p) {
      pad[p] = s[mirror_index(p, w)];
    }
    double* out = dst.row(y);
    for (int x = 0; x < w; ++x) {
      out[x] = h0 * pad[x];
    }
    for (int k = 1; k <= half; ++k) {
      const double hk = one_sided[k];
      const double* left = pad - k;
      const double* right = pad + k;
      for (int x = 0; x < w; ++x) {
        out[x] += hk * (left[x] + right[x]);
      }
    }
  }
}

/// Column-wise counterpart of convolve_rows_symmetric; same filter, same
/// boundary rule, same per-element accumulation order.
inline void convolve_cols_symmetric(const ImageF& src,
                                    const std::vector<double>& one_sided,
                                    ImageF& dst) {
  detail::check_symmetric_taps(one_sided, src.height);
  const int w = src.width;
  const int h = src.height;
  const int half = static_cast<int>(one_sided.size()) - 1;
  if (dst.height != h || dst.width != w) {
    dst.resize(h, w);
  }
  const double h0 = one_sided[0];
  for (int y = 0; y < h; ++y) {
    const double* s = src.row(y);
    double* out = dst.row(y);
    for (int x = 0; x < w; ++x) {
      out[x] = h0 * s[x];
    }
    for (int k = 1; k <= half; ++k) {
      const double hk = one_sided[k];
      const double* up = src.row(mirror_index(y - k, h));
      const double* down = src.row(mirror_index(y + k, h));
      for (int x = 0; x < w; ++x) {
        out[x] += hk * (up[x] + down[x]);
      }
    }
  }
}

/// Separable blur: rows then columns with the same symmetric taps.
inline ImageF convolve_separable_symmetric(const ImageF& src,
                                           const std::vector<double>& one_sided) {
  ImageF tmp;
  ImageF out;
  convolve_rows_symmetric(src, one_sided, tmp);
  convolve_cols_symmetric(tmp, one_sided, out);
  return out;
}

}  // namespace focusqc
