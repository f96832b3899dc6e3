#pragma once

// Independent reference implementations used to cross-check the library.
// Everything here favors transparency over speed: direct summation,
// integral representations, brute-force O(n^2) statistics. None of it
// shares code with the headers under test.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace oracle {

// J0 via its integral representation J0(x) = (1/pi) * int_0^pi cos(x sin t) dt.
// The integrand is analytic and even about both endpoints, so the composite
// trapezoid rule converges superexponentially; 4000 panels reaches machine
// precision for |x| up to a few hundred.
inline double bessel_j0(double x) {
  const int n = 4000;
  const double h = M_PI / n;
  double sum = 0.5 * (std::cos(0.0) + std::cos(x * std::sin(M_PI)));
  for (int i = 1; i < n; ++i) {
    sum += std::cos(x * std::sin(i * h));
  }
  return sum * h / M_PI;
}

// J1 via J1(x) = (1/pi) * int_0^pi cos(t - x sin t) dt, same scheme as above.
inline double bessel_j1(double x) {
  const int n = 4000;
  const double h = M_PI / n;
  double sum = 0.5 * (std::cos(0.0 - x * std::sin(0.0)) +
                      std::cos(M_PI - x * std::sin(M_PI)));
  for (int i = 1; i < n; ++i) {
    const double t = i * h;
    sum += std::cos(t - x * std::sin(t));
  }
  return sum * h / M_PI;
}

// Bisection root finder; requires a sign change on [lo, hi].
inline double bisect(const std::function<double(double)>& f, double lo,
                     double hi, double tol = 1e-13) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw std::invalid_argument("oracle::bisect: no sign change on bracket");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Composite trapezoid rule over explicit samples (possibly non-uniform).
inline double trapezoid(const std::vector<double>& xs,
                        const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw std::invalid_argument("oracle::trapezoid: bad sample arrays");
  }
  double acc = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    acc += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
  }
  return acc;
}

// DTFT magnitude of an even real sequence given one-sided, evaluated at a
// single frequency via the full complex two-sided sum.
inline double dtft_magnitude(const std::vector<double>& one_sided,
                             double omega) {
  std::complex<double> acc(0.0, 0.0);
  const int half = static_cast<int>(one_sided.size()) - 1;
  for (int m = -half; m <= half; ++m) {
    const double h = one_sided[static_cast<std::size_t>(std::abs(m))];
    acc += h * std::exp(std::complex<double>(0.0, -omega * m));
  }
  return std::abs(acc);
}

// Frequency response of a symmetric odd-length FIR filter given one-sided
// taps (h[0] center): H(w) = h0 + 2 * sum_k h_k cos(k w). Real-valued by
// symmetry; returned signed.
inline double symmetric_fir_response(const std::vector<double>& one_sided,
                                     double omega) {
  double acc = one_sided[0];
  for (std::size_t k = 1; k < one_sided.size(); ++k) {
    acc += 2.0 * one_sided[k] * std::cos(omega * static_cast<double>(k));
  }
  return acc;
}

// Direct 1-D convolution of a signal with a centered odd-length kernel under
// half-sample mirror extension: index p reflects to -1-p below 0 and to
// 2N-1-p above N-1 (applied repeatedly until in range).
inline std::vector<double> mirror_conv_1d(const std::vector<double>& signal,
                                          const std::vector<double>& kernel) {
  const int n = static_cast<int>(signal.size());
  const int half = static_cast<int>(kernel.size()) / 2;
  auto reflect = [n](int p) {
    while (p < 0 || p >= n) {
      if (p < 0) p = -1 - p;
      if (p >= n) p = 2 * n - 1 - p;
    }
    return p;
  };
  std::vector<double> out(signal.size());
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int t = -half; t <= half; ++t) {
      acc += kernel[static_cast<std::size_t>(t + half)] * signal[static_cast<std::size_t>(reflect(i + t))];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

// Linear-interpolation quantile matching the convention "rank q*(n-1) with
// fractional interpolation between order statistics".
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) {
    throw std::invalid_argument("oracle::quantile: empty input");
  }
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

// Pearson correlation, direct two-pass formula.
inline double pearson(const std::vector<double>& a,
                      const std::vector<double>& b) {
  const std::size_t n = a.size();
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  return num / std::sqrt(da * db);
}

// Fractional (average) ranks for Spearman correlation.
inline std::vector<double> fractional_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline double spearman(const std::vector<double>& a,
                       const std::vector<double>& b) {
  return pearson(fractional_ranks(a), fractional_ranks(b));
}

// Kendall tau-b by brute-force O(n^2) pair enumeration.
inline double kendall_tau_b(const std::vector<double>& a,
                            const std::vector<double>& b) {
  const std::size_t n = a.size();
  long long concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double da = a[i] - a[j];
      const double db = b[i] - b[j];
      if (da == 0.0 && db == 0.0) continue;
      if (da == 0.0) {
        ++ties_a;
      } else if (db == 0.0) {
        ++ties_b;
      } else if ((da > 0.0) == (db > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double n0 = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  long long pair_ties_a = 0, pair_ties_b = 0;
  // tau-b denominators count all tied pairs per variable, including joint ties.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (a[i] == a[j]) ++pair_ties_a;
      if (b[i] == b[j]) ++pair_ties_b;
    }
  }
  const double denom = std::sqrt((n0 - static_cast<double>(pair_ties_a)) *
                                 (n0 - static_cast<double>(pair_ties_b)));
  return static_cast<double>(concordant - discordant) / denom;
}

}  // namespace oracle
