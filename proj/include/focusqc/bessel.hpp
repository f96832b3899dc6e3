#pragma once

#include <cmath>
#include <cstdlib>

namespace focusqc {

// Zero-order Bessel function of the first kind.
//
// Power series for |x| < 12, Hankel asymptotic expansion beyond; both give
// relative error well under 1e-10 away from the function's roots (absolute
// error near them). The implementation only ever looks at |x|, so
// J0(-x) == J0(x) holds bit-exactly, which downstream even-symmetry
// guarantees rely on.
inline double bessel_j0(double x) {
  const double ax = std::abs(x);
  if (ax < 12.0) {
    // J0(x) = sum_k (-1)^k (x^2/4)^k / (k!)^2, term ratio -q/k^2.
    const double q = 0.25 * ax * ax;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 60; ++k) {
      term *= -q / (static_cast<double>(k) * k);
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
  }
  // Hankel expansion: J0(x) = sqrt(2/(pi x)) (P cos(chi) - Q sin(chi)),
  // chi = x - pi/4. Terms t_m = t_{m-1} * -(2m-1)^2 / (8 m x) feed P for
  // even m (sign (-1)^(m/2)) and Q for odd m (sign (-1)^((m-1)/2)); this
  // reproduces the classical coefficients -9/128 x^-2, -1/(8x), 75/1024
  // x^-3, ... exactly. The series is truncated where terms stop shrinking,
  // which is near-optimal for an asymptotic expansion.
  double p = 1.0;
  double q = 0.0;
  double term = 1.0;
  double prev = 1.0;
  for (int m = 1; m <= 40; ++m) {
    const double odd = 2.0 * m - 1.0;
    term *= -(odd * odd) / (8.0 * m * ax);
    if (std::abs(term) >= prev) break;  // divergent tail reached
    prev = std::abs(term);
    switch (m & 3) {
      case 0: p += term; break;   // i^m = +1
      case 1: q += term; break;   // i^m = +i
      case 2: p -= term; break;   // i^m = -1
      case 3: q -= term; break;   // i^m = -i
    }
    if (prev < 1e-17) break;
  }
  const double chi = ax - 0.785398163397448309616;  // x - pi/4
  return std::sqrt(0.636619772367581343076 / ax) *  // 2/pi = 0.63661...
         (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace focusqc
