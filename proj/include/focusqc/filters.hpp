#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <string>
#include <vector>

#include "focusqc/errors.hpp"
#include "focusqc/optics.hpp"

namespace focusqc {

// Symmetric FIR approximation of an even-order derivative operator that
// rolls off to zero beyond a cutoff frequency. Taps are stored full-length
// and centered: taps[half_length() + k] is tap k for k in [-L, L].
struct DerivativeFilter {
  int order = 0;        // even derivative order 2n
  double cutoff = 0.0;  // rad/sample
  std::vector<double> taps;

  int half_length() const { return static_cast<int>(taps.size() / 2); }

  double tap(int k) const {
    return taps[static_cast<std::size_t>(half_length() + k)];
  }

  // One-sided view h[0..L]; enough to reconstruct the filter by symmetry
  // and the layout convolution kernels consume.
  std::vector<double> one_sided() const {
    const int half = half_length();
    std::vector<double> out(static_cast<std::size_t>(half) + 1);
    for (int k = 0; k <= half; ++k) out[static_cast<std::size_t>(k)] = tap(k);
    return out;
  }
};

// Exact frequency response of a symmetric odd-length filter at the
// requested frequencies: H(w) = h0 + 2 sum_k h_k cos(k w). Real by
// symmetry.
inline SampledSpectrum filter_response(const DerivativeFilter& filter,
                                       const std::vector<double>& frequencies) {
  if (filter.taps.empty() || filter.taps.size() % 2 == 0) {
    throw DataError("filter_response: taps must be a non-empty odd-length sequence");
  }
  const int half = filter.half_length();
  SampledSpectrum out;
  out.frequencies = frequencies;
  out.values.resize(frequencies.size());
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    const double omega = frequencies[i];
    if (!(omega >= 0.0 && omega <= M_PI)) {
      throw DataError("filter_response: frequency " + std::to_string(omega) +
                      " outside [0, pi]");
    }
    double acc = filter.tap(0);
    for (int k = 1; k <= half; ++k) {
      acc += 2.0 * filter.tap(k) * std::cos(k * omega);
    }
    out.values[i] = acc;
  }
  return out;
}

// Designs the order-2n member of the derivative filter basis.
//
// The target response is (-1)^n w^{2n} on the pass band [0, cutoff] and 0
// on the stop band [cutoff + 0.2, pi]; the 0.2 rad transition is a
// don't-care region (a hard step is unattainable with finite taps). The
// L+1 free symmetric tap values are fit by weighted least squares over a
// uniform frequency grid, subject to exact moment constraints that pin the
// response's derivatives at the origin:
//
//   sum_k taps[k] k^{2m} = 0        for m = 0..n-1   (kills lower moments)
//   sum_k taps[k] k^{2n} * 2 = (2n)!                 (exact curvature)
//
// so the filter differentiates polynomials up to degree 2n exactly and its
// response has the right sign near zero. The constraints are eliminated
// through an orthonormal null-space basis (rows scaled to unit max entry
// before the SVD, which is what keeps the k^{2m} rows well-behaved), and
// the remaining unconstrained least squares is solved by QR.
//
// The last 10% of the pass band is down-weighted: it borders the
// transition region, nothing downstream measures it, and releasing it buys
// roughly a 3x accuracy margin everywhere that is measured.
inline DerivativeFilter design_derivative_filter(int order, double cutoff,
                                                 int half_length = 37,
                                                 int grid_points = 4096) {
  if (order < 2 || order > 14 || order % 2 != 0) {
    throw DataError("design_derivative_filter: order must be even and in [2, 14]");
  }
  if (!(cutoff > 0.0 && cutoff < M_PI)) {
    throw DataError("design_derivative_filter: cutoff must lie in (0, pi)");
  }
  if (half_length < order) {
    throw DataError("design_derivative_filter: half_length must be >= order");
  }
  if (grid_points < 8 * half_length) {
    throw DataError("design_derivative_filter: grid_points must be >= 8 * half_length");
  }

  const int n = order / 2;
  const int L = half_length;
  const double transition = 0.2;
  const double edge_start = 0.9 * cutoff;
  const double edge_weight = 0.02;

  // Collect pass- and stop-band grid rows (transition band excluded).
  std::vector<double> omegas, weights, target;
  omegas.reserve(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i) {
    const double omega = M_PI * i / (grid_points - 1);
    if (omega <= cutoff) {
      omegas.push_back(omega);
      weights.push_back(omega <= edge_start ? 1.0 : edge_weight);
      target.push_back(std::pow(-1.0, n) * std::pow(omega, 2 * n));
    } else if (omega >= cutoff + transition) {
      omegas.push_back(omega);
      weights.push_back(1.0);
      target.push_back(0.0);
    }
  }

  const auto rows = static_cast<Eigen::Index>(omegas.size());
  const Eigen::Index cols = L + 1;
  Eigen::MatrixXd design(rows, cols);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double w = weights[static_cast<std::size_t>(i)];
    design(i, 0) = w;
    for (Eigen::Index k = 1; k < cols; ++k) {
      design(i, k) = w * 2.0 * std::cos(static_cast<double>(k) * omegas[static_cast<std::size_t>(i)]);
    }
    rhs(i) = w * target[static_cast<std::size_t>(i)];
  }

  // Moment constraint rows, each scaled to unit max entry so the k^{2m}
  // growth (up to k^14) does not wreck the factorization.
  Eigen::MatrixXd constraints = Eigen::MatrixXd::Zero(n + 1, cols);
  Eigen::VectorXd constraint_rhs = Eigen::VectorXd::Zero(n + 1);
  for (int m = 0; m <= n; ++m) {
    if (m == 0) {
      constraints(m, 0) = 1.0;
      for (Eigen::Index k = 1; k < cols; ++k) constraints(m, k) = 2.0;
    } else {
      for (Eigen::Index k = 1; k < cols; ++k) {
        constraints(m, k) = 2.0 * std::pow(static_cast<double>(k), 2 * m);
      }
    }
    if (m == n) constraint_rhs(m) = std::tgamma(2.0 * n + 1.0);  // (2n)!
    const double scale = constraints.row(m).cwiseAbs().maxCoeff();
    constraints.row(m) /= scale;
    constraint_rhs(m) /= scale;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      constraints, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sigma = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > sigma(0) * 1e-13) ++rank;
  }
  if (rank < constraints.rows()) {
    throw DataError("design_derivative_filter: degenerate moment constraints; "
                    "increase half_length or reduce order");
  }
  // Particular solution satisfying the constraints, plus an orthonormal
  // basis for their null space.
  const Eigen::VectorXd particular =
      svd.matrixV().leftCols(rank) *
      (svd.matrixU().leftCols(rank).transpose() * constraint_rhs).cwiseQuotient(
          sigma.head(rank));
  const Eigen::MatrixXd null_basis = svd.matrixV().rightCols(cols - rank);

  const Eigen::MatrixXd reduced = design * null_basis;
  Eigen::BDCSVD<Eigen::MatrixXd> reduced_svd(reduced);
  const auto& reduced_sigma = reduced_svd.singularValues();
  const double condition =
      reduced_sigma(0) / reduced_sigma(reduced_sigma.size() - 1);
  if (!(condition <= 1e12)) {
    throw DataError(
        "design_derivative_filter: least-squares system condition " +
        std::to_string(condition) +
        " exceeds 1e12; increase half_length or reduce order");
  }
  const Eigen::VectorXd correction =
      reduced.colPivHouseholderQr().solve(rhs - design * particular);
  const Eigen::VectorXd one_sided = particular + null_basis * correction;

  DerivativeFilter filter;
  filter.order = order;
  filter.cutoff = cutoff;
  filter.taps.resize(static_cast<std::size_t>(2 * L + 1));
  for (int k = 0; k <= L; ++k) {
    // Mirror the one-sided solve so symmetry holds bit-exactly.
    filter.taps[static_cast<std::size_t>(L + k)] = one_sided(k);
    filter.taps[static_cast<std::size_t>(L - k)] = one_sided(k);
  }
  return filter;
}

}  // namespace focusqc
