#pragma once

// Accuracy-harness statistics: rank correlations, RMSE with an optional
// monotone logistic remapping, paired significance testing, and the
// acceptance-threshold sweep used to align tile scores with subjective
// slide ratings.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "focusqc/errors.hpp"

namespace focusqc {

struct PairedSamples {
  std::vector<double> predictions;
  std::vector<double> truths;

  void validate(std::size_t min_n) const {
    if (predictions.size() != truths.size()) {
      throw DataError("paired samples must have equal length");
    }
    if (predictions.size() < min_n) {
      throw DataError("paired samples need at least " +
                      std::to_string(min_n) + " entries, got " +
                      std::to_string(predictions.size()));
    }
    for (double v : predictions) {
      if (!std::isfinite(v)) throw DataError("non-finite prediction value");
    }
    for (double v : truths) {
      if (!std::isfinite(v)) throw DataError("non-finite truth value");
    }
  }
};

struct CorrelationReport {
  double plcc = 0.0;
  double srcc = 0.0;
  double krcc = 0.0;
  double rmse = 0.0;
  long long n = 0;
  bool logistic_fitted = false;
};

namespace detail {

inline double clamp_correlation(double r) {
  return std::min(1.0, std::max(-1.0, r));
}

// Pearson correlation with a caller-supplied message for the degenerate
// (zero-variance) case, shared by plcc and srcc.
inline double pearson(const std::vector<double>& x,
                      const std::vector<double>& y,
                      const char* zero_variance_message) {
  const std::size_t n = x.size();
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw DataError(zero_variance_message);
  return clamp_correlation(sxy / std::sqrt(sxx * syy));
}

// Fractional ranks (1-based); tied values share the average of the ranks
// they would occupy.
inline std::vector<double> fractional_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && v[order[j]] == v[order[i]]) ++j;
    const double average = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = average;
    i = j;
  }
  return ranks;
}

// Counts pairs i < j with values[i] > values[j] (strict inversions) by
// merge sort; values is sorted in place.
inline long long count_inversions(std::vector<double>& values,
                                  std::vector<double>& scratch,
                                  std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  long long inversions = count_inversions(values, scratch, lo, mid) +
                         count_inversions(values, scratch, mid, hi);
  std::size_t a = lo;
  std::size_t b = mid;
  std::size_t out = lo;
  while (a < mid && b < hi) {
    if (values[b] < values[a]) {
      inversions += static_cast<long long>(mid - a);
      scratch[out++] = values[b++];
    } else {
      scratch[out++] = values[a++];
    }
  }
  while (a < mid) scratch[out++] = values[a++];
  while (b < hi) scratch[out++] = values[b++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
            scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            values.begin() + static_cast<std::ptrdiff_t>(lo));
  return inversions;
}

// Regularized incomplete beta function I_x(a, b) by Lentz's continued
// fraction, with the symmetry flip for fast convergence.
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  if (x > (a + 1.0) / (a + b + 2.0)) {
    return 1.0 - incomplete_beta(b, a, 1.0 - x);
  }
  const double log_front = a * std::log(x) + b * std::log1p(-x) -
                           std::log(a) -
                           (std::lgamma(a) + std::lgamma(b) -
                            std::lgamma(a + b));
  const double tiny = 1e-300;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const double dm = static_cast<double>(m);
    double numerator = dm * (b - dm) * x / ((a + 2.0 * dm - 1.0) * (a + 2.0 * dm));
    d = 1.0 + numerator * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + numerator / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    numerator = -(a + dm) * (a + b + dm) * x /
                ((a + 2.0 * dm) * (a + 2.0 * dm + 1.0));
    d = 1.0 + numerator * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + numerator / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(log_front) * h;
}

// CDF of Student's t with `df` degrees of freedom.
inline double student_t_cdf(double t, double df) {
  const double x = df / (df + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

inline double stable_sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

}  // namespace detail

// Pearson linear correlation. Requires n >= 3 and nonzero variance in both
// sequences.
inline double plcc(const PairedSamples& s) {
  s.validate(3);
  return detail::pearson(s.predictions, s.truths,
                         "plcc is undefined for zero-variance input");
}

// Spearman rank correlation: Pearson correlation of fractional ranks with
// average ranks for ties. Requires n >= 3; errors on an all-tied sequence.
inline double srcc(const PairedSamples& s) {
  s.validate(3);
  const std::vector<double> rp = detail::fractional_ranks(s.predictions);
  const std::vector<double> rt = detail::fractional_ranks(s.truths);
  return detail::pearson(rp, rt, "srcc is undefined for an all-tied sequence");
}

// Kendall tau-b (tie corrected) computed in O(n log n): concordant minus
// discordant pairs via merge-sort inversion counting, with integer tie
// counts feeding the same closed-form expression a brute-force pair
// enumeration would use, so the two agree bit for bit.
inline double krcc(const PairedSamples& s) {
  s.validate(3);
  const std::vector<double>& x = s.predictions;
  const std::vector<double>& y = s.truths;
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });

  const long long n0 = static_cast<long long>(n) *
                       static_cast<long long>(n - 1) / 2;
  long long ties_x = 0;
  long long ties_both = 0;
  {
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i + 1;
      while (j < n && x[order[j]] == x[order[i]]) ++j;
      const long long t = static_cast<long long>(j - i);
      ties_x += t * (t - 1) / 2;
      std::size_t a = i;
      while (a < j) {
        std::size_t b = a + 1;
        while (b < j && y[order[b]] == y[order[a]]) ++b;
        const long long u = static_cast<long long>(b - a);
        ties_both += u * (u - 1) / 2;
        a = b;
      }
      i = j;
    }
  }
  long long ties_y = 0;
  {
    std::vector<double> sorted_y = y;
    std::sort(sorted_y.begin(), sorted_y.end());
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i + 1;
      while (j < n && sorted_y[j] == sorted_y[i]) ++j;
      const long long t = static_cast<long long>(j - i);
      ties_y += t * (t - 1) / 2;
      i = j;
    }
  }
  if (ties_x == n0 || ties_y == n0) {
    throw DataError("krcc is undefined for an all-tied sequence");
  }

  std::vector<double> y_in_x_order(n);
  for (std::size_t i = 0; i < n; ++i) y_in_x_order[i] = y[order[i]];
  std::vector<double> scratch(n);
  const long long discordant =
      detail::count_inversions(y_in_x_order, scratch, 0, n);
  const long long numerator = n0 - ties_x - ties_y + ties_both -
                              2 * discordant;
  return static_cast<double>(numerator) /
         std::sqrt(static_cast<double>(n0 - ties_x) *
                   static_cast<double>(n0 - ties_y));
}

inline double rmse(const PairedSamples& s) {
  s.validate(1);
  double sum = 0.0;
  for (std::size_t i = 0; i < s.predictions.size(); ++i) {
    const double d = s.predictions[i] - s.truths[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(s.predictions.size()));
}

struct LogisticFitResult {
  double rmse = 0.0;
  double plcc_after_fit = 0.0;
  // True when the logistic remapping was actually applied.
  bool logistic_fitted = false;
  // True when a requested logistic fit could not be applied (degenerate
  // input or non-convergence) and raw values were reported instead.
  bool fallback = false;
};

namespace detail {

struct LogisticState {
  Eigen::Vector2d coef;   // model = coef[0] + coef[1] * g
  Eigen::VectorXd g;      // sigmoid values
  Eigen::MatrixXd q;      // thin Q of [1, g]
  Eigen::VectorXd residual;
  double cost = 0.0;
};

inline LogisticState logistic_linear_solve(const Eigen::VectorXd& pred,
                                           const Eigen::VectorXd& truth,
                                           double b3, double b4) {
  const Eigen::Index n = pred.size();
  LogisticState st;
  st.g.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    st.g(i) = stable_sigmoid((pred(i) - b3) / b4);
  }
  Eigen::MatrixXd phi(n, 2);
  phi.col(0).setOnes();
  phi.col(1) = st.g;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(phi);
  st.coef = qr.solve(truth);
  st.q = qr.householderQ() * Eigen::MatrixXd::Identity(n, 2);
  st.residual = phi * st.coef - truth;
  st.cost = st.residual.squaredNorm();
  return st;
}

}  // namespace detail

// RMSE (and Pearson correlation) of predictions against truths, optionally
// after remapping predictions through a monotone four-parameter logistic
// fitted by damped Gauss-Newton least squares. The two curve-placement
// parameters are initialized from the data range (center at the median
// prediction, width a quarter of the prediction range) and the two level
// parameters are re-solved linearly at every step, which keeps the search
// two-dimensional and lets near-affine relationships converge.
inline LogisticFitResult rmse_after_fit(const PairedSamples& s,
                                        bool use_logistic) {
  s.validate(use_logistic ? 5 : 1);
  const std::size_t n = s.predictions.size();

  const auto raw_result = [&](bool requested_logistic) {
    LogisticFitResult out;
    out.rmse = rmse(s);
    out.logistic_fitted = false;
    out.fallback = requested_logistic;
    try {
      out.plcc_after_fit = detail::pearson(
          s.predictions, s.truths, "degenerate correlation");
    } catch (const DataError&) {
      out.plcc_after_fit = 0.0;
      out.fallback = true;
    }
    return out;
  };

  if (!use_logistic) return raw_result(false);

  const auto [lo_it, hi_it] =
      std::minmax_element(s.predictions.begin(), s.predictions.end());
  const double pred_range = *hi_it - *lo_it;
  if (pred_range <= 0.0) return raw_result(true);

  Eigen::VectorXd pred(static_cast<Eigen::Index>(n));
  Eigen::VectorXd truth(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    pred(static_cast<Eigen::Index>(i)) = s.predictions[i];
    truth(static_cast<Eigen::Index>(i)) = s.truths[i];
  }
  std::vector<double> sorted_pred = s.predictions;
  std::nth_element(sorted_pred.begin(), sorted_pred.begin() + n / 2,
                   sorted_pred.end());
  double b3 = sorted_pred[n / 2];
  double b4 = pred_range / 4.0;

  detail::LogisticState st = detail::logistic_linear_solve(pred, truth, b3, b4);
  double lambda = 1e-3;
  bool converged = false;
  bool progressing = true;
  for (int iteration = 0; iteration < 200 && progressing && !converged;
       ++iteration) {
    Eigen::VectorXd gp = st.g.array() * (1.0 - st.g.array());
    Eigen::VectorXd u = (pred.array() - b3) / b4;
    Eigen::MatrixXd jac(pred.size(), 2);
    jac.col(0) = -(st.coef(1) / b4) * gp;
    jac.col(1) = -(st.coef(1) / b4) * (gp.array() * u.array()).matrix();
    // Project out what the linear level parameters would re-absorb, so the
    // step targets genuine curve-shape change (variable projection).
    jac -= st.q * (st.q.transpose() * jac);
    const Eigen::Matrix2d normal = jac.transpose() * jac;
    const Eigen::Vector2d gradient = jac.transpose() * st.residual;
    progressing = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::Matrix2d damped = normal;
      damped(0, 0) += lambda * std::max(normal(0, 0), 1e-300);
      damped(1, 1) += lambda * std::max(normal(1, 1), 1e-300);
      const Eigen::Vector2d delta = damped.ldlt().solve(-gradient);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const double nb3 = b3 + delta(0);
      const double nb4 = b4 + delta(1);
      if (std::fabs(nb4) < 1e-9 * pred_range) {
        lambda *= 10.0;
        continue;
      }
      detail::LogisticState next =
          detail::logistic_linear_solve(pred, truth, nb3, nb4);
      if (next.cost <= st.cost) {
        const double rel_step =
            std::max(std::fabs(delta(0)) / std::max(std::fabs(b3), 1e-30),
                     std::fabs(delta(1)) / std::max(std::fabs(b4), 1e-30));
        b3 = nb3;
        b4 = nb4;
        st = std::move(next);
        lambda = std::max(lambda * 0.1, 1e-12);
        progressing = true;
        if (rel_step < 1e-11) converged = true;
        break;
      }
      lambda *= 10.0;
    }
  }
  // A fully damped-out step means the gradient is negligible: that is a
  // stationary point, not a failure. Only an exhausted iteration budget
  // counts as non-convergence.
  if (!converged && progressing) return raw_result(true);

  LogisticFitResult out;
  out.rmse = std::sqrt(st.cost / static_cast<double>(n));
  out.logistic_fitted = true;
  out.fallback = false;
  std::vector<double> mapped(n);
  for (std::size_t i = 0; i < n; ++i) {
    mapped[i] = st.coef(0) +
                st.coef(1) * st.g(static_cast<Eigen::Index>(i));
  }
  try {
    out.plcc_after_fit =
        detail::pearson(mapped, s.truths, "degenerate correlation");
  } catch (const DataError&) {
    out.plcc_after_fit = 0.0;
    out.fallback = true;
  }
  return out;
}

struct SignificanceResult {
  int verdict = 0;  // +1: method A significantly better, -1: worse, 0: tie
  bool degenerate = false;
};

// Paired one-sided t-test on per-item squared-error differences at the 5%
// level. Input vectors hold per-item residuals of the two methods on the
// same items.
inline SignificanceResult significance_test(const std::vector<double>& a,
                                            const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw DataError("significance test requires equal-length residual sets");
  }
  if (a.size() < 10) {
    throw DataError("significance test requires at least 10 paired items");
  }
  const std::size_t n = a.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) {
      throw DataError("non-finite residual value");
    }
    // factored form of a^2 - b^2; identical residuals give an exact zero
    diff[i] = (a[i] - b[i]) * (a[i] + b[i]);
  }
  double mean = 0.0;
  for (double d : diff) mean += d;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double d : diff) {
    const double c = d - mean;
    ss += c * c;
  }
  SignificanceResult result;
  if (ss <= 0.0) {
    // Zero-variance differences: no t statistic exists. A nonzero constant
    // difference still has an unambiguous direction (the t statistic is
    // unbounded in the limit), so only the all-zero case stays undecided.
    result.degenerate = true;
    if (mean < 0.0) result.verdict = +1;
    if (mean > 0.0) result.verdict = -1;
    return result;
  }
  const double stderr_mean =
      std::sqrt(ss / static_cast<double>(n - 1)) /
      std::sqrt(static_cast<double>(n));
  const double t = mean / stderr_mean;
  const double df = static_cast<double>(n - 1);
  const double p_lower = detail::student_t_cdf(t, df);
  if (p_lower <= 0.05) {
    result.verdict = +1;  // A's squared errors significantly smaller
  } else if (1.0 - p_lower <= 0.05) {
    result.verdict = -1;
  }
  return result;
}

struct SweepResult {
  double best_threshold = 0.0;
  std::vector<double> thresholds;
  // Pearson correlation of per-slide acceptance ratios with the subjective
  // ratios at each threshold; NaN where the objective ratios are constant.
  std::vector<double> plcc_curve;
};

// Sweeps candidate thresholds: at each one, every slide's objective
// acceptance ratio is the fraction of its tile scores at or below the
// threshold, and the curve records the Pearson correlation of those ratios
// with the subjective ones. Returns the argmax (ties -> smallest).
inline SweepResult threshold_sweep(
    const std::vector<std::vector<double>>& slide_scores,
    const std::vector<double>& subjective_ratios,
    const std::vector<double>& grid) {
  if (slide_scores.size() < 10) {
    throw DataError("threshold sweep requires at least 10 slides");
  }
  if (subjective_ratios.size() != slide_scores.size()) {
    throw DataError("one subjective ratio per slide is required");
  }
  if (grid.empty()) throw DataError("threshold grid is empty");
  for (const std::vector<double>& tile_scores : slide_scores) {
    if (tile_scores.empty()) throw DataError("slide with no tile scores");
  }
  {
    double mean = 0.0;
    for (double v : subjective_ratios) {
      if (!std::isfinite(v)) throw DataError("non-finite subjective ratio");
      mean += v;
    }
    mean /= static_cast<double>(subjective_ratios.size());
    double ss = 0.0;
    for (double v : subjective_ratios) ss += (v - mean) * (v - mean);
    if (ss <= 0.0) {
      throw DataError("subjective ratios have zero variance");
    }
  }

  SweepResult result;
  result.thresholds = grid;
  result.plcc_curve.reserve(grid.size());
  std::vector<double> ratios(slide_scores.size());
  bool have_best = false;
  double best_value = 0.0;
  for (double threshold : grid) {
    if (!std::isfinite(threshold)) {
      throw DataError("non-finite threshold in grid");
    }
    for (std::size_t i = 0; i < slide_scores.size(); ++i) {
      const std::vector<double>& tile_scores = slide_scores[i];
      std::size_t accepted = 0;
      for (double score : tile_scores) {
        if (score <= threshold) ++accepted;
      }
      ratios[i] = static_cast<double>(accepted) /
                  static_cast<double>(tile_scores.size());
    }
    double value = std::numeric_limits<double>::quiet_NaN();
    try {
      value = detail::pearson(ratios, subjective_ratios,
                              "constant objective ratios");
    } catch (const DataError&) {
      // Thresholds below or above every score give constant ratios; such
      // points stay NaN in the curve and never win the argmax.
    }
    result.plcc_curve.push_back(value);
    if (std::isfinite(value) && (!have_best || value > best_value)) {
      have_best = true;
      best_value = value;
      result.best_threshold = threshold;
    }
  }
  if (!have_best) {
    throw DataError(
        "threshold sweep found no threshold with non-constant ratios");
  }
  return result;
}

// Table-style evaluation summary: SRCC/KRCC are always computed on raw
// values; PLCC and RMSE optionally go through the logistic remapping.
inline CorrelationReport evaluate_pairs(const PairedSamples& s,
                                        bool use_logistic) {
  s.validate(3);
  CorrelationReport report;
  report.n = static_cast<long long>(s.predictions.size());
  report.srcc = srcc(s);
  report.krcc = krcc(s);
  const LogisticFitResult fit = rmse_after_fit(s, use_logistic);
  report.plcc = fit.plcc_after_fit;
  report.rmse = fit.rmse;
  report.logistic_fitted = fit.logistic_fitted;
  return report;
}

}  // namespace focusqc
