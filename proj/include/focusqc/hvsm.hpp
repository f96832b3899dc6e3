#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "focusqc/errors.hpp"
#include "focusqc/filters.hpp"
#include "focusqc/io/atomic_file.hpp"
#include "focusqc/optics.hpp"

namespace focusqc {

// Deblur kernel: a single symmetric FIR filter assembled as a weighted sum
// of the even-derivative basis, whose frequency response tracks the
// inverse of the defocused PSF spectrum over the usable band.
struct HvsmKernel {
  std::vector<double> coefficients;  // weight per basis member, order 2n
  std::vector<double> taps;          // full-length, centered, symmetric
  double cutoff = 0.0;               // basis cutoff, rad/sample
  double fit_band_limit = 0.0;       // top of the fitted band, rad/sample
  double z_star = 0.0;               // depth the kernel compensates, levels
  double fit_residual = 0.0;         // relative l2 misfit over the band
  PsfModel optics;                   // optics the kernel was derived for

  int half_length() const { return static_cast<int>(taps.size() / 2); }

  double tap(int k) const {
    return taps[static_cast<std::size_t>(half_length() + k)];
  }

  std::vector<double> one_sided() const {
    const int half = half_length();
    std::vector<double> out(static_cast<std::size_t>(half) + 1);
    for (int k = 0; k <= half; ++k) out[static_cast<std::size_t>(k)] = tap(k);
    return out;
  }

  void validate() const {
    if (taps.empty() || taps.size() % 2 == 0) {
      throw DataError("kernel taps must be a non-empty odd-length sequence");
    }
    const int half = half_length();
    for (int k = 1; k <= half; ++k) {
      if (tap(k) != tap(-k)) {
        throw DataError("kernel taps violate symmetry at index " +
                        std::to_string(k));
      }
    }
    if (coefficients.empty()) {
      throw DataError("kernel must carry at least one basis coefficient");
    }
    if (!(fit_residual >= 0.0)) {
      throw DataError("kernel fit_residual must be non-negative");
    }
    if (!(cutoff > 0.0 && cutoff < M_PI)) {
      throw DataError("kernel cutoff must lie in (0, pi)");
    }
  }
};

struct CoefficientFit {
  std::vector<double> coefficients;
  double band_limit = 0.0;  // omega_t
  double residual = 0.0;    // relative l2 over the fitted band
};

// Fits sum_n c_n (-1)^n w^{2n} to the inverse PSF spectrum over the band
// where inversion is trustworthy.
//
// The band is the longest prefix of the frequency grid on which the
// inverse stays at or below instability_cap, further limited by
// band_limit_cap; a non-finite inverse inside that range means the PSF
// spectrum has a zero in band and is rejected outright. The least squares
// uses the ideal power basis (not the designed filters), with column
// scaling before the QR solve since w^14 spans many decades.
inline CoefficientFit fit_coefficients(const SampledSpectrum& inverse_spectrum,
                                       int order_count, double band_limit_cap,
                                       double instability_cap = 30.0) {
  const auto& freq = inverse_spectrum.frequencies;
  const auto& values = inverse_spectrum.values;
  if (freq.size() != values.size() || freq.size() < 2) {
    throw DataError("fit_coefficients: malformed spectrum");
  }
  if (freq.front() != 0.0 || std::abs(freq.back() - M_PI) > 1e-9) {
    throw DataError("fit_coefficients: spectrum must cover [0, pi]");
  }
  if (order_count < 1) {
    throw DataError("fit_coefficients: order_count must be >= 1");
  }
  if (!(band_limit_cap > 0.0)) {
    throw DataError("fit_coefficients: band_limit_cap must be positive");
  }

  std::size_t band_end = 0;  // inclusive index of the last in-band sample
  for (std::size_t i = 0; i < freq.size(); ++i) {
    if (freq[i] > band_limit_cap) break;
    if (!std::isfinite(values[i])) {
      throw DataError(
          "fit_coefficients: inverse spectrum is non-finite at omega = " +
          std::to_string(freq[i]) + " (spectrum has a zero in band)");
    }
    if (values[i] > instability_cap) break;
    band_end = i;
  }
  const auto rows = static_cast<Eigen::Index>(band_end + 1);
  if (rows < order_count) {
    throw DataError("fit_coefficients: fit band narrower than the basis");
  }

  Eigen::MatrixXd design(rows, order_count);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double omega = freq[static_cast<std::size_t>(i)];
    for (int n = 1; n <= order_count; ++n) {
      design(i, n - 1) = std::pow(-1.0, n) * std::pow(omega, 2 * n);
    }
    rhs(i) = values[static_cast<std::size_t>(i)];
  }
  Eigen::VectorXd column_scale(order_count);
  for (int n = 0; n < order_count; ++n) {
    const double s = design.col(n).cwiseAbs().maxCoeff();
    column_scale(n) = s > 0.0 ? s : 1.0;
    design.col(n) /= column_scale(n);
  }
  const Eigen::VectorXd scaled = design.colPivHouseholderQr().solve(rhs);
  const double misfit = (design * scaled - rhs).norm();
  const double scale = rhs.norm();

  CoefficientFit fit;
  fit.coefficients.resize(static_cast<std::size_t>(order_count));
  for (int n = 0; n < order_count; ++n) {
    fit.coefficients[static_cast<std::size_t>(n)] = scaled(n) / column_scale(n);
  }
  fit.band_limit = freq[band_end];
  fit.residual = scale > 0.0 ? misfit / scale : 0.0;
  return fit;
}

// Elementwise weighted sum of same-length basis filters. Kept separate
// from synthesize_kernel so the exact-combination invariant is testable on
// its own.
inline std::vector<double> combine_basis(
    const std::vector<double>& coefficients,
    const std::vector<DerivativeFilter>& bases) {
  if (coefficients.size() != bases.size() || bases.empty()) {
    throw DataError("combine_basis: need one coefficient per basis filter");
  }
  const std::size_t length = bases.front().taps.size();
  for (const auto& b : bases) {
    if (b.taps.size() != length) {
      throw DataError("combine_basis: basis filters differ in length");
    }
  }
  std::vector<double> taps(length, 0.0);
  for (std::size_t n = 0; n < bases.size(); ++n) {
    for (std::size_t j = 0; j < length; ++j) {
      taps[j] += coefficients[n] * bases[n].taps[j];
    }
  }
  return taps;
}

namespace detail {
constexpr int kFitGridPoints = 1024;
}  // namespace detail

// Builds the deblur kernel for the given optics at depth z_star: sample
// the PSF spectrum, invert it, fit the power-basis coefficients over the
// trustworthy band (capped at the basis cutoff), then realize the fit with
// the designed derivative filters. Fully deterministic.
inline HvsmKernel synthesize_kernel(const PsfModel& model, double z_star,
                                    int order_count = 7, double cutoff = 2.0,
                                    int half_length = 37) {
  model.validate();
  if (order_count < 1) {
    throw DataError("synthesize_kernel: order_count must be >= 1");
  }
  SampledSpectrum spectrum = psf_spectrum(model, z_star, model.pixel_pitch,
                                          detail::kFitGridPoints);
  SampledSpectrum inverse;
  inverse.frequencies = spectrum.frequencies;
  inverse.values.resize(spectrum.values.size());
  for (std::size_t i = 0; i < spectrum.values.size(); ++i) {
    inverse.values[i] = 1.0 / spectrum.values[i];
  }
  const CoefficientFit fit = fit_coefficients(inverse, order_count, cutoff);

  std::vector<DerivativeFilter> bases;
  bases.reserve(static_cast<std::size_t>(order_count));
  for (int n = 1; n <= order_count; ++n) {
    bases.push_back(design_derivative_filter(2 * n, cutoff, half_length));
  }

  HvsmKernel kernel;
  kernel.coefficients = fit.coefficients;
  kernel.taps = combine_basis(fit.coefficients, bases);
  kernel.cutoff = cutoff;
  kernel.fit_band_limit = fit.band_limit;
  kernel.z_star = z_star;
  kernel.fit_residual = fit.residual;
  kernel.optics = model;
  kernel.validate();
  return kernel;
}

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j,
                                           const char* name) {
  const auto it = j.find(name);
  if (it == j.end()) {
    throw DataError(std::string("kernel file missing field \"") + name + "\"");
  }
  return *it;
}

inline double require_number(const nlohmann::json& j, const char* name) {
  const auto& field = require_field(j, name);
  if (!field.is_number()) {
    throw DataError(std::string("kernel field \"") + name +
                    "\" must be a number");
  }
  return field.get<double>();
}

inline std::vector<double> require_number_array(const nlohmann::json& j,
                                                const char* name) {
  const auto& field = require_field(j, name);
  if (!field.is_array() || field.empty()) {
    throw DataError(std::string("kernel field \"") + name +
                    "\" must be a non-empty array");
  }
  std::vector<double> out;
  out.reserve(field.size());
  for (const auto& v : field) {
    if (!v.is_number()) {
      throw DataError(std::string("kernel field \"") + name +
                      "\" must contain only numbers");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace detail

inline void save_kernel(const HvsmKernel& kernel, const std::string& path) {
  kernel.validate();
  nlohmann::json j;
  j["schema_version"] = 1;
  j["coefficients"] = kernel.coefficients;
  j["taps"] = kernel.taps;
  j["cutoff"] = kernel.cutoff;
  j["fit_band_limit"] = kernel.fit_band_limit;
  j["z_star"] = kernel.z_star;
  j["fit_residual"] = kernel.fit_residual;
  j["optics"] = {{"na", kernel.optics.numerical_aperture},
                 {"wavelength_m", kernel.optics.wavelength},
                 {"refractive_index", kernel.optics.refractive_index},
                 {"pixel_pitch_m", kernel.optics.pixel_pitch}};
  write_file_atomic(path, j.dump(2) + "\n");
}

inline HvsmKernel load_kernel(const std::string& path) {
  const std::string content = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("kernel file " + path + " is not valid JSON: " + e.what());
  }
  const double schema = detail::require_number(j, "schema_version");
  if (schema != 1.0) {
    throw DataError("kernel file schema_version " + std::to_string(schema) +
                    " is not supported");
  }
  HvsmKernel kernel;
  kernel.coefficients = detail::require_number_array(j, "coefficients");
  kernel.taps = detail::require_number_array(j, "taps");
  kernel.cutoff = detail::require_number(j, "cutoff");
  kernel.fit_band_limit = detail::require_number(j, "fit_band_limit");
  kernel.z_star = detail::require_number(j, "z_star");
  kernel.fit_residual = detail::require_number(j, "fit_residual");
  const auto& optics = detail::require_field(j, "optics");
  if (!optics.is_object()) {
    throw DataError("kernel field \"optics\" must be an object");
  }
  kernel.optics.numerical_aperture = detail::require_number(optics, "na");
  kernel.optics.wavelength = detail::require_number(optics, "wavelength_m");
  kernel.optics.refractive_index =
      detail::require_number(optics, "refractive_index");
  kernel.optics.pixel_pitch = detail::require_number(optics, "pixel_pitch_m");
  kernel.validate();
  return kernel;
}

}  // namespace focusqc
