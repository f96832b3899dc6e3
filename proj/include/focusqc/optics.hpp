#pragma once

#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "focusqc/bessel.hpp"
#include "focusqc/errors.hpp"
#include "focusqc/quadrature.hpp"

namespace focusqc {

// Optical parameters of the defocus PSF
//
//   h_PSF(r, z) = | C * Int_0^1 J0(k (NA/n) r rho) e^{-(i/2) k rho^2 zd (NA/n)^2} rho drho |^2
//
// where k = 2 pi / wavelength and zd is the physical defocus distance.
// The z argument of the functions below is a dimensionless focus level
// (the unit used by scanners' focus ladders); one level corresponds to
// depth_step meters of physical defocus, zd = z * depth_step. The default
// step of 0.33 um places the synthesis design point z* = 4 in the regime
// where the inverse in-band spectrum peaks in the low twenties, below the
// fitting instability cap of 30.
struct PsfModel {
  double numerical_aperture = 0.75;
  double refractive_index = 1.0;
  double wavelength = 550e-9;        // meters
  double normalization = 2.0;        // C; 2 makes the in-focus peak exactly 1
  int quadrature_nodes = 128;
  double pixel_pitch = 0.25e-6;      // meters per sample at scan resolution
  double depth_step = 0.33e-6;       // meters of defocus per focus level

  double wavenumber() const { return 2.0 * M_PI / wavelength; }

  // Phase coefficient beta in exp(-i beta z rho^2) for z in focus levels.
  double defocus_phase_scale() const {
    const double na_ratio = numerical_aperture / refractive_index;
    return 0.5 * wavenumber() * na_ratio * na_ratio * depth_step;
  }

  void validate() const {
    if (!(numerical_aperture > 0.0) ||
        numerical_aperture > refractive_index) {
      throw DataError("PsfModel: require 0 < numerical_aperture <= refractive_index");
    }
    if (!(wavelength > 0.0)) throw DataError("PsfModel: wavelength must be positive");
    if (quadrature_nodes < 16) throw DataError("PsfModel: quadrature_nodes must be >= 16");
    if (!(pixel_pitch > 0.0)) throw DataError("PsfModel: pixel_pitch must be positive");
    if (!(depth_step > 0.0)) throw DataError("PsfModel: depth_step must be positive");
  }
};

// Magnitude spectrum sampled on an ascending frequency grid (rad/sample).
struct SampledSpectrum {
  std::vector<double> frequencies;
  std::vector<double> values;
};

// PSF intensity at radial distance r (meters) and focus level z.
//
// Fixed-order Gauss-Legendre quadrature over the pupil coordinate.
// Evenness in both arguments is exact: only |r| and |z| enter the
// computation (the integrand conjugates under z -> -z, which leaves the
// squared modulus untouched, so the real/imaginary sums are built from
// |z| directly).
inline double psf_value(const PsfModel& model, double r, double z) {
  model.validate();
  const double a = model.wavenumber() *
                   (model.numerical_aperture / model.refractive_index) *
                   std::abs(r);
  const double beta_z = model.defocus_phase_scale() * std::abs(z);
  const GaussLegendreRule& rule = gauss_legendre(model.quadrature_nodes);
  double re = 0.0;
  double im = 0.0;
  for (int i = 0; i < model.quadrature_nodes; ++i) {
    // Map node from [-1, 1] to rho in [0, 1].
    const double rho = 0.5 * (rule.nodes[i] + 1.0);
    const double w = 0.5 * rule.weights[i];
    const double phase = beta_z * rho * rho;
    const double f = w * bessel_j0(a * rho) * rho;
    re += f * std::cos(phase);
    im += f * std::sin(phase);
  }
  const double c = model.normalization;
  return c * c * (re * re + im * im);
}

// Uniform sampling of the PSF on r in [-r_max, r_max]; odd sample count so
// r = 0 is on the grid. Returns (r, value) pairs.
inline std::vector<std::pair<double, double>> psf_radial_profile(
    const PsfModel& model, double z, double r_max, int samples) {
  model.validate();
  if (!(r_max > 0.0)) throw DataError("psf_radial_profile: r_max must be positive");
  if (samples < 3) throw DataError("psf_radial_profile: need at least 3 samples");
  if (samples % 2 == 0) {
    throw DataError("psf_radial_profile: sample count must be odd so r = 0 is included");
  }
  std::vector<std::pair<double, double>> profile(samples);
  const int half = samples / 2;
  for (int i = 0; i < samples; ++i) {
    const double r = (i - half) * (r_max / half);
    profile[i] = {r, psf_value(model, r, z)};
  }
  return profile;
}

namespace detail {

// Half-width, in samples, of the internal profile used for spectra. The
// z = 8 PSF at the default optics has decayed to ~1e-6 of its peak well
// inside this radius, so the DTFT of the truncated profile is accurate.
inline constexpr int kSpectrumProfileHalfWidth = 128;

}  // namespace detail

// Normalized DTFT magnitude of an even sequence given by its one-sided
// taps (taps[m] = h[m] = h[-m]) on a uniform grid over [0, pi] rad/sample.
// The magnitude at omega = 0 is scaled to 1. Direct summation (not FFT)
// so the grid is arbitrary and exact; an even sequence has a real DTFT,
// so the sum reduces to cosines.
inline SampledSpectrum dtft_spectrum(const std::vector<double>& one_sided_taps,
                                     int grid) {
  if (one_sided_taps.empty()) throw DataError("dtft_spectrum: empty profile");
  if (grid < 64) {
    throw DataError("dtft_spectrum: frequency grid of " + std::to_string(grid) +
                    " points is too coarse; need >= 64");
  }
  const int half = static_cast<int>(one_sided_taps.size()) - 1;
  double dc = one_sided_taps[0];
  for (int m = 1; m <= half; ++m) dc += 2.0 * one_sided_taps[m];
  if (dc == 0.0) throw DataError("dtft_spectrum: zero DC value, cannot normalize");

  SampledSpectrum spectrum;
  spectrum.frequencies.resize(grid);
  spectrum.values.resize(grid);
  for (int i = 0; i < grid; ++i) {
    const double omega = M_PI * i / (grid - 1);
    double sum = one_sided_taps[0];
    for (int m = 1; m <= half; ++m) {
      sum += 2.0 * one_sided_taps[m] * std::cos(omega * m);
    }
    spectrum.frequencies[i] = omega;
    spectrum.values[i] = std::abs(sum / dc);
  }
  return spectrum;
}

// Magnitude of the DTFT of the pitch-sampled PSF profile on a uniform
// frequency grid over [0, pi] rad/sample, normalized to 1 at omega = 0.
inline SampledSpectrum psf_spectrum(const PsfModel& model, double z,
                                    double pixel_pitch, int grid) {
  model.validate();
  if (!(pixel_pitch > 0.0)) throw DataError("psf_spectrum: pixel_pitch must be positive");
  const int half = detail::kSpectrumProfileHalfWidth;
  std::vector<double> taps(half + 1);  // one-sided: taps[m] = h(m * pitch)
  for (int m = 0; m <= half; ++m) {
    taps[m] = psf_value(model, m * pixel_pitch, z);
  }
  return dtft_spectrum(taps, grid);
}

}  // namespace focusqc
