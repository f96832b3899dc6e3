#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "focusqc/errors.hpp"
#include "focusqc/filters.hpp"
#include "focusqc/hvsm.hpp"
#include "focusqc/optics.hpp"
#include "oracles.hpp"

namespace {

using focusqc::DataError;
using focusqc::HvsmKernel;
using focusqc::PsfModel;
using focusqc::SampledSpectrum;

SampledSpectrum spectrum_on_grid(int points,
                                 const std::function<double(double)>& f) {
  SampledSpectrum s;
  s.frequencies.resize(points);
  s.values.resize(points);
  for (int i = 0; i < points; ++i) {
    s.frequencies[i] = M_PI * i / (points - 1);
    s.values[i] = f(s.frequencies[i]);
  }
  return s;
}

std::string temp_path(const std::string& name) {
  return testing::TempDir() + name;
}

TEST(FitCoefficients, ExactQuadraticTarget) {
  const auto target =
      spectrum_on_grid(128, [](double w) { return w * w; });
  const auto fit = focusqc::fit_coefficients(target, 1, M_PI);
  ASSERT_EQ(fit.coefficients.size(), 1u);
  EXPECT_NEAR(fit.coefficients[0], -1.0, 1e-12);
  EXPECT_NEAR(fit.residual, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(fit.band_limit, M_PI);
}

TEST(FitCoefficients, OffsetTargetLeavesResidual) {
  // 1 + w^2 is outside the span of {(-1)^n w^{2n}}, so a single-term fit
  // cannot be exact and c_1 is not simply -1.
  const auto target =
      spectrum_on_grid(128, [](double w) { return 1.0 + w * w; });
  const auto fit = focusqc::fit_coefficients(target, 1, M_PI);
  EXPECT_GT(fit.residual, 1e-3);
  EXPECT_NE(fit.coefficients[0], -1.0);
}

TEST(FitCoefficients, RecoversInSpanTarget) {
  const std::vector<double> truth = {-2.0, 0.5, -0.01};
  const auto target = spectrum_on_grid(256, [&](double w) {
    double acc = 0.0;
    for (std::size_t n = 1; n <= truth.size(); ++n) {
      acc += truth[n - 1] * std::pow(-1.0, n) * std::pow(w, 2.0 * n);
    }
    return acc;
  });
  const auto fit = focusqc::fit_coefficients(target, 3, M_PI);
  ASSERT_EQ(fit.coefficients.size(), 3u);
  for (std::size_t n = 0; n < truth.size(); ++n) {
    EXPECT_NEAR(fit.coefficients[n], truth[n], 1e-9);
  }
}

TEST(FitCoefficients, BandStopsAtInstabilityCap) {
  // Values pass 30 at w = 2; the band must end at the last grid point at
  // or below that crossing.
  const auto target =
      spectrum_on_grid(257, [](double w) { return 1.0 + 29.0 * w / 2.0; });
  const auto fit = focusqc::fit_coefficients(target, 2, M_PI);
  EXPECT_LE(fit.band_limit, 2.0 + 1e-9);
  EXPECT_GT(fit.band_limit, 2.0 - 2.0 * M_PI / 256);

  const auto capped = focusqc::fit_coefficients(target, 2, 1.0);
  EXPECT_LE(capped.band_limit, 1.0);
  EXPECT_GT(capped.band_limit, 1.0 - 2.0 * M_PI / 256);
}

TEST(FitCoefficients, RejectsNonFiniteInsideBand) {
  auto target = spectrum_on_grid(128, [](double w) { return 1.0 + w; });
  target.values[10] = std::numeric_limits<double>::infinity();
  try {
    focusqc::fit_coefficients(target, 2, M_PI);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("omega"), std::string::npos);
  }
}

TEST(FitCoefficients, IgnoresNonFiniteBeyondCap) {
  auto target = spectrum_on_grid(128, [](double w) { return 1.0 + w; });
  target.values[100] = std::numeric_limits<double>::infinity();
  EXPECT_NO_THROW(
      focusqc::fit_coefficients(target, 2, target.frequencies[50]));
}

TEST(FitCoefficients, RejectsMalformedInput) {
  SampledSpectrum not_full;
  not_full.frequencies = {0.0, 1.0};  // does not reach pi
  not_full.values = {1.0, 1.0};
  EXPECT_THROW(focusqc::fit_coefficients(not_full, 1, M_PI), DataError);

  const auto target = spectrum_on_grid(128, [](double) { return 1.0; });
  EXPECT_THROW(focusqc::fit_coefficients(target, 0, M_PI), DataError);
  EXPECT_THROW(focusqc::fit_coefficients(target, 1, 0.0), DataError);

  // Everything but omega = 0 is over the cap: band too narrow for N = 3.
  const auto spiky = spectrum_on_grid(128, [](double w) {
    return w == 0.0 ? 1.0 : 100.0;
  });
  EXPECT_THROW(focusqc::fit_coefficients(spiky, 3, M_PI), DataError);
}

TEST(CombineBasis, IdentityCombination) {
  const auto basis = focusqc::design_derivative_filter(4, 2.0);
  const auto taps = focusqc::combine_basis({1.0}, {basis});
  ASSERT_EQ(taps.size(), basis.taps.size());
  for (std::size_t i = 0; i < taps.size(); ++i) {
    EXPECT_EQ(taps[i], basis.taps[i]);
  }
}

TEST(CombineBasis, RejectsMismatchedInputs) {
  const auto a = focusqc::design_derivative_filter(2, 2.0, 37);
  const auto b = focusqc::design_derivative_filter(2, 2.0, 20);
  EXPECT_THROW(focusqc::combine_basis({1.0, 2.0}, {a}), DataError);
  EXPECT_THROW(focusqc::combine_basis({1.0, 2.0}, {a, b}), DataError);
  EXPECT_THROW(focusqc::combine_basis({}, {}), DataError);
}

TEST(SynthesizeKernel, PinnedGoldenValues) {
  // First-run values for the default optics at z* = 4, cross-checked
  // against an independent reimplementation of the whole pipeline.
  const auto kernel = focusqc::synthesize_kernel(PsfModel{}, 4.0);
  ASSERT_EQ(kernel.coefficients.size(), 7u);
  ASSERT_EQ(kernel.taps.size(), 75u);
  EXPECT_NEAR(kernel.fit_band_limit, 1.9991953250116865, 1e-12);
  EXPECT_NEAR(kernel.fit_residual, 0.026195152337135045, 1e-9);
  const std::vector<double> expected_c = {
      -10.749521065026334, -20.516712327307857, -22.814721009576626,
      -11.388292686196264, -3.3980352936656746, -0.6161049112849093,
      -0.049212613862199647};
  for (std::size_t n = 0; n < expected_c.size(); ++n) {
    EXPECT_NEAR(kernel.coefficients[n], expected_c[n],
                1e-7 * std::abs(expected_c[n]) + 1e-10);
  }
  EXPECT_NEAR(kernel.tap(0), 6.3517380204191678, 1e-7);
  EXPECT_DOUBLE_EQ(kernel.z_star, 4.0);
  EXPECT_DOUBLE_EQ(kernel.cutoff, 2.0);
}

TEST(SynthesizeKernel, CoefficientsAgreeWithSecondSolver) {
  // Re-derive the coefficient fit with an SVD solve on the unscaled
  // matrix; the QR path in the library must agree.
  const PsfModel model;
  const auto kernel = focusqc::synthesize_kernel(model, 4.0);
  const auto spectrum = focusqc::psf_spectrum(model, 4.0, model.pixel_pitch, 1024);

  std::vector<double> band_freq;
  for (std::size_t i = 0; i < spectrum.frequencies.size(); ++i) {
    const double inv = 1.0 / spectrum.values[i];
    if (spectrum.frequencies[i] > 2.0 || !(inv <= 30.0)) break;
    band_freq.push_back(spectrum.frequencies[i]);
  }
  const auto rows = static_cast<Eigen::Index>(band_freq.size());
  Eigen::MatrixXd design(rows, 7);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (int n = 1; n <= 7; ++n) {
      design(i, n - 1) =
          std::pow(-1.0, n) * std::pow(band_freq[static_cast<std::size_t>(i)], 2 * n);
    }
    rhs(i) = 1.0 / spectrum.values[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd svd_solution =
      design.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(rhs);
  for (int n = 0; n < 7; ++n) {
    EXPECT_NEAR(kernel.coefficients[static_cast<std::size_t>(n)],
                svd_solution(n), 1e-8 * std::abs(svd_solution(n)) + 1e-10);
  }
}

TEST(SynthesizeKernel, ResponseTracksInverseSpectrum) {
  // Relative l2 mismatch between the kernel response and the inverse PSF
  // spectrum over [0, min(omega_t, 0.9 * cutoff)] stays under 5%.
  const PsfModel model;
  const auto kernel = focusqc::synthesize_kernel(model, 4.0);
  const auto spectrum = focusqc::psf_spectrum(model, 4.0, model.pixel_pitch, 1024);
  const double band_top = std::min(kernel.fit_band_limit, 0.9 * kernel.cutoff);

  focusqc::DerivativeFilter as_filter;
  as_filter.order = 2;
  as_filter.cutoff = kernel.cutoff;
  as_filter.taps = kernel.taps;

  double err2 = 0.0, ref2 = 0.0;
  for (std::size_t i = 0; i < spectrum.frequencies.size(); ++i) {
    if (spectrum.frequencies[i] > band_top) break;
    const double inv = 1.0 / spectrum.values[i];
    const auto resp = focusqc::filter_response(as_filter, {spectrum.frequencies[i]});
    err2 += (resp.values[0] - inv) * (resp.values[0] - inv);
    ref2 += inv * inv;
  }
  EXPECT_LE(std::sqrt(err2 / ref2), 0.05);
}

TEST(SynthesizeKernel, ResponseRisesAcrossFitBand) {
  // The inverse spectrum rises with frequency and the kernel follows it;
  // FIR ripple allows dips of at most a thousandth of the peak response.
  const auto kernel = focusqc::synthesize_kernel(PsfModel{}, 4.0);
  focusqc::DerivativeFilter as_filter;
  as_filter.order = 2;
  as_filter.cutoff = kernel.cutoff;
  as_filter.taps = kernel.taps;

  std::vector<double> freqs;
  const double top = 0.8 * kernel.fit_band_limit;
  for (int i = 0; i < 512; ++i) freqs.push_back(top * i / 511);
  const auto resp = focusqc::filter_response(as_filter, freqs);
  double peak = 0.0;
  for (double v : resp.values) peak = std::max(peak, std::abs(v));
  for (std::size_t i = 1; i < resp.values.size(); ++i) {
    EXPECT_GE(resp.values[i], resp.values[i - 1] - 1e-3 * peak)
        << "at omega " << freqs[i];
  }
  EXPECT_GT(resp.values.back(), resp.values.front());
}

TEST(SynthesizeKernel, BoostsHighFrequencies) {
  // Above mid-band the response keeps at least ~95% of the inverse
  // spectrum it is meant to realize. (At omega = 0 the derivative basis
  // forces response 0, so the low band is excluded by construction.)
  const PsfModel model;
  const auto kernel = focusqc::synthesize_kernel(model, 4.0);
  const auto spectrum = focusqc::psf_spectrum(model, 4.0, model.pixel_pitch, 1024);
  focusqc::DerivativeFilter as_filter;
  as_filter.order = 2;
  as_filter.cutoff = kernel.cutoff;
  as_filter.taps = kernel.taps;
  for (std::size_t i = 0; i < spectrum.frequencies.size(); ++i) {
    const double w = spectrum.frequencies[i];
    if (w < 0.5) continue;
    if (w > 0.9 * kernel.cutoff) break;
    const double inv = 1.0 / spectrum.values[i];
    const auto resp = focusqc::filter_response(as_filter, {w});
    EXPECT_GE(resp.values[0], 0.9499 * inv) << "at omega " << w;
  }
}

TEST(SynthesizeKernel, AnnihilatesConstants) {
  const auto kernel = focusqc::synthesize_kernel(PsfModel{}, 4.0);
  double tap_sum = 0.0;
  for (double t : kernel.taps) tap_sum += t;
  // Convolving a constant image of amplitude A gives A * sum(taps).
  EXPECT_LE(std::abs(tap_sum), 1e-6);
}

TEST(SynthesizeKernel, DeterministicAndEvenInDepth) {
  const auto a = focusqc::synthesize_kernel(PsfModel{}, 4.0);
  const auto b = focusqc::synthesize_kernel(PsfModel{}, 4.0);
  const auto c = focusqc::synthesize_kernel(PsfModel{}, -4.0);
  ASSERT_EQ(a.taps.size(), b.taps.size());
  for (std::size_t i = 0; i < a.taps.size(); ++i) {
    EXPECT_EQ(a.taps[i], b.taps[i]);
    EXPECT_EQ(a.taps[i], c.taps[i]);  // defocus blur is even in depth
  }
  for (std::size_t i = 0; i < a.coefficients.size(); ++i) {
    EXPECT_EQ(a.coefficients[i], b.coefficients[i]);
  }
}

TEST(SynthesizeKernel, TapsAreSymmetric) {
  const auto kernel = focusqc::synthesize_kernel(PsfModel{}, 4.0);
  for (int k = 1; k <= kernel.half_length(); ++k) {
    EXPECT_EQ(kernel.tap(k), kernel.tap(-k));
  }
}

TEST(KernelSerialization, RoundTripIsBitExact) {
  const auto kernel = focusqc::synthesize_kernel(PsfModel{}, 4.0);
  const std::string path = temp_path("kernel_roundtrip.json");
  focusqc::save_kernel(kernel, path);
  const auto loaded = focusqc::load_kernel(path);

  ASSERT_EQ(loaded.taps.size(), kernel.taps.size());
  for (std::size_t i = 0; i < kernel.taps.size(); ++i) {
    EXPECT_EQ(loaded.taps[i], kernel.taps[i]);
  }
  ASSERT_EQ(loaded.coefficients.size(), kernel.coefficients.size());
  for (std::size_t i = 0; i < kernel.coefficients.size(); ++i) {
    EXPECT_EQ(loaded.coefficients[i], kernel.coefficients[i]);
  }
  EXPECT_EQ(loaded.cutoff, kernel.cutoff);
  EXPECT_EQ(loaded.fit_band_limit, kernel.fit_band_limit);
  EXPECT_EQ(loaded.z_star, kernel.z_star);
  EXPECT_EQ(loaded.fit_residual, kernel.fit_residual);
  EXPECT_EQ(loaded.optics.numerical_aperture, kernel.optics.numerical_aperture);
  EXPECT_EQ(loaded.optics.wavelength, kernel.optics.wavelength);
  EXPECT_EQ(loaded.optics.refractive_index, kernel.optics.refractive_index);
  EXPECT_EQ(loaded.optics.pixel_pitch, kernel.optics.pixel_pitch);
  std::remove(path.c_str());
}

TEST(KernelSerialization, MissingTapsNamesTheField) {
  const auto kernel = focusqc::synthesize_kernel(PsfModel{}, 4.0);
  const std::string path = temp_path("kernel_missing_taps.json");
  focusqc::save_kernel(kernel, path);

  auto j = nlohmann::json::parse(focusqc::read_file(path));
  j.erase("taps");
  focusqc::write_file_atomic(path, j.dump());
  try {
    focusqc::load_kernel(path);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("taps"), std::string::npos);
  }
  std::remove(path.c_str());
}

TEST(KernelSerialization, RejectsAsymmetricTaps) {
  const auto kernel = focusqc::synthesize_kernel(PsfModel{}, 4.0);
  const std::string path = temp_path("kernel_asymmetric.json");
  focusqc::save_kernel(kernel, path);

  auto j = nlohmann::json::parse(focusqc::read_file(path));
  j["taps"][0] = j["taps"][0].get<double>() + 0.5;
  focusqc::write_file_atomic(path, j.dump());
  EXPECT_THROW(focusqc::load_kernel(path), DataError);
  std::remove(path.c_str());
}

TEST(KernelSerialization, RejectsGarbageAndBadSchema) {
  const std::string path = temp_path("kernel_garbage.json");
  focusqc::write_file_atomic(path, "{not json");
  EXPECT_THROW(focusqc::load_kernel(path), DataError);

  const auto kernel = focusqc::synthesize_kernel(PsfModel{}, 4.0);
  focusqc::save_kernel(kernel, path);
  auto j = nlohmann::json::parse(focusqc::read_file(path));
  j["schema_version"] = 99;
  focusqc::write_file_atomic(path, j.dump());
  EXPECT_THROW(focusqc::load_kernel(path), DataError);
  std::remove(path.c_str());

  EXPECT_THROW(focusqc::load_kernel(temp_path("no_such_kernel.json")),
               focusqc::IoError);
}

}  // namespace
