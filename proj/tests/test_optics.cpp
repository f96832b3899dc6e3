#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "focusqc/bessel.hpp"
#include "focusqc/errors.hpp"
#include "focusqc/optics.hpp"
#include "focusqc/quadrature.hpp"
#include "oracles.hpp"

namespace {

using focusqc::DataError;
using focusqc::PsfModel;

PsfModel default_model() { return PsfModel{}; }

TEST(BesselJ0, KnownValues) {
  EXPECT_EQ(focusqc::bessel_j0(0.0), 1.0);
  // Classical tabulated value of J0(1).
  EXPECT_NEAR(focusqc::bessel_j0(1.0), 0.7651976866, 1e-10);
}

TEST(BesselJ0, MatchesIntegralRepresentation) {
  for (double x = 0.0; x <= 60.0; x += 0.1) {
    EXPECT_NEAR(focusqc::bessel_j0(x), oracle::bessel_j0(x), 1e-11)
        << "at x = " << x;
  }
}

TEST(BesselJ0, EvenFunction) {
  for (double x : {0.3, 1.7, 5.0, 11.0, 13.5, 40.0}) {
    EXPECT_EQ(focusqc::bessel_j0(x), focusqc::bessel_j0(-x));
  }
}

TEST(BesselJ0, AccurateOnBothSidesOfEvaluationSplit) {
  // The implementation switches between a power series and an asymptotic
  // form; both must track the reference right up to where they meet.
  for (double x : {11.5, 11.99, 11.999999999, 12.0, 12.000000001, 12.01, 12.5}) {
    EXPECT_NEAR(focusqc::bessel_j0(x), oracle::bessel_j0(x), 1e-11)
        << "at x = " << x;
  }
}

TEST(BesselJ0, FirstRoot) {
  const double root = oracle::bisect(
      [](double x) { return focusqc::bessel_j0(x); }, 2.0, 3.0);
  EXPECT_NEAR(root, 2.404825557695773, 1e-9);
}

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  // An n-node rule is exact for polynomials of degree 2n - 1.
  const auto& rule = focusqc::gauss_legendre(8);
  for (int degree = 0; degree <= 15; ++degree) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      acc += rule.weights[i] * std::pow(rule.nodes[i], degree);
    }
    const double expected = (degree % 2 == 0) ? 2.0 / (degree + 1) : 0.0;
    EXPECT_NEAR(acc, expected, 1e-14) << "degree " << degree;
  }
}

TEST(GaussLegendre, WeightsSumToIntervalLength) {
  for (int n : {16, 64, 128, 129}) {
    const auto& rule = focusqc::gauss_legendre(n);
    ASSERT_EQ(rule.nodes.size(), static_cast<std::size_t>(n));
    double total = 0.0;
    for (double w : rule.weights) total += w;
    EXPECT_NEAR(total, 2.0, 1e-13);
  }
}

TEST(GaussLegendre, OddRuleHasExactMidpoint) {
  const auto& rule = focusqc::gauss_legendre(129);
  EXPECT_EQ(rule.nodes[64], 0.0);
}

TEST(GaussLegendre, CachedRuleIsStable) {
  const auto& a = focusqc::gauss_legendre(128);
  const auto& b = focusqc::gauss_legendre(128);
  EXPECT_EQ(&a, &b);
}

TEST(PsfModel, ValidationRejectsBadParameters) {
  PsfModel m = default_model();
  m.numerical_aperture = 0.0;
  EXPECT_THROW(m.validate(), DataError);
  m = default_model();
  m.numerical_aperture = 1.4;  // exceeds refractive index 1.0
  EXPECT_THROW(m.validate(), DataError);
  m = default_model();
  m.wavelength = -1.0;
  EXPECT_THROW(m.validate(), DataError);
  m = default_model();
  m.quadrature_nodes = 8;
  EXPECT_THROW(m.validate(), DataError);
  m = default_model();
  m.depth_step = 0.0;
  EXPECT_THROW(m.validate(), DataError);
  EXPECT_NO_THROW(default_model().validate());
}

TEST(PsfValue, UnitPeakAtOrigin) {
  EXPECT_NEAR(focusqc::psf_value(default_model(), 0.0, 0.0), 1.0, 1e-13);
}

TEST(PsfValue, EvenInDepthAndRadius) {
  const PsfModel m = default_model();
  for (double z : {0.5, 1.0, 2.0, 4.0, 7.5}) {
    for (double r : {0.0, 1e-7, 3e-7, 1e-6}) {
      EXPECT_EQ(focusqc::psf_value(m, r, z), focusqc::psf_value(m, r, -z));
      EXPECT_EQ(focusqc::psf_value(m, r, z), focusqc::psf_value(m, -r, z));
    }
  }
}

TEST(PsfValue, InFocusFirstZeroAtFirstRootOfJ1) {
  // In focus, the pupil integral evaluates to 2 J1(a) / a with
  // a = k (NA / n) r, so the first dark ring sits at the first positive
  // root of J1.
  const PsfModel m = default_model();
  const double j1_root =
      oracle::bisect([](double x) { return oracle::bessel_j1(x); }, 3.0, 4.5);
  EXPECT_NEAR(j1_root, 3.8317059702, 1e-9);

  const double scale = m.wavenumber() * m.numerical_aperture / m.refractive_index;
  const double r_zero = j1_root / scale;
  EXPECT_LT(focusqc::psf_value(m, r_zero, 0.0), 1e-18);
  // Neighbors on both sides are strictly larger than the dark ring.
  EXPECT_GT(focusqc::psf_value(m, r_zero * 0.98, 0.0),
            focusqc::psf_value(m, r_zero, 0.0));
  EXPECT_GT(focusqc::psf_value(m, r_zero * 1.02, 0.0),
            focusqc::psf_value(m, r_zero, 0.0));
}

TEST(PsfValue, StableUnderQuadratureRefinement) {
  PsfModel coarse = default_model();
  PsfModel fine = default_model();
  fine.quadrature_nodes = 256;
  for (double z : {0.0, 1.0, 4.0, 8.0}) {
    for (double r : {0.0, 2e-7, 5e-7, 1.2e-6}) {
      EXPECT_NEAR(focusqc::psf_value(coarse, r, z),
                  focusqc::psf_value(fine, r, z), 1e-8);
    }
  }
}

TEST(PsfValue, DefocusSpreadsEnergyOffAxis) {
  const PsfModel m = default_model();
  // On-axis intensity drops as defocus grows over the first few levels.
  const double v0 = focusqc::psf_value(m, 0.0, 0.0);
  const double v2 = focusqc::psf_value(m, 0.0, 2.0);
  const double v4 = focusqc::psf_value(m, 0.0, 4.0);
  EXPECT_GT(v0, v2);
  EXPECT_GT(v2, v4);
}

TEST(PsfRadialProfile, RequiresOddSampleCount) {
  EXPECT_THROW(focusqc::psf_radial_profile(default_model(), 0.0, 1e-6, 200),
               DataError);
  EXPECT_THROW(focusqc::psf_radial_profile(default_model(), 0.0, 1e-6, 1),
               DataError);
}

TEST(PsfRadialProfile, SymmetricGridAndValues) {
  const auto profile =
      focusqc::psf_radial_profile(default_model(), 1.0, 2e-6, 101);
  ASSERT_EQ(profile.size(), 101u);
  EXPECT_DOUBLE_EQ(profile.front().first, -2e-6);
  EXPECT_DOUBLE_EQ(profile.back().first, 2e-6);
  EXPECT_DOUBLE_EQ(profile[50].first, 0.0);
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(profile[i].second, profile[100 - i].second);
  }
}

TEST(PsfRadialProfile, InFocusIntegralConverged) {
  // The trapezoid integral of the in-focus profile must agree with a 10x
  // denser sampling within 1e-6 relative, i.e. this sampling already
  // resolves the profile.
  const PsfModel m = default_model();
  const double r_max = 2e-6;
  auto integral = [&](int samples) {
    const auto profile = focusqc::psf_radial_profile(m, 0.0, r_max, samples);
    std::vector<double> xs, ys;
    for (const auto& [r, v] : profile) {
      xs.push_back(r);
      ys.push_back(v);
    }
    return oracle::trapezoid(xs, ys);
  };
  const double coarse = integral(401);
  const double dense = integral(4001);
  EXPECT_NEAR(coarse, dense, 1e-6 * std::abs(dense));
}

TEST(PsfRadialProfile, InFocusDominatesDefocusedAtCenter) {
  const PsfModel m = default_model();
  const auto sharp = focusqc::psf_radial_profile(m, 0.0, 2e-6, 101);
  const auto blurred = focusqc::psf_radial_profile(m, 4.0, 2e-6, 101);
  EXPECT_GT(sharp[50].second, blurred[50].second);
  EXPECT_NEAR(sharp[50].second, 1.0, 1e-13);
}

TEST(DtftSpectrum, DeltaProfileIsFlat) {
  const auto spectrum = focusqc::dtft_spectrum({1.0}, 64);
  for (double v : spectrum.values) {
    EXPECT_EQ(v, 1.0);
  }
}

TEST(DtftSpectrum, MatchesDirectComplexSum) {
  const std::vector<double> taps = {0.9, 0.4, 0.1, 0.02};
  const auto spectrum = focusqc::dtft_spectrum(taps, 128);
  double dc = taps[0];
  for (std::size_t m = 1; m < taps.size(); ++m) dc += 2.0 * taps[m];
  for (std::size_t i = 0; i < spectrum.frequencies.size(); ++i) {
    EXPECT_NEAR(spectrum.values[i],
                oracle::dtft_magnitude(taps, spectrum.frequencies[i]) / dc,
                1e-13);
  }
}

TEST(DtftSpectrum, RejectsCoarseGrid) {
  EXPECT_THROW(focusqc::dtft_spectrum({1.0, 0.5}, 63), DataError);
  EXPECT_NO_THROW(focusqc::dtft_spectrum({1.0, 0.5}, 64));
}

TEST(PsfSpectrum, UnitDcAndBounded) {
  const auto spectrum =
      focusqc::psf_spectrum(default_model(), 4.0, 0.25e-6, 256);
  ASSERT_EQ(spectrum.values.size(), 256u);
  EXPECT_EQ(spectrum.frequencies.front(), 0.0);
  EXPECT_DOUBLE_EQ(spectrum.frequencies.back(), M_PI);
  EXPECT_EQ(spectrum.values.front(), 1.0);
  for (double v : spectrum.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0 + 1e-12);
  }
}

TEST(PsfSpectrum, InFocusDominatesDefocused) {
  const PsfModel m = default_model();
  const auto sharp = focusqc::psf_spectrum(m, 0.0, m.pixel_pitch, 512);
  const auto blurred = focusqc::psf_spectrum(m, 4.0, m.pixel_pitch, 512);
  for (std::size_t i = 1; i < sharp.values.size(); ++i) {
    EXPECT_GT(sharp.values[i], blurred.values[i])
        << "at omega = " << sharp.frequencies[i];
  }
}

TEST(PsfSpectrum, RejectsBadArguments) {
  EXPECT_THROW(focusqc::psf_spectrum(default_model(), 0.0, 0.0, 256),
               DataError);
  EXPECT_THROW(focusqc::psf_spectrum(default_model(), 0.0, 0.25e-6, 32),
               DataError);
}

}  // namespace
