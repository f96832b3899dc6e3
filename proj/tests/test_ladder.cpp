#include "focusqc/ladder.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "focusqc/errors.hpp"
#include "focusqc/scoring.hpp"
#include "focusqc/stats.hpp"
#include "shared_kernel.hpp"

namespace {

using focusqc::BlurFamily;
using focusqc::DataError;
using focusqc::DeterministicRng;
using focusqc::ImageF;
using focusqc::PsfModel;

TEST(Texture, DeterministicFullRangeNoise) {
  DeterministicRng rng_a(42);
  DeterministicRng rng_b(42);
  const ImageF a = focusqc::make_texture(rng_a, 96);
  const ImageF b = focusqc::make_texture(rng_b, 96);
  EXPECT_EQ(a.pixels, b.pixels);

  const auto [lo, hi] = std::minmax_element(a.pixels.begin(), a.pixels.end());
  EXPECT_DOUBLE_EQ(*lo, 0.0);  // normalized to full unit range
  EXPECT_DOUBLE_EQ(*hi, 1.0);

  DeterministicRng rng_c(43);
  const ImageF c = focusqc::make_texture(rng_c, 96);
  EXPECT_NE(a.pixels, c.pixels);

  double mean = 0.0;
  for (double v : a.pixels) mean += v;
  mean /= static_cast<double>(a.pixels.size());
  double var = 0.0;
  for (double v : a.pixels) var += (v - mean) * (v - mean);
  var /= static_cast<double>(a.pixels.size());
  EXPECT_GT(std::sqrt(var), 0.05);  // actual multi-scale structure

  DeterministicRng rng_d(44);
  EXPECT_THROW(focusqc::make_texture(rng_d, 1), DataError);
}

TEST(GaussianTaps, UnitMassAndExpectedSupport) {
  for (double sigma : {0.5, 1.0, 2.0, 4.0}) {
    const std::vector<double> taps = focusqc::gaussian_taps(sigma);
    ASSERT_EQ(taps.size(),
              static_cast<std::size_t>(std::ceil(4.0 * sigma)) + 1);
    double sum = taps[0];
    for (std::size_t k = 1; k < taps.size(); ++k) {
      sum += 2.0 * taps[k];
      EXPECT_LT(taps[k], taps[k - 1]);  // radially decreasing
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(DefocusProfileTaps, UnitMassAndTruncatedTail) {
  const PsfModel model;
  for (double z : {1.0, 2.0, 5.0}) {
    const std::vector<double> taps = focusqc::psf_profile_taps(model, z);
    ASSERT_LE(taps.size(), 129u);
    ASSERT_GE(taps.size(), 2u);
    double sum = taps[0];
    double peak = taps[0];
    for (std::size_t k = 1; k < taps.size(); ++k) {
      sum += 2.0 * taps[k];
      peak = std::max(peak, taps[k]);
      EXPECT_GE(taps[k], 0.0);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_GE(taps.back(), 0.0);
    EXPECT_LT(taps.back(), peak);
  }
}

TEST(ApplyBlur, ZeroStrengthIsIdentityAndNegativeRejected) {
  DeterministicRng rng(7);
  const ImageF texture = focusqc::make_texture(rng, 80);
  const ImageF same =
      focusqc::apply_blur_level(texture, 0.0, BlurFamily::defocus, PsfModel{});
  EXPECT_EQ(same.pixels, texture.pixels);
  EXPECT_THROW(
      focusqc::apply_blur_level(texture, -1.0, BlurFamily::gaussian,
                                PsfModel{}),
      DataError);
}

TEST(ApplyBlur, SmoothingReducesVariance) {
  DeterministicRng rng(8);
  // deep defocus profiles keep up to 128 one-sided taps, so the texture
  // must exceed that support
  const ImageF texture = focusqc::make_texture(rng, 256);
  const auto variance = [](const ImageF& img) {
    double mean = 0.0;
    for (double v : img.pixels) mean += v;
    mean /= static_cast<double>(img.pixels.size());
    double var = 0.0;
    for (double v : img.pixels) var += (v - mean) * (v - mean);
    return var / static_cast<double>(img.pixels.size());
  };
  const double base = variance(texture);
  const double gaussian_blurred = variance(focusqc::apply_blur_level(
      texture, 2.0, BlurFamily::gaussian, PsfModel{}));
  const double defocus_blurred = variance(focusqc::apply_blur_level(
      texture, 3.0, BlurFamily::defocus, PsfModel{}));
  EXPECT_LT(gaussian_blurred, base);
  EXPECT_LT(defocus_blurred, base);
}

TEST(MakeBlurLadder, TexturesIndependentOfCount) {
  focusqc::BlurLadderSpec spec;
  spec.seed = 31;
  spec.count = 3;
  spec.levels = {0.0, 2.0};
  spec.texture_size = 64;
  spec.family = BlurFamily::gaussian;
  const auto three = focusqc::make_blur_ladder(spec);
  spec.count = 2;
  const auto two = focusqc::make_blur_ladder(spec);
  EXPECT_EQ(three[0][0].pixels, two[0][0].pixels);
  EXPECT_EQ(three[1][1].pixels, two[1][1].pixels);
}

TEST(MakeBlurLadder, DefocusLadderScoresTrackDepth) {
  focusqc::BlurLadderSpec spec;
  spec.seed = 20240515;
  spec.count = 12;
  spec.levels = {0.0, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0};
  spec.texture_size = 256;  // must exceed the deepest profile support
  spec.family = BlurFamily::defocus;
  const auto ladder = focusqc::make_blur_ladder(spec);

  const focusqc::HvsmKernel& kernel = default_test_kernel();
  const focusqc::ScoringParams params;
  focusqc::ScoringScratch scratch;
  std::vector<double> scores;
  std::vector<double> depths;
  int strictly_increasing = 0;
  for (const auto& row : ladder) {
    bool strict = true;
    double previous = 0.0;
    for (std::size_t l = 0; l < row.size(); ++l) {
      const double raw =
          focusqc::score_patch(row[l], kernel, params, &scratch).raw;
      scores.push_back(raw);
      depths.push_back(spec.levels[l]);
      // Deblur response energy shrinks as blur grows, so the raw score
      // (its negated log) rises with depth.
      if (l > 0 && raw <= previous) strict = false;
      previous = raw;
    }
    if (strict) ++strictly_increasing;
  }
  EXPECT_GE(strictly_increasing, 11) << "of " << spec.count << " textures";

  // pooled rank correlation between score and blur strength
  const double pooled =
      focusqc::srcc(focusqc::PairedSamples{scores, depths});
  EXPECT_GE(pooled, 0.95);
}

}  // namespace
