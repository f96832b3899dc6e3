#pragma once

// Whole-slide processing: tile a slide into fixed-size patches, score the
// tissue-bearing ones, and summarize the result as a heatmap image, a
// cumulative score curve, and a slide-level accept/reject decision.
// Slides stream through one tile-row band at a time, so images far larger
// than memory are processable; peak memory is one band plus the grid and
// per-worker scratch buffers.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "focusqc/errors.hpp"
#include "focusqc/image.hpp"
#include "focusqc/io/image_source.hpp"
#include "focusqc/projection.hpp"
#include "focusqc/scoring.hpp"

namespace focusqc {

/// Background/tissue split by tile statistics: a tile counts as tissue
/// when it is dark enough (mean) and textured enough (std deviation).
struct TissueConfig {
  double max_mean = 0.92;
  double min_std = 0.02;

  void validate() const {
    if (!(max_mean > 0.0) || !(max_mean <= 1.0)) {
      throw DataError("tissue mean threshold must lie in (0, 1], got " +
                      std::to_string(max_mean));
    }
    if (!(min_std >= 0.0) || !(min_std < 1.0)) {
      throw DataError("tissue std threshold must lie in [0, 1), got " +
                      std::to_string(min_std));
    }
  }
};

/// Per-tile results over a slide.  Only full tiles appear in the grid
/// (border strips narrower than one patch are dropped); background and
/// otherwise unscored tiles hold NaN in both score planes.
struct HeatmapGrid {
  int rows = 0;
  int cols = 0;
  int patch_size = 1024;
  std::vector<double> raw;
  std::vector<double> projected;
  std::vector<std::uint8_t> tissue;
  std::string slide_id;

  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
           static_cast<std::size_t>(c);
  }
  double raw_at(int r, int c) const { return raw[index(r, c)]; }
  double projected_at(int r, int c) const { return projected[index(r, c)]; }
  bool tissue_at(int r, int c) const { return tissue[index(r, c)] != 0; }

  void validate() const {
    if (rows <= 0 || cols <= 0 || patch_size <= 0) {
      throw DataError("heatmap grid has empty dimensions");
    }
    const std::size_t n =
        static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    if (raw.size() != n || projected.size() != n || tissue.size() != n) {
      throw DataError("heatmap grid planes disagree with rows*cols");
    }
  }
};

/// Slide-level verdict from the share of tissue tiles at or under the
/// acceptance threshold.  no_tissue flags slides where nothing scored.
struct SlideDecision {
  double acceptance_ratio = 0.0;
  double threshold = 0.0;
  double pass_ratio = 0.0;
  long long n_tissue_tiles = 0;
  bool pass = false;
  bool no_tissue = false;
};

/// One point of the cumulative score curve: the fraction of scored tiles
/// with projected score <= score.
struct CurvePoint {
  double score = 0.0;
  double cdf = 0.0;
};

inline constexpr double kAcceptanceThreshold = 1.7688;
inline constexpr std::array<std::uint8_t, 3> kNoDataGray = {128, 128, 128};

/// Mean and population standard deviation of a unit-range tile.
struct TileStats {
  double mean = 0.0;
  double stddev = 0.0;
};

inline TileStats tile_stats(const ImageF& tile) {
  const std::size_t n =
      static_cast<std::size_t>(tile.height) * static_cast<std::size_t>(tile.width);
  if (n == 0) throw DataError("tile statistics need a non-empty tile");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = tile.pixels[i];
    sum += v;
    sum_sq += v * v;
  }
  TileStats stats;
  stats.mean = sum / static_cast<double>(n);
  const double variance =
      std::max(0.0, sum_sq / static_cast<double>(n) - stats.mean * stats.mean);
  stats.stddev = std::sqrt(variance);
  return stats;
}

/// True when a unit-range tile looks like tissue rather than background:
/// mean intensity at most cfg.max_mean and std deviation at least
/// cfg.min_std.  Bright featureless glass fails both clauses.
inline bool tissue_test(const ImageF& tile, const TissueConfig& cfg) {
  cfg.validate();
  const TileStats stats = tile_stats(tile);
  return stats.mean <= cfg.max_mean && stats.stddev >= cfg.min_std;
}

namespace detail {

/// Converts the patch starting at column x0 of a row band into a
/// unit-range grayscale tile, using the same per-pixel arithmetic as
/// to_grayscale_unit so in-band scoring matches standalone patch scoring
/// bit for bit.
inline void band_tile_to_gray(const ImageU8& band, int x0, int patch,
                              ImageF& out) {
  if (out.height != patch || out.width != patch) out.resize(patch, patch);
  for (int y = 0; y < patch; ++y) {
    const std::uint8_t* src =
        band.pixels.data() +
        (static_cast<std::size_t>(y) * band.width + x0) * band.channels;
    double* dst = out.pixels.data() + static_cast<std::size_t>(y) * patch;
    if (band.channels == 1) {
      for (int x = 0; x < patch; ++x) {
        dst[x] = static_cast<double>(src[x]) / 255.0;
      }
    } else {
      const std::uint8_t* p = src;
      for (int x = 0; x < patch; ++x, p += 3) {
        dst[x] = (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
      }
    }
  }
}

}  // namespace detail

/// Tiles a slide into patch_size squares (row-major, border remainders
/// dropped), marks tissue tiles, scores them, and projects the scores.
/// The slide streams through one tile-row band at a time; within a band,
/// tiles are distributed over `jobs` workers.  Tiles are independent, so
/// any job count produces an identical grid.
inline HeatmapGrid tile_and_score(ImageSource& source, const HvsmKernel& kernel,
                                  const ScoringParams& params,
                                  const ProjectionModel& projection,
                                  const TissueConfig& tissue_cfg,
                                  int patch_size = 1024, int jobs = 1,
                                  std::string slide_id = {}) {
  params.validate();
  projection.validate();
  tissue_cfg.validate();
  if (patch_size <= 0) {
    throw DataError("patch size must be positive, got " +
                    std::to_string(patch_size));
  }
  if (jobs < 1) {
    throw DataError("worker count must be at least 1, got " +
                    std::to_string(jobs));
  }
  const int image_w = source.width();
  const int image_h = source.height();
  if (source.channels() != 1 && source.channels() != 3) {
    throw DataError("slide must be grayscale or RGB, got " +
                    std::to_string(source.channels()) + " channels");
  }

  HeatmapGrid grid;
  grid.patch_size = patch_size;
  grid.rows = image_h / patch_size;
  grid.cols = image_w / patch_size;
  grid.slide_id = std::move(slide_id);
  if (grid.rows == 0 || grid.cols == 0) {
    throw DataError("slide " + std::to_string(image_w) + "x" +
                    std::to_string(image_h) +
                    " holds no full tile at patch size " +
                    std::to_string(patch_size));
  }
  const std::size_t n_tiles = static_cast<std::size_t>(grid.rows) *
                              static_cast<std::size_t>(grid.cols);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  grid.raw.assign(n_tiles, nan);
  grid.projected.assign(n_tiles, nan);
  grid.tissue.assign(n_tiles, 0);

  struct Worker {
    ScoringScratch scratch;
  };
  const int n_workers = std::min(jobs, grid.cols);
  std::vector<Worker> workers(static_cast<std::size_t>(n_workers));

  ImageU8 band;
  for (int r = 0; r < grid.rows; ++r) {
    // The reader is the only serialized resource: one band per tile row.
    source.read_rows(r * patch_size, patch_size, band);

    auto score_column = [&](Worker& worker, int c) {
      detail::band_tile_to_gray(band, c * patch_size, patch_size,
                                worker.scratch.gray);
      const std::size_t at = grid.index(r, c);
      if (!tissue_test(worker.scratch.gray, tissue_cfg)) return;
      const PatchScore score = score_patch_unit(worker.scratch.gray, kernel,
                                                params, &worker.scratch);
      grid.tissue[at] = 1;
      grid.raw[at] = score.raw;
      grid.projected[at] = project_score(projection, score.raw);
    };

    if (n_workers == 1) {
      for (int c = 0; c < grid.cols; ++c) score_column(workers[0], c);
    } else {
      std::atomic<int> next_col{0};
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(n_workers));
      for (int w = 0; w < n_workers; ++w) {
        pool.emplace_back([&, w]() {
          for (;;) {
            const int c = next_col.fetch_add(1, std::memory_order_relaxed);
            if (c >= grid.cols) break;
            score_column(workers[static_cast<std::size_t>(w)], c);
          }
        });
      }
      for (auto& t : pool) t.join();
    }
  }
  return grid;
}

namespace detail {

/// Five-anchor ramp from blue (q = 0) through cyan, green, yellow to red
/// (q = 1), linearly interpolated between neighboring anchors.
inline std::array<std::uint8_t, 3> quality_color(double q) {
  static constexpr std::array<std::array<double, 3>, 5> anchors = {{
      {0.0, 0.0, 255.0},    // blue
      {0.0, 255.0, 255.0},  // cyan
      {0.0, 255.0, 0.0},    // green
      {255.0, 255.0, 0.0},  // yellow
      {255.0, 0.0, 0.0},    // red
  }};
  const double t = q * 4.0;
  int low = static_cast<int>(t);
  if (low > 3) low = 3;
  const double f = t - static_cast<double>(low);
  std::array<std::uint8_t, 3> color{};
  for (int ch = 0; ch < 3; ++ch) {
    const double value =
        anchors[low][ch] + f * (anchors[low + 1][ch] - anchors[low][ch]);
    color[static_cast<std::size_t>(ch)] =
        static_cast<std::uint8_t>(std::lround(value));
  }
  return color;
}

}  // namespace detail

/// Renders the grid as an RGB picture, one block x block square per tile.
/// Projected scores map to a quality value q = clamp(1 - projected/z_cap,
/// 0, 1), colored blue (worst) to red (best); unscored tiles come out
/// neutral gray.
inline ImageU8 render_heatmap(const HeatmapGrid& grid, double z_cap = 8.0,
                              int block = 16) {
  grid.validate();
  if (!(z_cap > 0.0)) {
    throw DataError("depth cap must be positive, got " + std::to_string(z_cap));
  }
  if (block < 1) {
    throw DataError("block size must be at least 1, got " +
                    std::to_string(block));
  }
  ImageU8 out(grid.rows * block, grid.cols * block, 3);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const double projected = grid.projected_at(r, c);
      std::array<std::uint8_t, 3> color = kNoDataGray;
      if (std::isfinite(projected)) {
        const double q = std::clamp(1.0 - projected / z_cap, 0.0, 1.0);
        color = detail::quality_color(q);
      }
      for (int y = 0; y < block; ++y) {
        std::uint8_t* row =
            out.pixels.data() +
            (static_cast<std::size_t>(r * block + y) * out.width +
             static_cast<std::size_t>(c) * block) *
                3;
        for (int x = 0; x < block; ++x) {
          row[3 * x] = color[0];
          row[3 * x + 1] = color[1];
          row[3 * x + 2] = color[2];
        }
      }
    }
  }
  return out;
}

/// Empirical CDF of the projected scores over scored tiles, sampled on a
/// uniform grid from 0 to the largest observed score.  Faster-rising
/// curves mean more of the slide sits at good (low) scores.
inline std::vector<CurvePoint> cumsum_curve(const HeatmapGrid& grid,
                                            int bins = 256) {
  grid.validate();
  if (bins < 2) {
    throw DataError("cumulative curve needs at least 2 bins, got " +
                    std::to_string(bins));
  }
  std::vector<double> scores;
  scores.reserve(grid.projected.size());
  for (const double value : grid.projected) {
    if (std::isfinite(value)) scores.push_back(value);
  }
  if (scores.empty()) {
    throw DataError("cumulative curve needs at least one scored tile");
  }
  std::sort(scores.begin(), scores.end());
  const double max_score = scores.back();
  std::vector<CurvePoint> curve(static_cast<std::size_t>(bins));
  const double n = static_cast<double>(scores.size());
  for (int i = 0; i < bins; ++i) {
    const double score =
        max_score * (static_cast<double>(i) / static_cast<double>(bins - 1));
    const auto at_most =
        std::upper_bound(scores.begin(), scores.end(), score) - scores.begin();
    curve[static_cast<std::size_t>(i)] = {score,
                                          static_cast<double>(at_most) / n};
  }
  return curve;
}

/// Accepts a slide when at least pass_ratio of its tissue tiles score at
/// or under the threshold.  Slides without any tissue tile get ratio 0
/// and the no_tissue flag.
inline SlideDecision decide(const HeatmapGrid& grid,
                            double threshold = kAcceptanceThreshold,
                            double pass_ratio = 0.5) {
  grid.validate();
  if (!std::isfinite(threshold)) {
    throw DataError("acceptance threshold must be finite");
  }
  if (!(pass_ratio >= 0.0) || !(pass_ratio <= 1.0)) {
    throw DataError("pass ratio must lie in [0, 1], got " +
                    std::to_string(pass_ratio));
  }
  SlideDecision decision;
  decision.threshold = threshold;
  decision.pass_ratio = pass_ratio;
  long long accepted = 0;
  for (std::size_t i = 0; i < grid.projected.size(); ++i) {
    if (grid.tissue[i] == 0) continue;
    ++decision.n_tissue_tiles;
    if (grid.projected[i] <= threshold) ++accepted;
  }
  if (decision.n_tissue_tiles == 0) {
    decision.no_tissue = true;
    decision.acceptance_ratio = 0.0;
    decision.pass = false;
    return decision;
  }
  decision.acceptance_ratio = static_cast<double>(accepted) /
                              static_cast<double>(decision.n_tissue_tiles);
  decision.pass = decision.acceptance_ratio >= pass_ratio;
  return decision;
}

}  // namespace focusqc
