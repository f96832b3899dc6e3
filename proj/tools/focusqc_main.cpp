// Command-line front end: one binary with subcommands for kernel
// synthesis, patch scoring, slide heatmaps, projection fitting, accuracy
// evaluation, threshold sweeps, synthetic blur-ladder generation, and a
// scoring benchmark.
//
// Exit codes: 0 success (or gate pass), 1 usage error, 2 I/O or data
// error, 3 gate fail.  All file outputs are written to a temporary file
// and renamed, so no partial outputs survive an error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "focusqc/errors.hpp"
#include "focusqc/hvsm.hpp"
#include "focusqc/image.hpp"
#include "focusqc/io/csv.hpp"
#include "focusqc/io/image_source.hpp"
#include "focusqc/io/png_io.hpp"
#include "focusqc/ladder.hpp"
#include "focusqc/ladder_io.hpp"
#include "focusqc/optics.hpp"
#include "focusqc/projection.hpp"
#include "focusqc/scoring.hpp"
#include "focusqc/stats.hpp"
#include "focusqc/wsi.hpp"

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config-file support: a JSON object whose keys mirror the long flags of
// the subcommand.  Values apply only where the flag was not given on the
// command line, so flags always win.

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json parsed = json::parse(focusqc::read_file(path), nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw focusqc::DataError(path + ": config file must hold a JSON object");
  }
  return parsed;
}

template <typename T>
void merge_config(const json& cfg, const CLI::Option* opt, const char* key,
                  T& value) {
  if (opt != nullptr && opt->count() > 0) return;
  const auto it = cfg.find(key);
  if (it == cfg.end()) return;
  try {
    value = it->get<T>();
  } catch (const json::exception&) {
    throw focusqc::DataError(std::string("config key \"") + key +
                             "\" has the wrong type");
  }
}

// ---------------------------------------------------------------------------
// Path checks run before any heavy work so long jobs cannot die at output
// time or discover a missing input halfway through.

void require_file(const std::string& path, const char* what) {
  if (!std::filesystem::is_regular_file(path)) {
    throw focusqc::IoError(std::string(what) + " not found: " + path);
  }
}

void require_parent_dir(const std::string& path) {
  const std::filesystem::path parent =
      std::filesystem::path(path).parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw focusqc::IoError("output directory does not exist: " +
                           parent.string());
  }
}

focusqc::ImageU8 load_full_image(const std::string& path) {
  const auto source = focusqc::open_image(path);
  focusqc::ImageU8 image;
  source->read_rows(0, source->height(), image);
  return image;
}

void emit_json(const json& j, const std::string& out_path) {
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    focusqc::write_file_atomic(out_path, text);
  }
}

// Parses "lo:hi:step" into an inclusive ascending grid.
std::vector<double> parse_grid(const std::string& text) {
  double lo = 0.0, hi = 0.0, step = 0.0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%lf%c", &lo, &hi, &step, &tail) != 3) {
    throw focusqc::DataError("grid must look like lo:hi:step, got \"" + text +
                             "\"");
  }
  if (!(step > 0.0) || hi < lo) {
    throw focusqc::DataError("grid needs hi >= lo and step > 0, got \"" + text +
                             "\"");
  }
  std::vector<double> grid;
  const double slack = step * 1e-9;
  for (double value = lo; value <= hi + slack; value += step) {
    grid.push_back(value);
  }
  return grid;
}

// Parses either an inclusive integer range "0..8" or a comma-separated
// list "0,0.5,1,2" of blur levels.
std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> levels;
  const std::size_t dots = text.find("..");
  if (dots != std::string::npos) {
    const long long lo =
        focusqc::csv_integer(text.substr(0, dots), "level range start");
    const long long hi =
        focusqc::csv_integer(text.substr(dots + 2), "level range end");
    if (hi < lo) throw focusqc::DataError("level range end before start");
    for (long long v = lo; v <= hi; ++v) {
      levels.push_back(static_cast<double>(v));
    }
    return levels;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string field =
        text.substr(start, comma == std::string::npos ? comma : comma - start);
    levels.push_back(focusqc::csv_number(field, "blur level"));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return levels;
}

// ---------------------------------------------------------------------------
// synth-kernel

struct SynthArgs {
  std::string config;
  std::string out;
  double z_star = 4.0;
  double cutoff = 2.0;
  int orders = 7;
  int half_length = 37;
  double na = 0.75;
  double wavelength_m = 550e-9;
  double refractive_index = 1.0;
  double pixel_pitch_m = 0.25e-6;
  double depth_step_m = 0.33e-6;

  CLI::Option* out_opt = nullptr;
  CLI::Option* z_star_opt = nullptr;
  CLI::Option* cutoff_opt = nullptr;
  CLI::Option* orders_opt = nullptr;
  CLI::Option* half_opt = nullptr;
  CLI::Option* na_opt = nullptr;
  CLI::Option* wavelength_opt = nullptr;
  CLI::Option* index_opt = nullptr;
  CLI::Option* pitch_opt = nullptr;
  CLI::Option* depth_opt = nullptr;
};

int run_synth(SynthArgs& a) {
  const json cfg = load_config(a.config);
  merge_config(cfg, a.out_opt, "out", a.out);
  merge_config(cfg, a.z_star_opt, "z_star", a.z_star);
  merge_config(cfg, a.cutoff_opt, "cutoff", a.cutoff);
  merge_config(cfg, a.orders_opt, "orders", a.orders);
  merge_config(cfg, a.half_opt, "half_length", a.half_length);
  merge_config(cfg, a.na_opt, "na", a.na);
  merge_config(cfg, a.wavelength_opt, "wavelength_m", a.wavelength_m);
  merge_config(cfg, a.index_opt, "refractive_index", a.refractive_index);
  merge_config(cfg, a.pitch_opt, "pixel_pitch_m", a.pixel_pitch_m);
  merge_config(cfg, a.depth_opt, "depth_step_m", a.depth_step_m);
  if (a.out.empty()) {
    throw focusqc::DataError("synth-kernel needs an output path (--out)");
  }
  require_parent_dir(a.out);

  focusqc::PsfModel model;
  model.numerical_aperture = a.na;
  model.wavelength = a.wavelength_m;
  model.refractive_index = a.refractive_index;
  model.pixel_pitch = a.pixel_pitch_m;
  model.depth_step = a.depth_step_m;

  const focusqc::HvsmKernel kernel = focusqc::synthesize_kernel(
      model, a.z_star, a.orders, a.cutoff, a.half_length);
  focusqc::save_kernel(kernel, a.out);

  json report;
  report["out"] = a.out;
  report["taps"] = kernel.taps.size();
  report["cutoff"] = kernel.cutoff;
  report["fit_band_limit"] = kernel.fit_band_limit;
  report["fit_residual"] = kernel.fit_residual;
  report["z_star"] = kernel.z_star;
  emit_json(report, "");
  return 0;
}

// ---------------------------------------------------------------------------
// score

struct ScoreArgs {
  std::string config;
  std::vector<std::string> images;
  std::string kernel;
  std::string projection;
  std::string out;
  int moment_order = 2;

  CLI::Option* kernel_opt = nullptr;
  CLI::Option* projection_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* moment_opt = nullptr;
};

int run_score(ScoreArgs& a) {
  const json cfg = load_config(a.config);
  merge_config(cfg, a.kernel_opt, "kernel", a.kernel);
  merge_config(cfg, a.projection_opt, "projection", a.projection);
  merge_config(cfg, a.out_opt, "out", a.out);
  merge_config(cfg, a.moment_opt, "moment_order", a.moment_order);
  if (a.kernel.empty()) {
    throw focusqc::DataError("score needs a kernel file (--kernel)");
  }

  require_file(a.kernel, "kernel file");
  if (!a.projection.empty()) require_file(a.projection, "projection file");
  for (const std::string& path : a.images) require_file(path, "image");
  if (!a.out.empty()) require_parent_dir(a.out);

  const focusqc::HvsmKernel kernel = focusqc::load_kernel(a.kernel);
  focusqc::ProjectionModel projection;
  const bool have_projection = !a.projection.empty();
  if (have_projection) projection = focusqc::load_projection(a.projection);
  focusqc::ScoringParams params;
  params.moment_order = a.moment_order;

  focusqc::CsvTable table;
  table.header = {"path",    "raw_score", "projected_score",
                  "n_retained", "sigma95",   "degenerate_flag"};
  focusqc::ScoringScratch scratch;
  for (const std::string& path : a.images) {
    const focusqc::ImageU8 image = load_full_image(path);
    const focusqc::PatchScore score =
        focusqc::score_patch(image, kernel, params, &scratch);
    table.rows.push_back(
        {path, focusqc::format_double(score.raw),
         have_projection
             ? focusqc::format_double(
                   focusqc::project_score(projection, score.raw))
             : std::string(),
         std::to_string(score.n_retained),
         focusqc::format_double(score.sigma95),
         score.degenerate ? "1" : "0"});
  }

  if (a.out.empty()) {
    std::cout << focusqc::format_csv(table);
  } else {
    focusqc::write_csv(a.out, table);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// heatmap

struct HeatmapArgs {
  std::string config;
  std::string image;
  std::string kernel;
  std::string projection;
  std::string out_png;
  std::string out_csv;
  std::string out_curve;
  std::string slide_id;
  int patch = 1024;
  double threshold = focusqc::kAcceptanceThreshold;
  double pass_ratio = 0.5;
  double z_cap = 8.0;
  double max_mean = 0.92;
  double min_std = 0.02;
  int block = 16;
  int bins = 256;
  int jobs = 1;
  bool gate = false;

  CLI::Option* kernel_opt = nullptr;
  CLI::Option* projection_opt = nullptr;
  CLI::Option* out_png_opt = nullptr;
  CLI::Option* out_csv_opt = nullptr;
  CLI::Option* out_curve_opt = nullptr;
  CLI::Option* patch_opt = nullptr;
  CLI::Option* threshold_opt = nullptr;
  CLI::Option* pass_ratio_opt = nullptr;
  CLI::Option* z_cap_opt = nullptr;
  CLI::Option* max_mean_opt = nullptr;
  CLI::Option* min_std_opt = nullptr;
  CLI::Option* block_opt = nullptr;
  CLI::Option* bins_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;
};

int run_heatmap(HeatmapArgs& a) {
  const json cfg = load_config(a.config);
  merge_config(cfg, a.kernel_opt, "kernel", a.kernel);
  merge_config(cfg, a.projection_opt, "projection", a.projection);
  merge_config(cfg, a.out_png_opt, "out_png", a.out_png);
  merge_config(cfg, a.out_csv_opt, "out_csv", a.out_csv);
  merge_config(cfg, a.out_curve_opt, "out_curve", a.out_curve);
  merge_config(cfg, a.patch_opt, "patch", a.patch);
  merge_config(cfg, a.threshold_opt, "threshold", a.threshold);
  merge_config(cfg, a.pass_ratio_opt, "pass_ratio", a.pass_ratio);
  merge_config(cfg, a.z_cap_opt, "z_cap", a.z_cap);
  merge_config(cfg, a.max_mean_opt, "max_mean", a.max_mean);
  merge_config(cfg, a.min_std_opt, "min_std", a.min_std);
  merge_config(cfg, a.block_opt, "block", a.block);
  merge_config(cfg, a.bins_opt, "bins", a.bins);
  merge_config(cfg, a.jobs_opt, "jobs", a.jobs);
  if (a.kernel.empty() || a.projection.empty()) {
    throw focusqc::DataError(
        "heatmap needs kernel and projection files (--kernel, --projection)");
  }

  require_file(a.image, "slide image");
  require_file(a.kernel, "kernel file");
  require_file(a.projection, "projection file");
  for (const std::string* out : {&a.out_png, &a.out_csv, &a.out_curve}) {
    if (!out->empty()) require_parent_dir(*out);
  }

  const focusqc::HvsmKernel kernel = focusqc::load_kernel(a.kernel);
  const focusqc::ProjectionModel projection =
      focusqc::load_projection(a.projection);
  focusqc::TissueConfig tissue;
  tissue.max_mean = a.max_mean;
  tissue.min_std = a.min_std;
  if (a.slide_id.empty()) {
    a.slide_id = std::filesystem::path(a.image).stem().string();
  }

  const auto source = focusqc::open_image(a.image);
  const focusqc::HeatmapGrid grid = focusqc::tile_and_score(
      *source, kernel, focusqc::ScoringParams{}, projection, tissue, a.patch,
      a.jobs, a.slide_id);

  if (!a.out_png.empty()) {
    focusqc::write_png(a.out_png,
                       focusqc::render_heatmap(grid, a.z_cap, a.block));
  }
  if (!a.out_csv.empty()) {
    focusqc::CsvTable tiles;
    tiles.header = {"row", "col", "tissue", "raw_score", "projected_score"};
    for (int r = 0; r < grid.rows; ++r) {
      for (int c = 0; c < grid.cols; ++c) {
        tiles.rows.push_back({std::to_string(r), std::to_string(c),
                              grid.tissue_at(r, c) ? "1" : "0",
                              focusqc::format_double(grid.raw_at(r, c)),
                              focusqc::format_double(grid.projected_at(r, c))});
      }
    }
    focusqc::write_csv(a.out_csv, tiles);
  }
  const focusqc::SlideDecision decision =
      focusqc::decide(grid, a.threshold, a.pass_ratio);
  if (!a.out_curve.empty()) {
    focusqc::CsvTable curve_table;
    curve_table.header = {"score", "cdf"};
    if (!decision.no_tissue) {
      for (const focusqc::CurvePoint& point :
           focusqc::cumsum_curve(grid, a.bins)) {
        curve_table.rows.push_back({focusqc::format_double(point.score),
                                    focusqc::format_double(point.cdf)});
      }
    }
    focusqc::write_csv(a.out_curve, curve_table);
  }

  json report;
  report["slide_id"] = grid.slide_id;
  report["rows"] = grid.rows;
  report["cols"] = grid.cols;
  report["n_tissue_tiles"] = decision.n_tissue_tiles;
  report["acceptance_ratio"] = decision.acceptance_ratio;
  report["threshold"] = decision.threshold;
  report["pass_ratio"] = decision.pass_ratio;
  report["pass"] = decision.pass;
  report["no_tissue"] = decision.no_tissue;
  emit_json(report, "");

  if (a.gate && !decision.pass) return 3;
  return 0;
}

// ---------------------------------------------------------------------------
// fit-projection

struct FitArgs {
  std::string config;
  std::string train;
  std::string out;
  int window_lo = -3;
  int window_hi = 3;

  CLI::Option* train_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* lo_opt = nullptr;
  CLI::Option* hi_opt = nullptr;
};

int run_fit(FitArgs& a) {
  const json cfg = load_config(a.config);
  merge_config(cfg, a.train_opt, "train", a.train);
  merge_config(cfg, a.out_opt, "out", a.out);
  merge_config(cfg, a.lo_opt, "window_lo", a.window_lo);
  merge_config(cfg, a.hi_opt, "window_hi", a.window_hi);
  if (a.train.empty() || a.out.empty()) {
    throw focusqc::DataError(
        "fit-projection needs training scores and an output path "
        "(--train, --out)");
  }

  require_file(a.train, "training csv");
  require_parent_dir(a.out);

  const focusqc::TrainingProfiles profiles =
      focusqc::read_training_csv(a.train);
  const focusqc::ProjectionModel model =
      focusqc::fit_projection(profiles, {a.window_lo, a.window_hi});
  focusqc::save_projection(a.out, model);

  json report;
  report["out"] = a.out;
  report["a_star"] = model.a_star;
  report["b_star"] = model.b_star;
  report["c_star"] = model.c_star;
  report["score_ceiling"] = model.score_ceiling;
  report["profiles"] = profiles.scores.size();
  emit_json(report, "");
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string config;
  std::string pred;
  std::string truth;
  std::string out;
  bool logistic = false;

  CLI::Option* pred_opt = nullptr;
  CLI::Option* truth_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

int run_eval(EvalArgs& a) {
  const json cfg = load_config(a.config);
  merge_config(cfg, a.pred_opt, "pred", a.pred);
  merge_config(cfg, a.truth_opt, "truth", a.truth);
  merge_config(cfg, a.out_opt, "out", a.out);
  if (a.pred.empty() || a.truth.empty()) {
    throw focusqc::DataError(
        "eval needs prediction and truth files (--pred, --truth)");
  }

  require_file(a.pred, "prediction csv");
  require_file(a.truth, "truth csv");
  if (!a.out.empty()) require_parent_dir(a.out);

  const focusqc::CsvTable pred = focusqc::read_csv(a.pred);
  const focusqc::CsvTable truth = focusqc::read_csv(a.truth);
  const std::size_t pred_path = pred.column("path");
  const std::size_t pred_score = pred.column("raw_score");
  const std::size_t truth_path = truth.column("path");
  const std::size_t truth_z = truth.column("z");

  // Rows join on the exact path, falling back to the bare filename so
  // predictions scored from another directory still line up with labels
  // written next to the images.
  std::map<std::string, double> depth_by_path;
  std::map<std::string, double> depth_by_name;
  std::set<std::string> ambiguous_names;
  for (const auto& row : truth.rows) {
    const std::string& path = row[truth_path];
    const double z = focusqc::csv_number(row[truth_z], "z");
    if (!depth_by_path.emplace(path, z).second) {
      throw focusqc::DataError("truth csv repeats path " + path);
    }
    const std::string name = std::filesystem::path(path).filename().string();
    if (!depth_by_name.emplace(name, z).second) ambiguous_names.insert(name);
  }

  focusqc::PairedSamples samples;
  for (const auto& row : pred.rows) {
    const std::string& path = row[pred_path];
    auto it = depth_by_path.find(path);
    if (it == depth_by_path.end()) {
      const std::string name = std::filesystem::path(path).filename().string();
      if (ambiguous_names.count(name) != 0) {
        throw focusqc::DataError("several truth rows share the filename of " +
                                 path + "; use full paths");
      }
      it = depth_by_name.find(name);
      if (it == depth_by_name.end()) {
        throw focusqc::DataError("truth csv has no z level for " + path);
      }
    }
    samples.predictions.push_back(
        focusqc::csv_number(row[pred_score], "raw_score"));
    // Ground truth is the unsigned defocus distance.
    samples.truths.push_back(std::fabs(it->second));
  }

  const focusqc::CorrelationReport report =
      focusqc::evaluate_pairs(samples, a.logistic);
  json j;
  j["n"] = report.n;
  j["plcc"] = report.plcc;
  j["srcc"] = report.srcc;
  j["krcc"] = report.krcc;
  j["rmse"] = report.rmse;
  j["logistic_fitted"] = report.logistic_fitted;
  emit_json(j, "");
  if (!a.out.empty()) emit_json(j, a.out);
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  std::string config;
  std::string slides_dir;
  std::string subjective;
  std::string grid_text;
  std::string out;

  CLI::Option* slides_opt = nullptr;
  CLI::Option* subjective_opt = nullptr;
  CLI::Option* grid_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

int run_sweep(SweepArgs& a) {
  const json cfg = load_config(a.config);
  merge_config(cfg, a.slides_opt, "slides", a.slides_dir);
  merge_config(cfg, a.subjective_opt, "subjective", a.subjective);
  merge_config(cfg, a.grid_opt, "grid", a.grid_text);
  merge_config(cfg, a.out_opt, "out", a.out);
  if (a.slides_dir.empty() || a.subjective.empty() || a.grid_text.empty()) {
    throw focusqc::DataError(
        "sweep needs a slide directory, subjective ratios, and a grid "
        "(--slides, --subjective, --grid)");
  }

  if (!std::filesystem::is_directory(a.slides_dir)) {
    throw focusqc::IoError("slide directory not found: " + a.slides_dir);
  }
  require_file(a.subjective, "subjective csv");
  if (!a.out.empty()) require_parent_dir(a.out);
  const std::vector<double> grid = parse_grid(a.grid_text);

  const focusqc::CsvTable subjective = focusqc::read_csv(a.subjective);
  const std::size_t id_col = subjective.column("slide_id");
  const std::size_t ratio_col = subjective.column("acceptance_ratio");

  std::vector<std::vector<double>> slide_scores;
  std::vector<double> subjective_ratios;
  for (const auto& row : subjective.rows) {
    const std::string tile_csv =
        (std::filesystem::path(a.slides_dir) / (row[id_col] + ".csv"))
            .string();
    require_file(tile_csv, "per-slide tile csv");
    const focusqc::CsvTable tiles = focusqc::read_csv(tile_csv);
    const std::size_t tissue_col = tiles.column("tissue");
    const std::size_t score_col = tiles.column("projected_score");
    std::vector<double> scores;
    for (const auto& tile : tiles.rows) {
      if (tile[tissue_col] == "1") {
        scores.push_back(
            focusqc::csv_number(tile[score_col], "projected_score"));
      }
    }
    if (scores.empty()) {
      throw focusqc::DataError("slide " + row[id_col] + " has no tissue tiles");
    }
    slide_scores.push_back(std::move(scores));
    subjective_ratios.push_back(
        focusqc::csv_number(row[ratio_col], "acceptance_ratio"));
  }

  const focusqc::SweepResult result =
      focusqc::threshold_sweep(slide_scores, subjective_ratios, grid);

  if (!a.out.empty()) {
    focusqc::CsvTable curve;
    curve.header = {"threshold", "plcc"};
    for (std::size_t i = 0; i < result.thresholds.size(); ++i) {
      curve.rows.push_back({focusqc::format_double(result.thresholds[i]),
                            focusqc::format_double(result.plcc_curve[i])});
    }
    focusqc::write_csv(a.out, curve);
  }

  json report;
  report["best_threshold"] = result.best_threshold;
  report["n_slides"] = slide_scores.size();
  report["n_thresholds"] = result.thresholds.size();
  emit_json(report, "");
  return 0;
}

// ---------------------------------------------------------------------------
// make-ladder

struct LadderArgs {
  std::string config;
  std::uint64_t seed = 0;
  int count = 1;
  std::string levels_text = "0..8";
  std::string out_dir;
  int size = 256;
  std::string family = "defocus";

  CLI::Option* seed_opt = nullptr;
  CLI::Option* count_opt = nullptr;
  CLI::Option* levels_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* size_opt = nullptr;
  CLI::Option* family_opt = nullptr;
};

int run_ladder(LadderArgs& a) {
  const json cfg = load_config(a.config);
  merge_config(cfg, a.seed_opt, "seed", a.seed);
  merge_config(cfg, a.count_opt, "count", a.count);
  merge_config(cfg, a.levels_opt, "levels", a.levels_text);
  merge_config(cfg, a.out_opt, "out", a.out_dir);
  merge_config(cfg, a.size_opt, "size", a.size);
  merge_config(cfg, a.family_opt, "family", a.family);
  if (a.out_dir.empty()) {
    throw focusqc::DataError("make-ladder needs an output directory (--out)");
  }

  focusqc::BlurLadderSpec spec;
  spec.seed = a.seed;
  spec.count = a.count;
  spec.levels = parse_levels(a.levels_text);
  spec.texture_size = a.size;
  if (a.family == "defocus") {
    spec.family = focusqc::BlurFamily::defocus;
  } else if (a.family == "gaussian") {
    spec.family = focusqc::BlurFamily::gaussian;
  } else {
    throw focusqc::DataError("family must be defocus or gaussian, got " +
                             a.family);
  }

  const std::vector<focusqc::LadderEntry> entries =
      focusqc::emit_blur_ladder(spec, a.out_dir);

  json report;
  report["out"] = a.out_dir;
  report["images"] = entries.size();
  report["textures"] = spec.count;
  report["levels"] = spec.levels;
  report["labels"] =
      (std::filesystem::path(a.out_dir) / "labels.csv").string();
  emit_json(report, "");
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string config;
  int size = 1024;
  int iters = 20;
  std::uint64_t seed = 4242;

  CLI::Option* size_opt = nullptr;
  CLI::Option* iters_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
};

int run_bench(BenchArgs& a) {
  const json cfg = load_config(a.config);
  merge_config(cfg, a.size_opt, "size", a.size);
  merge_config(cfg, a.iters_opt, "iters", a.iters);
  merge_config(cfg, a.seed_opt, "seed", a.seed);
  const std::vector<int> allowed = {64, 128, 256, 512, 1024, 2048};
  if (std::find(allowed.begin(), allowed.end(), a.size) == allowed.end()) {
    throw focusqc::DataError("bench size must be one of 64/128/256/512/1024/"
                             "2048, got " +
                             std::to_string(a.size));
  }
  if (a.iters < 1) {
    throw focusqc::DataError("bench iters must be at least 1");
  }

  const focusqc::HvsmKernel kernel =
      focusqc::synthesize_kernel(focusqc::PsfModel{}, 4.0);
  const focusqc::ScoringParams params;
  focusqc::ScoringScratch scratch;

  std::vector<double> seconds;
  seconds.reserve(static_cast<std::size_t>(a.iters));
  double score_sum = 0.0;
  for (int i = 0; i < a.iters; ++i) {
    // Texture generation stays outside the timed region.
    focusqc::DeterministicRng rng(a.seed +
                                  static_cast<std::uint64_t>(i) * 0x9E3779B9u);
    const focusqc::ImageU8 patch =
        focusqc::quantize_unit(focusqc::make_texture(rng, a.size));
    const auto start = std::chrono::steady_clock::now();
    const focusqc::PatchScore score =
        focusqc::score_patch(patch, kernel, params, &scratch);
    const auto stop = std::chrono::steady_clock::now();
    score_sum += score.raw;
    seconds.push_back(std::chrono::duration<double>(stop - start).count());
  }

  const double mean =
      std::accumulate(seconds.begin(), seconds.end(), 0.0) /
      static_cast<double>(seconds.size());
  const double minimum = *std::min_element(seconds.begin(), seconds.end());

  json report;
  report["size"] = a.size;
  report["iters"] = a.iters;
  report["mean_seconds"] = mean;
  report["min_seconds"] = minimum;
  report["ns_per_pixel"] =
      mean * 1e9 / (static_cast<double>(a.size) * static_cast<double>(a.size));
  report["samples"] = seconds;
  report["mean_raw_score"] = score_sum / static_cast<double>(a.iters);
  emit_json(report, "");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "No-reference focus quality assessment for microscopy patches and "
      "whole-slide images"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd =
      app.add_subcommand("synth-kernel", "Design a deblur kernel and save it");
  synth_cmd->add_option("--config", synth.config, "JSON config file");
  synth.out_opt = synth_cmd->add_option("--out", synth.out, "Kernel JSON path");
  synth.z_star_opt = synth_cmd->add_option(
      "--z-star", synth.z_star, "Defocus level the kernel compensates");
  synth.cutoff_opt =
      synth_cmd->add_option("--cutoff", synth.cutoff, "Basis cutoff, rad");
  synth.orders_opt = synth_cmd->add_option("--orders", synth.orders,
                                           "Number of even-derivative bases");
  synth.half_opt = synth_cmd->add_option("--half-length", synth.half_length,
                                         "One-sided basis tap count");
  synth.na_opt = synth_cmd->add_option("--na", synth.na, "Numerical aperture");
  synth.wavelength_opt = synth_cmd->add_option(
      "--wavelength", synth.wavelength_m, "Wavelength in meters");
  synth.index_opt = synth_cmd->add_option(
      "--refractive-index", synth.refractive_index, "Immersion index");
  synth.pitch_opt = synth_cmd->add_option("--pixel-pitch", synth.pixel_pitch_m,
                                          "Meters per pixel");
  synth.depth_opt = synth_cmd->add_option("--depth-step", synth.depth_step_m,
                                          "Meters per focus level");

  ScoreArgs score;
  CLI::App* score_cmd =
      app.add_subcommand("score", "Score image patches to CSV");
  score_cmd->add_option("--config", score.config, "JSON config file");
  score_cmd->add_option("images", score.images, "Patch images (PNG or TIFF)")
      ->required();
  score.kernel_opt =
      score_cmd->add_option("--kernel", score.kernel, "Kernel JSON path");
  score.projection_opt = score_cmd->add_option("--projection", score.projection,
                                               "Projection JSON path");
  score.out_opt =
      score_cmd->add_option("--out", score.out, "Output CSV (default stdout)");
  score.moment_opt = score_cmd->add_option("--moment-order", score.moment_order,
                                           "Central moment order (even)");

  HeatmapArgs heat;
  CLI::App* heat_cmd = app.add_subcommand(
      "heatmap", "Tile a slide, score it, and emit heatmap artifacts");
  heat_cmd->add_option("--config", heat.config, "JSON config file");
  heat_cmd->add_option("image", heat.image, "Slide image (PNG or TIFF)")
      ->required();
  heat.kernel_opt =
      heat_cmd->add_option("--kernel", heat.kernel, "Kernel JSON path");
  heat.projection_opt = heat_cmd->add_option("--projection", heat.projection,
                                             "Projection JSON path");
  heat.patch_opt =
      heat_cmd->add_option("--patch", heat.patch, "Tile size in pixels");
  heat.threshold_opt = heat_cmd->add_option("--threshold", heat.threshold,
                                            "Acceptance threshold");
  heat.pass_ratio_opt = heat_cmd->add_option(
      "--pass-ratio", heat.pass_ratio, "Tissue fraction needed to pass");
  heat.out_png_opt =
      heat_cmd->add_option("--out-png", heat.out_png, "Heatmap PNG path");
  heat.out_csv_opt =
      heat_cmd->add_option("--out-csv", heat.out_csv, "Per-tile CSV path");
  heat.out_curve_opt = heat_cmd->add_option("--out-curve", heat.out_curve,
                                            "Cumulative curve CSV path");
  heat.block_opt =
      heat_cmd->add_option("--block", heat.block, "Pixels per tile in the PNG");
  heat.bins_opt =
      heat_cmd->add_option("--bins", heat.bins, "Cumulative curve bins");
  heat.z_cap_opt = heat_cmd->add_option("--z-cap", heat.z_cap,
                                        "Projected score mapped to blue");
  heat.max_mean_opt = heat_cmd->add_option("--max-mean", heat.max_mean,
                                           "Tissue mean-intensity ceiling");
  heat.min_std_opt = heat_cmd->add_option("--min-std", heat.min_std,
                                          "Tissue std-deviation floor");
  heat.jobs_opt =
      heat_cmd->add_option("--jobs", heat.jobs, "Tile worker threads")
          ->check(CLI::PositiveNumber);
  heat_cmd->add_option("--slide-id", heat.slide_id,
                       "Slide label (default: image stem)");
  heat_cmd->add_flag("--gate", heat.gate,
                     "Exit 3 when the slide fails the acceptance decision");

  FitArgs fit;
  CLI::App* fit_cmd = app.add_subcommand(
      "fit-projection", "Fit the score projection from depth-labeled scores");
  fit_cmd->add_option("--config", fit.config, "JSON config file");
  fit.train_opt = fit_cmd->add_option("--train", fit.train,
                                      "Training CSV (profile_id,z,raw_score)");
  fit.out_opt = fit_cmd->add_option("--out", fit.out, "Projection JSON path");
  fit.lo_opt =
      fit_cmd->add_option("--window-lo", fit.window_lo, "Fit window low z");
  fit.hi_opt =
      fit_cmd->add_option("--window-hi", fit.window_hi, "Fit window high z");

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "Correlate predicted scores with ground-truth z levels");
  eval_cmd->add_option("--config", eval.config, "JSON config file");
  eval.pred_opt = eval_cmd->add_option("--pred", eval.pred,
                                       "Prediction CSV (path,raw_score,...)");
  eval.truth_opt =
      eval_cmd->add_option("--truth", eval.truth, "Truth CSV (path,z)");
  eval.out_opt =
      eval_cmd->add_option("--out", eval.out, "Also write the JSON report");
  eval_cmd->add_flag("--logistic", eval.logistic,
                     "Fit a monotone logistic before PLCC/RMSE");

  SweepArgs sweep;
  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "Sweep acceptance thresholds against subjective ratios");
  sweep_cmd->add_option("--config", sweep.config, "JSON config file");
  sweep.slides_opt = sweep_cmd->add_option(
      "--slides", sweep.slides_dir, "Directory of per-slide tile CSVs");
  sweep.subjective_opt = sweep_cmd->add_option(
      "--subjective", sweep.subjective,
      "Subjective CSV (slide_id,acceptance_ratio)");
  sweep.grid_opt =
      sweep_cmd->add_option("--grid", sweep.grid_text, "Grid as lo:hi:step");
  sweep.out_opt =
      sweep_cmd->add_option("--out", sweep.out, "PLCC curve CSV path");

  LadderArgs ladder;
  CLI::App* ladder_cmd = app.add_subcommand(
      "make-ladder", "Generate a synthetic defocus ladder with labels");
  ladder_cmd->add_option("--config", ladder.config, "JSON config file");
  ladder.seed_opt = ladder_cmd->add_option("--seed", ladder.seed, "Base seed");
  ladder.count_opt =
      ladder_cmd->add_option("--count", ladder.count, "Number of textures");
  ladder.levels_opt = ladder_cmd->add_option(
      "--levels", ladder.levels_text, "Levels as lo..hi or comma list");
  ladder.out_opt =
      ladder_cmd->add_option("--out", ladder.out_dir, "Output directory");
  ladder.size_opt =
      ladder_cmd->add_option("--size", ladder.size, "Texture side in pixels");
  ladder.family_opt = ladder_cmd->add_option("--family", ladder.family,
                                             "Blur family: defocus|gaussian");

  BenchArgs bench;
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "Time patch scoring on random textures");
  bench_cmd->add_option("--config", bench.config, "JSON config file");
  bench.size_opt =
      bench_cmd->add_option("--size", bench.size, "Patch side in pixels")
          ->check(CLI::IsMember({64, 128, 256, 512, 1024, 2048}));
  bench.iters_opt =
      bench_cmd->add_option("--iters", bench.iters, "Number of trials")
          ->check(CLI::PositiveNumber);
  bench.seed_opt =
      bench_cmd->add_option("--seed", bench.seed, "Texture seed base");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (score_cmd->parsed()) return run_score(score);
    if (heat_cmd->parsed()) return run_heatmap(heat);
    if (fit_cmd->parsed()) return run_fit(fit);
    if (eval_cmd->parsed()) return run_eval(eval);
    if (sweep_cmd->parsed()) return run_sweep(sweep);
    if (ladder_cmd->parsed()) return run_ladder(ladder);
    if (bench_cmd->parsed()) return run_bench(bench);
  } catch (const focusqc::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const focusqc::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
