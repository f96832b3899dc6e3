#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "focusqc/errors.hpp"
#include "focusqc/io/atomic_file.hpp"
#include "focusqc/io/csv.hpp"

namespace focusqc {

/// Calibrated map from raw patch scores to a linearized depth-like scale.
/// The fitted curve is the Gaussian a*exp(-((z-b)/c)^2) describing the
/// inverse mean score profile; projecting inverts it, so an in-model score
/// at depth z comes back as |z - b| + b.
struct ProjectionModel {
  double a_star = 0.0;
  double b_star = 0.0;
  double c_star = 0.0;
  double score_ceiling = 0.0;
  double clamp_floor = 1e-9;
  std::array<int, 2> fit_window = {-3, 3};

  void validate() const {
    if (!(a_star > 0.0)) {
      throw DataError("projection a_star must be positive, got " +
                      std::to_string(a_star));
    }
    if (!(c_star > 0.0)) {
      throw DataError("projection c_star must be positive, got " +
                      std::to_string(c_star));
    }
    if (!(clamp_floor > 0.0) || !(clamp_floor < a_star)) {
      throw DataError("projection clamp_floor must lie in (0, a_star)");
    }
    if (!std::isfinite(a_star) || !std::isfinite(b_star) ||
        !std::isfinite(c_star) || !std::isfinite(score_ceiling)) {
      throw DataError("projection parameters must be finite");
    }
    if (fit_window[0] >= fit_window[1]) {
      throw DataError("projection fit window must satisfy lo < hi");
    }
  }
};

/// Depth-labeled training scores: one row per captured profile, one column
/// per z level.
struct TrainingProfiles {
  std::vector<std::vector<double>> scores;
  std::vector<int> z_levels;

  void validate() const {
    if (z_levels.size() < 2) {
      throw DataError("training profiles need at least two z levels");
    }
    for (std::size_t i = 1; i < z_levels.size(); ++i) {
      if (z_levels[i] <= z_levels[i - 1]) {
        throw DataError("training z levels must be strictly increasing");
      }
    }
    if (scores.empty()) {
      throw DataError("training profiles are empty");
    }
    for (const auto& row : scores) {
      if (row.size() != z_levels.size()) {
        throw DataError("every training profile needs one score per z level (" +
                        std::to_string(row.size()) + " vs " +
                        std::to_string(z_levels.size()) + ")");
      }
    }
  }
};

namespace detail {

inline double gaussian_value(double z, double a, double b, double c) {
  const double u = (z - b) / c;
  return a * std::exp(-u * u);
}

}  // namespace detail

/// Fits the projection model from training profiles.  Steps: average the
/// profiles, flip the mean profile into an inverse profile (ceiling minus
/// mean), then fit the Gaussian to the inverse profile over the window by
/// damped Gauss-Newton (step halving).  Initial guess: a = peak of the
/// inverse profile, b = 0, and c from the inverse-weighted second moment
/// of the window depths.
///
/// Throws FitError carrying the final residual when the iteration fails to
/// reach a relative step of 1e-10 within 200 iterations, or when the
/// inverse profile is identically zero (flat profiles).
inline ProjectionModel fit_projection(const TrainingProfiles& profiles,
                                      std::array<int, 2> window = {-3, 3}) {
  profiles.validate();
  if (profiles.scores.size() < 2) {
    throw DataError("projection fit needs at least two profiles, got " +
                    std::to_string(profiles.scores.size()));
  }
  if (window[0] >= window[1]) {
    throw DataError("projection fit window must satisfy lo < hi");
  }
  if (window[0] < profiles.z_levels.front() ||
      window[1] > profiles.z_levels.back()) {
    throw DataError("projection fit window [" + std::to_string(window[0]) +
                    ", " + std::to_string(window[1]) +
                    "] is outside the training z range");
  }

  const std::size_t level_count = profiles.z_levels.size();
  std::vector<double> mean(level_count, 0.0);
  for (const auto& row : profiles.scores) {
    for (std::size_t i = 0; i < level_count; ++i) mean[i] += row[i];
  }
  for (double& m : mean) m /= static_cast<double>(profiles.scores.size());

  const double ceiling = *std::max_element(mean.begin(), mean.end());
  std::vector<double> window_z;
  std::vector<double> window_inverse;
  double peak_inverse = 0.0;
  for (std::size_t i = 0; i < level_count; ++i) {
    const double inverse = ceiling - mean[i];
    peak_inverse = std::max(peak_inverse, inverse);
    if (profiles.z_levels[i] >= window[0] &&
        profiles.z_levels[i] <= window[1]) {
      window_z.push_back(static_cast<double>(profiles.z_levels[i]));
      window_inverse.push_back(inverse);
    }
  }
  if (window_z.size() < 4) {
    throw DataError("projection fit window covers only " +
                    std::to_string(window_z.size()) +
                    " z levels; at least 4 required");
  }
  if (!(peak_inverse > 0.0)) {
    throw FitError(
        "projection fit is degenerate: inverse profile is identically zero "
        "(flat training profiles)",
        0.0);
  }

  // Initial guess.  The weighted second moment estimates the Gaussian
  // width: for a*exp(-(z/c)^2) the inverse-weighted variance of z tends to
  // c^2/2, hence c0 = sqrt(2*variance).
  double weight_sum = 0.0;
  double first = 0.0;
  double second = 0.0;
  for (std::size_t i = 0; i < window_z.size(); ++i) {
    const double w = std::max(window_inverse[i], 0.0);
    weight_sum += w;
    first += w * window_z[i];
    second += w * window_z[i] * window_z[i];
  }
  double c0 = 1.0;
  if (weight_sum > 0.0) {
    const double mean_z = first / weight_sum;
    const double variance = std::max(second / weight_sum - mean_z * mean_z,
                                     1e-12);
    c0 = std::sqrt(2.0 * variance);
  }

  const int n = static_cast<int>(window_z.size());
  Eigen::VectorXd target(n);
  for (int i = 0; i < n; ++i) target(i) = window_inverse[i];

  double a = peak_inverse;
  double b = 0.0;
  double c = c0;
  const int max_iterations = 200;
  const double step_tolerance = 1e-10;
  bool converged = false;
  auto residual_norm = [&](double pa, double pb, double pc) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r =
          detail::gaussian_value(window_z[i], pa, pb, pc) - target(i);
      sum += r * r;
    }
    return sum;
  };
  for (int iteration = 0; iteration < max_iterations; ++iteration) {
    Eigen::MatrixXd jacobian(n, 3);
    Eigen::VectorXd residual(n);
    for (int i = 0; i < n; ++i) {
      const double u = (window_z[i] - b) / c;
      const double e = std::exp(-u * u);
      const double m = a * e;
      residual(i) = m - target(i);
      jacobian(i, 0) = e;
      jacobian(i, 1) = m * 2.0 * u / c;
      jacobian(i, 2) = m * 2.0 * u * u / c;
    }
    const Eigen::Vector3d delta =
        jacobian.colPivHouseholderQr().solve(-residual);
    const double cost = residual.squaredNorm();
    double step = 1.0;
    double na = a;
    double nb = b;
    double nc = c;
    for (int halving = 0; halving < 30; ++halving) {
      na = a + step * delta(0);
      nb = b + step * delta(1);
      nc = c + step * delta(2);
      if (na > 0.0 && nc > 0.0 && residual_norm(na, nb, nc) <= cost) {
        break;
      }
      step *= 0.5;
    }
    const double scale =
        std::max({std::fabs(na), std::fabs(nb), std::fabs(nc), 1e-30});
    const double relative_step =
        std::max({std::fabs(na - a), std::fabs(nb - b), std::fabs(nc - c)}) /
        scale;
    a = na;
    b = nb;
    c = nc;
    if (relative_step <= step_tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw FitError("projection fit did not converge within " +
                       std::to_string(max_iterations) + " iterations",
                   std::sqrt(residual_norm(a, b, c)));
  }

  ProjectionModel model;
  model.a_star = a;
  model.b_star = b;
  model.c_star = std::fabs(c);
  model.score_ceiling = ceiling;
  model.fit_window = window;
  model.validate();
  return model;
}

/// Maps a raw score onto the linearized scale.  The inverse score
/// ceiling - raw is clamped into [clamp_floor, a_star], which makes the
/// map total and its output range exactly
/// [b_star, c_star*sqrt(-ln(clamp_floor/a_star)) + b_star].
inline double project_score(const ProjectionModel& model, double raw) {
  model.validate();
  double inverse = model.score_ceiling - raw;
  if (inverse < model.clamp_floor) inverse = model.clamp_floor;
  if (inverse > model.a_star) inverse = model.a_star;
  return model.c_star * std::sqrt(-std::log(inverse / model.a_star)) +
         model.b_star;
}

namespace detail {

inline const nlohmann::json& projection_field(const nlohmann::json& j,
                                              const char* name) {
  const auto it = j.find(name);
  if (it == j.end()) {
    throw DataError(std::string("projection file missing field \"") + name +
                    "\"");
  }
  return *it;
}

inline double projection_number(const nlohmann::json& j, const char* name) {
  const auto& field = projection_field(j, name);
  if (!field.is_number()) {
    throw DataError(std::string("projection field \"") + name +
                    "\" must be a number");
  }
  return field.get<double>();
}

}  // namespace detail

inline void save_projection(const std::string& path,
                            const ProjectionModel& model) {
  model.validate();
  nlohmann::json j;
  j["schema_version"] = 1;
  j["a_star"] = model.a_star;
  j["b_star"] = model.b_star;
  j["c_star"] = model.c_star;
  j["score_ceiling"] = model.score_ceiling;
  j["clamp_floor"] = model.clamp_floor;
  j["fit_window"] = model.fit_window;
  write_file_atomic(path, j.dump(2) + "\n");
}

inline ProjectionModel load_projection(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& error) {
    throw DataError("projection file " + path +
                    " is not valid JSON: " + error.what());
  }
  const auto& version = detail::projection_field(j, "schema_version");
  if (!version.is_number_integer() || version.get<int>() != 1) {
    throw DataError("projection file " + path +
                    " has unsupported schema_version");
  }
  ProjectionModel model;
  model.a_star = detail::projection_number(j, "a_star");
  model.b_star = detail::projection_number(j, "b_star");
  model.c_star = detail::projection_number(j, "c_star");
  model.score_ceiling = detail::projection_number(j, "score_ceiling");
  model.clamp_floor = detail::projection_number(j, "clamp_floor");
  const auto& window = detail::projection_field(j, "fit_window");
  if (!window.is_array() || window.size() != 2 ||
      !window[0].is_number_integer() || !window[1].is_number_integer()) {
    throw DataError("projection field \"fit_window\" must be two integers");
  }
  model.fit_window = {window[0].get<int>(), window[1].get<int>()};
  model.validate();
  return model;
}

/// Reads a training CSV with columns profile_id, z, raw_score.  Profiles
/// keep their order of first appearance; z levels are sorted; every
/// profile must provide exactly one score for every z level.
inline TrainingProfiles read_training_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::size_t id_column = table.column("profile_id");
  const std::size_t z_column = table.column("z");
  const std::size_t score_column = table.column("raw_score");

  std::vector<std::string> profile_order;
  std::map<std::string, std::map<int, double>> by_profile;
  std::vector<int> levels;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string& id = row[id_column];
    const long long z_wide =
        csv_integer(row[z_column], "z (row " + std::to_string(r + 2) + ")");
    const int z = static_cast<int>(z_wide);
    if (z_wide != z) {
      throw DataError("training z level out of range: " +
                      std::to_string(z_wide));
    }
    const double score = csv_number(
        row[score_column], "raw_score (row " + std::to_string(r + 2) + ")");
    auto inserted = by_profile.find(id);
    if (inserted == by_profile.end()) {
      profile_order.push_back(id);
      inserted = by_profile.emplace(id, std::map<int, double>{}).first;
    }
    if (!inserted->second.emplace(z, score).second) {
      throw DataError("training profile \"" + id +
                      "\" has a duplicate score for z = " + std::to_string(z));
    }
    if (std::find(levels.begin(), levels.end(), z) == levels.end()) {
      levels.push_back(z);
    }
  }
  if (profile_order.empty()) {
    throw DataError("training csv " + path + " contains no data rows");
  }
  std::sort(levels.begin(), levels.end());

  TrainingProfiles profiles;
  profiles.z_levels = levels;
  profiles.scores.reserve(profile_order.size());
  for (const std::string& id : profile_order) {
    const auto& scores = by_profile[id];
    std::vector<double> row;
    row.reserve(levels.size());
    for (int z : levels) {
      const auto it = scores.find(z);
      if (it == scores.end()) {
        throw DataError("training profile \"" + id +
                        "\" is missing a score for z = " + std::to_string(z));
      }
      row.push_back(it->second);
    }
    profiles.scores.push_back(std::move(row));
  }
  profiles.validate();
  return profiles;
}

}  // namespace focusqc
