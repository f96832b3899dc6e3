#pragma once

// Writes a labeled synthetic blur dataset to disk: one grayscale PNG per
// (texture, level) pair plus a labels.csv mapping each image path to its
// blur strength. Output is byte-for-byte reproducible for a given spec.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "focusqc/errors.hpp"
#include "focusqc/io/csv.hpp"
#include "focusqc/io/png_io.hpp"
#include "focusqc/ladder.hpp"

namespace focusqc {

inline std::vector<LadderEntry> emit_blur_ladder(
    const BlurLadderSpec& spec, const std::string& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + out_dir + ": " +
                  ec.message());
  }
  const std::vector<std::vector<ImageU8>> ladder = make_blur_ladder(spec);
  std::vector<LadderEntry> entries;
  CsvTable labels;
  labels.header = {"path", "z"};
  for (std::size_t t = 0; t < ladder.size(); ++t) {
    for (std::size_t l = 0; l < spec.levels.size(); ++l) {
      char name[64];
      std::snprintf(name, sizeof(name), "t%04zu_L%02zu.png", t, l);
      write_png((std::filesystem::path(out_dir) / name).string(),
                ladder[t][l]);
      entries.push_back({name, spec.levels[l]});
      labels.rows.push_back({name, format_double(spec.levels[l])});
    }
  }
  write_csv((std::filesystem::path(out_dir) / "labels.csv").string(), labels);
  return entries;
}

}  // namespace focusqc
