#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fcausal/panel.hpp"

namespace fcausal {

/// Column names for the long-format CSV files. Empty covariate/coordinate
/// lists mean "every column other than the id columns".
struct CsvSchema {
  std::string unit_col = "unit_id";
  std::string time_col = "time_id";
  std::string value_col = "value";
  std::vector<std::string> covariate_cols;
  std::vector<std::string> coord_cols;
};

struct PanelPaths {
  std::filesystem::path exposure;
  std::filesystem::path outcome;
  std::vector<std::filesystem::path> covariates;
  std::filesystem::path coords;  // optional
};

/// Reads long-format exposure/outcome/covariate files into a validated panel
/// (ReplicateOverTime). Units and times are ordered numerically when every id
/// is an integer, lexicographically otherwise.
PanelData load_panel(const PanelPaths& paths, const CsvSchema& schema = {});

/// Standard file names inside a panel directory.
PanelPaths panel_dir_paths(const std::filesystem::path& dir);

PanelData load_panel_dir(const std::filesystem::path& dir, const CsvSchema& schema = {});

/// Writes exposure.csv, outcome.csv, covariates.csv (when p > 0) and
/// coords.csv (when p_s > 0). Values use 17 significant digits so a reload is
/// bit-identical.
void write_panel_dir(const std::filesystem::path& dir, const PanelData& panel);

/// neighbors.csv: rows (unit_id, neighbor_id); the self pair is implied.
void write_neighbors(const std::filesystem::path& file, const NeighborhoodSpec& spec,
                     const std::vector<std::string>& unit_ids);
NeighborhoodSpec load_neighbors(const std::filesystem::path& file, const std::vector<std::string>& unit_ids);

/// Shortest decimal text that round-trips a double exactly.
std::string format_double(double v);

}  // namespace fcausal
