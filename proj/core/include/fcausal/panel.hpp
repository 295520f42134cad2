#pragma once

#include <string>
#include <vector>

#include "fcausal/numerics.hpp"

namespace fcausal {

/// Which axis holds the i.i.d. replicates. Under ReplicateOverTime the rows of
/// every matrix are units and the columns are time points; ReplicateOverSpace
/// swaps them.
enum class Orientation { ReplicateOverTime, ReplicateOverSpace };

std::string to_string(Orientation o);
Orientation orientation_from_string(const std::string& s);

/// Immutable observed panel. Matrices are stored in the current orientation:
/// rows are the modeled coordinates (d of them) and columns are replicates (R).
class PanelData {
 public:
  PanelData() = default;

  /// Builds a panel in ReplicateOverTime layout (N x T matrices, one N x T
  /// matrix per covariate, coords N x p_s) and validates it. Empty id lists
  /// are filled with "0", "1", ...
  PanelData(Matrix exposures, Matrix outcomes, std::vector<Matrix> covariates, Matrix coords,
            std::vector<std::string> unit_ids = {}, std::vector<std::string> time_ids = {});

  const Matrix& exposures() const { return exposures_; }
  const Matrix& outcomes() const { return outcomes_; }
  const std::vector<Matrix>& covariates() const { return covariates_; }
  /// Spatial coordinates, always N x p_s and indexed by unit.
  const Matrix& coords() const { return coords_; }
  const std::vector<std::string>& unit_ids() const { return unit_ids_; }
  const std::vector<std::string>& time_ids() const { return time_ids_; }
  Orientation orientation() const { return orientation_; }

  int rows() const { return static_cast<int>(exposures_.rows()); }
  int replicates() const { return static_cast<int>(exposures_.cols()); }
  int num_units() const { return static_cast<int>(unit_ids_.size()); }
  int num_times() const { return static_cast<int>(time_ids_.size()); }
  int num_covariates() const { return static_cast<int>(covariates_.size()); }

  /// Features attached to the modeled rows: spatial coordinates when rows are
  /// units, the (0-based) time index when rows are time points.
  Matrix row_features() const;

  /// Copy with new exposure/outcome/covariate values of the same shape, used by
  /// residualization and bootstrap resampling. Validates the result.
  PanelData with_values(Matrix exposures, Matrix outcomes, std::vector<Matrix> covariates) const;

  /// Copy keeping only the listed replicate columns (repeats allowed).
  PanelData select_replicates(const std::vector<int>& columns) const;

  friend PanelData orient(const PanelData& panel, Orientation target);
  friend bool operator==(const PanelData& a, const PanelData& b);

 private:
  void validate() const;

  Matrix exposures_;
  Matrix outcomes_;
  std::vector<Matrix> covariates_;
  Matrix coords_;
  std::vector<std::string> unit_ids_;
  std::vector<std::string> time_ids_;
  Orientation orientation_ = Orientation::ReplicateOverTime;
};

/// Returns the panel viewed in `target` orientation. Involution: orienting
/// back restores the original exactly.
PanelData orient(const PanelData& panel, Orientation target);

bool operator==(const PanelData& a, const PanelData& b);

enum class NeighborhoodKind { None, KNearest, Explicit };

/// Interference neighborhoods over the modeled rows. members[i] is sorted and
/// always contains i.
struct NeighborhoodSpec {
  NeighborhoodKind kind = NeighborhoodKind::None;
  int k = 0;
  std::vector<std::vector<int>> members;

  int size() const { return static_cast<int>(members.size()); }
  bool trivial() const;  // every neighborhood is just {i}

  /// d x d, true at (i, j) when j is outside N_i.
  BoolMatrix off_mask() const;

  /// For each row i, the mean over N_i \ {i} of the rows of `values`
  /// (zero row when the neighborhood is only i).
  Matrix neighbor_mean(const Matrix& values) const;
};

NeighborhoodSpec no_neighborhoods(int d);

/// Self plus the k nearest rows by Euclidean distance in `features`; ties
/// broken by index.
NeighborhoodSpec knn_neighborhoods(const Matrix& features, int k);

/// Validates and normalizes explicit lists (adds i, sorts, dedups).
NeighborhoodSpec explicit_neighborhoods(std::vector<std::vector<int>> lists);

}  // namespace fcausal
