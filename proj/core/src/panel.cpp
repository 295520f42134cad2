#include "fcausal/panel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fcausal/error.hpp"

namespace fcausal {

std::string to_string(Orientation o) {
  return o == Orientation::ReplicateOverTime ? "replicate-over-time" : "replicate-over-space";
}

Orientation orientation_from_string(const std::string& s) {
  if (s == "replicate-over-time" || s == "time") return Orientation::ReplicateOverTime;
  if (s == "replicate-over-space" || s == "space") return Orientation::ReplicateOverSpace;
  throw Error(ErrorKind::InvalidArgument, "unknown orientation '" + s + "'");
}

namespace {

std::vector<std::string> default_ids(std::size_t n) {
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i);
  return ids;
}

void check_finite(const Matrix& m, const char* what) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j))) {
        throw Error(ErrorKind::NonFiniteValue, std::string(what) + " has a non-finite value at (" +
                                                   std::to_string(i) + ", " + std::to_string(j) + ")");
      }
}

}  // namespace

PanelData::PanelData(Matrix exposures, Matrix outcomes, std::vector<Matrix> covariates, Matrix coords,
                     std::vector<std::string> unit_ids, std::vector<std::string> time_ids)
    : exposures_(std::move(exposures)),
      outcomes_(std::move(outcomes)),
      covariates_(std::move(covariates)),
      coords_(std::move(coords)),
      unit_ids_(std::move(unit_ids)),
      time_ids_(std::move(time_ids)) {
  if (unit_ids_.empty()) unit_ids_ = default_ids(static_cast<std::size_t>(exposures_.rows()));
  if (time_ids_.empty()) time_ids_ = default_ids(static_cast<std::size_t>(exposures_.cols()));
  if (coords_.size() == 0) coords_ = Matrix::Zero(exposures_.rows(), 0);
  validate();
}

void PanelData::validate() const {
  const bool over_time = orientation_ == Orientation::ReplicateOverTime;
  const auto n = static_cast<Eigen::Index>(unit_ids_.size());
  const auto t = static_cast<Eigen::Index>(time_ids_.size());
  const Eigen::Index r = over_time ? n : t;
  const Eigen::Index c = over_time ? t : n;
  auto shape_ok = [&](const Matrix& m) { return m.rows() == r && m.cols() == c; };
  if (n == 0 || t == 0) throw Error(ErrorKind::InvalidArgument, "panel must have at least one unit and one time");
  if (!shape_ok(exposures_)) throw Error(ErrorKind::InvalidArgument, "exposure matrix shape does not match ids");
  if (!shape_ok(outcomes_)) throw Error(ErrorKind::InvalidArgument, "outcome matrix shape does not match exposures");
  for (const auto& x : covariates_)
    if (!shape_ok(x)) throw Error(ErrorKind::InvalidArgument, "covariate matrix shape does not match exposures");
  if (coords_.rows() != n) throw Error(ErrorKind::InvalidArgument, "coords must have one row per unit");
  check_finite(exposures_, "exposures");
  check_finite(outcomes_, "outcomes");
  for (const auto& x : covariates_) check_finite(x, "covariates");
  check_finite(coords_, "coords");
}

Matrix PanelData::row_features() const {
  if (orientation_ == Orientation::ReplicateOverTime) return coords_;
  Matrix idx(rows(), 1);
  for (int i = 0; i < rows(); ++i) idx(i, 0) = i;
  return idx;
}

PanelData PanelData::with_values(Matrix exposures, Matrix outcomes, std::vector<Matrix> covariates) const {
  PanelData out = *this;
  out.exposures_ = std::move(exposures);
  out.outcomes_ = std::move(outcomes);
  out.covariates_ = std::move(covariates);
  out.validate();
  return out;
}

PanelData PanelData::select_replicates(const std::vector<int>& columns) const {
  const auto k = static_cast<Eigen::Index>(columns.size());
  auto pick = [&](const Matrix& m) {
    Matrix out(m.rows(), k);
    for (Eigen::Index j = 0; j < k; ++j) out.col(j) = m.col(columns[static_cast<std::size_t>(j)]);
    return out;
  };
  for (int c : columns)
    if (c < 0 || c >= replicates()) throw Error(ErrorKind::InvalidArgument, "replicate index out of range");
  PanelData out = *this;
  out.exposures_ = pick(exposures_);
  out.outcomes_ = pick(outcomes_);
  for (auto& x : out.covariates_) x = pick(x);
  if (orientation_ == Orientation::ReplicateOverTime) {
    std::vector<std::string> ids;
    for (int c : columns) ids.push_back(time_ids_[static_cast<std::size_t>(c)]);
    out.time_ids_ = std::move(ids);
  } else {
    std::vector<std::string> ids;
    Matrix coords(k, coords_.cols());
    for (Eigen::Index j = 0; j < k; ++j) {
      const int c = columns[static_cast<std::size_t>(j)];
      ids.push_back(unit_ids_[static_cast<std::size_t>(c)]);
      coords.row(j) = coords_.row(c);
    }
    out.unit_ids_ = std::move(ids);
    out.coords_ = std::move(coords);
  }
  out.validate();
  return out;
}

PanelData orient(const PanelData& panel, Orientation target) {
  if (panel.orientation_ == target) return panel;
  PanelData out = panel;
  out.exposures_ = panel.exposures_.transpose();
  out.outcomes_ = panel.outcomes_.transpose();
  for (auto& x : out.covariates_) x.transposeInPlace();
  out.orientation_ = target;
  return out;
}

bool operator==(const PanelData& a, const PanelData& b) {
  auto same = [](const Matrix& x, const Matrix& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && (x.array() == y.array()).all();
  };
  if (a.orientation_ != b.orientation_ || a.unit_ids_ != b.unit_ids_ || a.time_ids_ != b.time_ids_) return false;
  if (!same(a.exposures_, b.exposures_) || !same(a.outcomes_, b.outcomes_) || !same(a.coords_, b.coords_)) {
    return false;
  }
  if (a.covariates_.size() != b.covariates_.size()) return false;
  for (std::size_t k = 0; k < a.covariates_.size(); ++k)
    if (!same(a.covariates_[k], b.covariates_[k])) return false;
  return true;
}

bool NeighborhoodSpec::trivial() const {
  return std::all_of(members.begin(), members.end(), [](const auto& m) { return m.size() == 1; });
}

BoolMatrix NeighborhoodSpec::off_mask() const {
  const int d = size();
  BoolMatrix mask = BoolMatrix::Constant(d, d, true);
  for (int i = 0; i < d; ++i)
    for (int j : members[static_cast<std::size_t>(i)]) mask(i, j) = false;
  return mask;
}

Matrix NeighborhoodSpec::neighbor_mean(const Matrix& values) const {
  if (values.rows() != size()) throw Error(ErrorKind::InvalidArgument, "neighbor_mean: row count mismatch");
  Matrix out = Matrix::Zero(values.rows(), values.cols());
  for (int i = 0; i < size(); ++i) {
    int count = 0;
    for (int j : members[static_cast<std::size_t>(i)]) {
      if (j == i) continue;
      out.row(i) += values.row(j);
      ++count;
    }
    if (count > 0) out.row(i) /= count;
  }
  return out;
}

NeighborhoodSpec no_neighborhoods(int d) {
  NeighborhoodSpec spec;
  spec.kind = NeighborhoodKind::None;
  spec.members.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) spec.members[static_cast<std::size_t>(i)] = {i};
  return spec;
}

NeighborhoodSpec knn_neighborhoods(const Matrix& features, int k) {
  const int d = static_cast<int>(features.rows());
  if (k < 0 || k >= d) throw Error(ErrorKind::InvalidArgument, "knn: k must be in [0, d)");
  NeighborhoodSpec spec;
  spec.kind = NeighborhoodKind::KNearest;
  spec.k = k;
  spec.members.resize(static_cast<std::size_t>(d));
  std::vector<double> dist(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) dist[static_cast<std::size_t>(j)] = (features.row(i) - features.row(j)).squaredNorm();
    std::vector<int> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    std::erase(order, i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)];
    });
    std::vector<int> m(order.begin(), order.begin() + k);
    m.push_back(i);
    std::sort(m.begin(), m.end());
    spec.members[static_cast<std::size_t>(i)] = std::move(m);
  }
  return spec;
}

NeighborhoodSpec explicit_neighborhoods(std::vector<std::vector<int>> lists) {
  const int d = static_cast<int>(lists.size());
  NeighborhoodSpec spec;
  spec.kind = NeighborhoodKind::Explicit;
  for (int i = 0; i < d; ++i) {
    auto& m = lists[static_cast<std::size_t>(i)];
    for (int j : m)
      if (j < 0 || j >= d) {
        throw Error(ErrorKind::InvalidArgument,
                    "neighbor index " + std::to_string(j) + " out of range for unit " + std::to_string(i));
      }
    m.push_back(i);
    std::sort(m.begin(), m.end());
    m.erase(std::unique(m.begin(), m.end()), m.end());
  }
  spec.members = std::move(lists);
  return spec;
}

}  // namespace fcausal
