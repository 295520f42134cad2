#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fcausal/error.hpp"
#include "fcausal/numerics.hpp"
#include "fcausal/panel.hpp"
#include "fcausal/panel_io.hpp"
#include "fcausal/sim.hpp"
#include "oracles.hpp"

using namespace fcausal;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("fcausal_panel_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

PanelData small_panel(int n, int t) {
  std::mt19937_64 gen(n * 31 + t);
  return PanelData(oracle::random_normal(gen, n, t), oracle::random_normal(gen, n, t),
                   {oracle::random_normal(gen, n, t)}, oracle::random_normal(gen, n, 2));
}

}  // namespace

TEST_SUITE("panel") {

TEST_CASE("smallest complete grid loads") {
  auto dir = scratch_dir("grid");
  write_text(dir / "d.csv", "unit_id,time_id,value\na,1,1.5\na,2,2.5\nb,1,3\nb,2,-4\n");
  write_text(dir / "y.csv", "unit_id,time_id,value\nb,2,8\na,1,5\nb,1,7\na,2,6\n");
  PanelPaths paths{dir / "d.csv", dir / "y.csv", {}, {}};
  PanelData p = load_panel(paths);
  CHECK(p.num_units() == 2);
  CHECK(p.num_times() == 2);
  CHECK(p.exposures()(1, 1) == -4.0);
  CHECK(p.outcomes()(0, 1) == 6.0);
  CHECK(p.unit_ids() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("a missing row is reported by cell") {
  auto dir = scratch_dir("missing");
  write_text(dir / "d.csv", "unit_id,time_id,value\na,1,1.5\na,2,2.5\nb,1,3\nb,2,-4\n");
  write_text(dir / "y.csv", "unit_id,time_id,value\na,1,5\nb,1,7\na,2,6\n");
  PanelPaths paths{dir / "d.csv", dir / "y.csv", {}, {}};
  try {
    load_panel(paths);
    FAIL("expected MissingCell");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingCell);
    CHECK(std::string(e.what()).find("unit b, time 2") != std::string::npos);
  }
}

TEST_CASE("duplicate and non-numeric cells") {
  auto dir = scratch_dir("bad");
  write_text(dir / "d.csv", "unit_id,time_id,value\na,1,1\na,1,2\n");
  write_text(dir / "y.csv", "unit_id,time_id,value\na,1,5\n");
  CHECK_THROWS_AS(load_panel({dir / "d.csv", dir / "y.csv", {}, {}}), Error);
  write_text(dir / "d2.csv", "unit_id,time_id,value\na,1,x\n");
  try {
    load_panel({dir / "d2.csv", dir / "y.csv", {}, {}});
    FAIL("expected NonNumericValue");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonNumericValue);
  }
}

TEST_CASE("integer ids sort numerically") {
  auto dir = scratch_dir("ids");
  write_text(dir / "d.csv", "unit_id,time_id,value\n10,1,1\n9,1,2\n10,2,3\n9,2,4\n");
  write_text(dir / "y.csv", "unit_id,time_id,value\n10,1,1\n9,1,2\n10,2,3\n9,2,4\n");
  PanelData p = load_panel({dir / "d.csv", dir / "y.csv", {}, {}});
  CHECK(p.unit_ids() == std::vector<std::string>{"9", "10"});
}

TEST_CASE("simulated panel round-trips bit-identically") {
  SimDraw draw = generate(SimScenario::linear_fixed(), 17);
  auto dir = scratch_dir("roundtrip");
  write_panel_dir(dir, draw.panel);
  PanelData back = load_panel_dir(dir);
  CHECK(back.num_units() == 50);
  CHECK(back.num_times() == 100);
  CHECK(back == draw.panel);
}

TEST_CASE("non-finite values are rejected") {
  Matrix d = Matrix::Zero(2, 3);
  d(1, 2) = std::numeric_limits<double>::quiet_NaN();
  try {
    PanelData(d, Matrix::Zero(2, 3), {}, Matrix());
    FAIL("expected NonFiniteValue");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFiniteValue);
  }
  CHECK_THROWS_AS(PanelData(Matrix::Zero(2, 3), Matrix::Zero(3, 2), {}, Matrix()), Error);
}

TEST_CASE("orientation is an involution with shape bookkeeping") {
  PanelData p = small_panel(3, 5);
  PanelData s = orient(p, Orientation::ReplicateOverSpace);
  CHECK(s.orientation() == Orientation::ReplicateOverSpace);
  CHECK(s.exposures().rows() == 5);
  CHECK(s.exposures().cols() == 3);
  CHECK(s.covariates()[0].rows() == 5);
  CHECK(s.coords().rows() == 3);
  CHECK(orient(s, Orientation::ReplicateOverTime) == p);
  CHECK(orient(p, Orientation::ReplicateOverTime) == p);
}

TEST_CASE("replicate covariance survives a double orientation") {
  PanelData p = small_panel(6, 40);
  PanelData back = orient(orient(p, Orientation::ReplicateOverSpace), Orientation::ReplicateOverTime);
  Matrix before = oracle::covariance(p.exposures().transpose());
  Matrix after = sample_covariance(back.exposures().transpose());
  CHECK(oracle::max_abs(before - after) <= 1e-13);
}

TEST_CASE("replicate selection follows the orientation") {
  PanelData p = small_panel(4, 6);
  PanelData sel = p.select_replicates({5, 0, 0});
  CHECK(sel.replicates() == 3);
  CHECK(sel.exposures().col(1) == p.exposures().col(0));
  CHECK(sel.time_ids()[0] == "5");
  PanelData s = orient(p, Orientation::ReplicateOverSpace).select_replicates({3, 1});
  CHECK(s.unit_ids() == std::vector<std::string>{"3", "1"});
  CHECK(s.coords().row(0) == p.coords().row(3));
}

TEST_CASE("row features depend on orientation") {
  PanelData p = small_panel(4, 6);
  CHECK(p.row_features() == p.coords());
  Matrix tf = orient(p, Orientation::ReplicateOverSpace).row_features();
  CHECK(tf.rows() == 6);
  CHECK(tf(5, 0) == 5.0);
}

TEST_CASE("neighborhoods") {
  NeighborhoodSpec none = no_neighborhoods(4);
  CHECK(none.trivial());
  for (int i = 0; i < 4; ++i) CHECK(none.members[i] == std::vector<int>{i});
  CHECK(none.off_mask().count() == 12);

  Matrix line(5, 1);
  line << 0, 1, 2, 3, 4;
  NeighborhoodSpec k2 = knn_neighborhoods(line, 2);
  CHECK(k2.members[0] == std::vector<int>{0, 1, 2});
  CHECK(k2.members[2] == std::vector<int>{1, 2, 3});
  // Equidistant candidates go to the lower index.
  NeighborhoodSpec k1 = knn_neighborhoods(line, 1);
  CHECK(k1.members[1] == std::vector<int>{0, 1});
  CHECK(k1.members[3] == std::vector<int>{2, 3});
  for (int i = 0; i < 5; ++i) CHECK(static_cast<int>(k2.members[i].size()) == 3);

  NeighborhoodSpec ex = explicit_neighborhoods({{1, 1}, {}, {0}});
  CHECK(ex.members[0] == std::vector<int>{0, 1});
  CHECK(ex.members[1] == std::vector<int>{1});
  CHECK(ex.members[2] == std::vector<int>{0, 2});
  CHECK_THROWS_AS(explicit_neighborhoods({{3}, {0}}), Error);

  Matrix v(3, 2);
  v << 1, 2, 3, 4, 5, 6;
  Matrix nm = ex.neighbor_mean(v);
  CHECK(nm.row(0) == v.row(1));
  CHECK(nm.row(1).isZero());
  CHECK(nm.row(2) == v.row(0));
  BoolMatrix mask = ex.off_mask();
  CHECK(!mask(0, 1));
  CHECK(mask(0, 2));
  CHECK(!mask(2, 2));
}

TEST_CASE("neighbor files round-trip") {
  auto dir = scratch_dir("nb");
  std::vector<std::string> ids{"u0", "u1", "u2"};
  NeighborhoodSpec ex = explicit_neighborhoods({{1}, {0, 2}, {}});
  write_neighbors(dir / "n.csv", ex, ids);
  NeighborhoodSpec back = load_neighbors(dir / "n.csv", ids);
  CHECK(back.members == ex.members);
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678901234567, 0.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

}
