#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fcausal/estimators.hpp"
#include "fcausal/sim.hpp"

namespace fcausal {

/// An estimator entry of a benchmark: a label plus its configuration, or the
/// latent oracle.
struct EstimatorSpec {
  std::string label;
  EstimatorConfig config;
  bool oracle = false;
  Orientation orientation = Orientation::ReplicateOverTime;
};

/// Parses labels such as "fc3", "fc6", "fc3+dml", "ife6", "ife3+dml",
/// "single-dml", "multi-dml", "stacked-dml", "dml-nuc", "oracle". A trailing
/// "@space" fits with units as replicates.
EstimatorSpec estimator_from_label(const std::string& label, const EstimatorConfig& base = {});

struct BenchmarkRow {
  std::string scenario;
  std::string estimator;
  std::string coefficient;
  double truth = 0.0;
  double bias = 0.0;
  double sd = 0.0;
  double mse = 0.0;
  int n_reps = 0;
  int failures = 0;
  double runtime_s = 0.0;
  bool flagged = false;      // more than 10% of reps failed
  std::vector<double> raw;   // per-rep estimates, NaN for failures
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;
  int reps = 0;
  std::uint64_t seed = 0;
};

/// Every (scenario, estimator, rep) triple draws data with
/// derive_seed(seed, scenario index, rep), shared by all estimators.
BenchmarkResult run_benchmark(const std::vector<SimScenario>& scenarios, const std::vector<EstimatorSpec>& estimators,
                              int reps, std::uint64_t seed, int threads = 0);

/// Fits one estimator spec on one draw; returns the headline coefficients
/// (ordered as draw.truth.names).
Vector fit_headline(const EstimatorSpec& spec, const SimDraw& draw);

/// Bias/SD/MSE summary of raw estimates (SD uses the n-1 divisor).
void summarize_row(BenchmarkRow& row);

void write_benchmark_csv(std::ostream& out, const BenchmarkResult& result);
void write_benchmark_table(std::ostream& out, const BenchmarkResult& result);
void write_benchmark_raw(std::ostream& out, const BenchmarkResult& result);

}  // namespace fcausal
