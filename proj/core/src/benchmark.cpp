#include "fcausal/benchmark.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <regex>

#include "fcausal/error.hpp"
#include "fcausal/log.hpp"
#include "fcausal/panel_io.hpp"
#include "fcausal/parallel.hpp"
#include "fcausal/random.hpp"

namespace fcausal {

EstimatorSpec estimator_from_label(const std::string& label_in, const EstimatorConfig& base) {
  EstimatorSpec spec;
  spec.label = label_in;
  spec.config = base;
  std::string label = label_in;
  if (auto at = label.find("@space"); at != std::string::npos && at + 6 == label.size()) {
    spec.orientation = Orientation::ReplicateOverSpace;
    label = label.substr(0, at);
  }
  static const std::regex factor_re(R"((fc|ife)(\d+)(\+dml)?)");
  std::smatch mt;
  if (label == "oracle") {
    spec.oracle = true;
  } else if (std::regex_match(label, mt, factor_re)) {
    const bool dml = mt[3].matched;
    spec.config.rank = std::stoi(mt[2].str());
    if (mt[1] == "fc") spec.config.method = dml ? Method::FCplusDML : Method::FC;
    else spec.config.method = dml ? Method::IFEplusDML : Method::IFE;
  } else {
    spec.config.method = method_from_string(label);
  }
  return spec;
}

Vector fit_headline(const EstimatorSpec& spec, const SimDraw& draw) {
  if (spec.oracle) return oracle_estimate(draw);
  EstimatorConfig cfg = spec.config;
  const PanelData panel = orient(draw.panel, spec.orientation);
  if (spec.orientation == Orientation::ReplicateOverTime && !draw.neighborhoods.trivial()) {
    cfg.neighborhoods = draw.neighborhoods;
  } else {
    cfg.neighborhoods = {};
  }
  if (draw.truth.has_curves) cfg.heterogeneous = true;
  const EffectEstimate est = estimate(panel, cfg);
  if (draw.truth.has_curves) return Vector::Constant(1, est.acd());
  Vector out = Vector::Constant(draw.truth.beta.size(), std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(out.size(), est.beta.size()); ++k) out(k) = est.beta(k);
  return out;
}

void summarize_row(BenchmarkRow& row) {
  std::vector<double> ok;
  for (double v : row.raw)
    if (std::isfinite(v)) ok.push_back(v);
  row.n_reps = static_cast<int>(ok.size());
  row.failures = static_cast<int>(row.raw.size() - ok.size());
  row.flagged = row.failures > 0.1 * static_cast<double>(row.raw.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (ok.empty()) {
    row.bias = row.sd = row.mse = nan;
    return;
  }
  const double n = static_cast<double>(ok.size());
  double mean = 0;
  for (double v : ok) mean += v;
  mean /= n;
  double ss = 0, se = 0;
  for (double v : ok) {
    ss += (v - mean) * (v - mean);
    se += (v - row.truth) * (v - row.truth);
  }
  row.bias = mean - row.truth;
  row.sd = ok.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  row.mse = se / n;
}

BenchmarkResult run_benchmark(const std::vector<SimScenario>& scenarios, const std::vector<EstimatorSpec>& estimators,
                              int reps, std::uint64_t seed, int threads) {
  if (reps < 2) throw Error(ErrorKind::InvalidArgument, "benchmark needs at least 2 reps");
  BenchmarkResult result;
  result.reps = reps;
  result.seed = seed;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const SimScenario& sc = scenarios[s];
    sc.validate();
    // est[e][rep] holds the headline vector; times[e][rep] the fit seconds.
    std::vector<std::vector<Vector>> est(estimators.size(), std::vector<Vector>(static_cast<std::size_t>(reps)));
    std::vector<std::vector<double>> times(estimators.size(), std::vector<double>(static_cast<std::size_t>(reps)));
    Truth truth;
    {
      // Truth does not depend on the draw except for the nonlinear ACD,
      // which is averaged below.
      truth = generate(sc, derive_seed(seed, s, 0)).truth;
    }
    std::vector<double> truth_acc(static_cast<std::size_t>(reps), 0.0);
    parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t rep) {
      const SimDraw draw = generate(sc, derive_seed(seed, s, rep));
      truth_acc[rep] = draw.truth.beta(0);
      for (std::size_t e = 0; e < estimators.size(); ++e) {
        const auto start = std::chrono::steady_clock::now();
        try {
          EstimatorSpec spec = estimators[e];
          spec.config.seed = derive_seed(seed, s, rep, e + 1);
          spec.config.threads = 1;
          est[e][rep] = fit_headline(spec, draw);
        } catch (const Error& err) {
          log(LogLevel::Debug, sc.name() + "/" + estimators[e].label + " rep " + std::to_string(rep) +
                                   " failed: " + err.what());
          est[e][rep] = Vector::Constant(truth.beta.size(), std::numeric_limits<double>::quiet_NaN());
        }
        times[e][rep] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      }
    });
    if (truth.has_curves) {
      double acc = 0;
      for (double v : truth_acc) acc += v;
      truth.beta(0) = acc / reps;
    }
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      double runtime = 0;
      for (double v : times[e]) runtime += v;
      for (Eigen::Index c = 0; c < truth.beta.size(); ++c) {
        BenchmarkRow row;
        row.scenario = sc.name();
        row.estimator = estimators[e].label;
        row.coefficient = truth.names[static_cast<std::size_t>(c)];
        row.truth = truth.beta(c);
        row.runtime_s = runtime;
        for (int rep = 0; rep < reps; ++rep) row.raw.push_back(est[e][static_cast<std::size_t>(rep)](c));
        summarize_row(row);
        if (row.flagged) {
          log(LogLevel::Warn, row.scenario + "/" + row.estimator + ": " + std::to_string(row.failures) + " of " +
                                  std::to_string(reps) + " reps failed");
        }
        result.rows.push_back(std::move(row));
      }
    }
  }
  return result;
}

void write_benchmark_csv(std::ostream& out, const BenchmarkResult& result) {
  out << "scenario,estimator,coefficient,truth,bias,sd,mse,n_reps,failures,flagged\n";
  for (const auto& r : result.rows) {
    out << r.scenario << ',' << r.estimator << ',' << r.coefficient << ',' << format_double(r.truth) << ','
        << format_double(r.bias) << ',' << format_double(r.sd) << ',' << format_double(r.mse) << ',' << r.n_reps
        << ',' << r.failures << ',' << (r.flagged ? "true" : "false") << '\n';
  }
}

void write_benchmark_table(std::ostream& out, const BenchmarkResult& result) {
  std::string current;
  char buf[256];
  for (const auto& r : result.rows) {
    if (r.scenario != current) {
      current = r.scenario;
      out << "\n" << current << " (" << result.reps << " reps)\n";
      std::snprintf(buf, sizeof buf, "%-16s %-6s %9s %9s %9s %6s\n", "Estimator", "Coef", "Bias", "SD", "MSE", "Fail");
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%-16s %-6s %9.3f %9.3f %9.4f %6d%s\n", r.estimator.c_str(), r.coefficient.c_str(),
                  r.bias, r.sd, r.mse, r.failures, r.flagged ? "  !" : "");
    out << buf;
  }
}

void write_benchmark_raw(std::ostream& out, const BenchmarkResult& result) {
  out << "scenario,estimator,coefficient,rep,estimate\n";
  for (const auto& r : result.rows)
    for (std::size_t k = 0; k < r.raw.size(); ++k)
      out << r.scenario << ',' << r.estimator << ',' << r.coefficient << ',' << k << ','
          << (std::isfinite(r.raw[k]) ? format_double(r.raw[k]) : std::string("NA")) << '\n';
}

}  // namespace fcausal
