#include <algorithm>
#include <cmath>
#include <optional>

#include "estimator_util.hpp"
#include "fcausal/error.hpp"
#include "fcausal/log.hpp"
#include "fcausal/parallel.hpp"
#include "fcausal/random.hpp"

namespace fcausal {

namespace {

double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Interval percentile_interval(const std::vector<double>& v, double point) {
  if (v.size() == 1) return {v[0], v[0]};
  Interval iv{percentile(v, 0.025), percentile(v, 0.975)};
  iv.lo = std::min(iv.lo, point);
  iv.hi = std::max(iv.hi, point);
  return iv;
}

// Centered curve of an estimate on a fixed grid.
Vector centered_on(const EffectEstimate& est, const Vector& grid) {
  Vector out = Vector::Zero(grid.size());
  const double k = static_cast<double>(est.curves.size());
  for (std::size_t u = 0; u < est.curves.size(); ++u) {
    const auto& g = est.curves[u];
    out += (g.values(grid).array() - g.value(est.curve_samples[u].mean())).matrix() / k;
  }
  return out;
}

}  // namespace

BootstrapResult bootstrap_infer(const PanelData& panel, const EstimatorConfig& config, const EffectEstimate& point,
                                int reps, std::uint64_t seed) {
  if (reps < 1) throw Error(ErrorKind::InvalidArgument, "bootstrap needs at least one resample");
  const int r = panel.replicates();
  EstimatorConfig inner = config;
  inner.bootstrap_reps = 0;
  inner.threads = 1;

  struct Draw {
    std::map<std::string, double> scalars;
    Vector curve;
  };
  std::vector<std::optional<Draw>> draws(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), config.threads, [&](std::size_t b) {
    Rng rng(derive_seed(seed, 0xb0075u, b));
    std::vector<int> cols(static_cast<std::size_t>(r));
    for (auto& c : cols) c = static_cast<int>(rng.below(static_cast<std::uint64_t>(r)));
    EstimatorConfig cfg = inner;
    cfg.seed = derive_seed(seed, 0xb0076u, b);
    try {
      const EffectEstimate est = estimate_point(panel.select_replicates(cols), cfg);
      draws[b] = Draw{est.scalars(), centered_on(est, point.summary.grid)};
    } catch (const Error& e) {
      log(LogLevel::Debug, "bootstrap resample " + std::to_string(b) + " failed: " + e.what());
    }
  });

  BootstrapResult out;
  out.reps = reps;
  std::vector<const Draw*> ok;
  for (const auto& d : draws) {
    if (d) ok.push_back(&*d);
    else ++out.failures;
  }
  if (out.failures > 0.2 * reps) {
    throw Error(ErrorKind::BootstrapFailure, std::to_string(out.failures) + " of " + std::to_string(reps) +
                                                 " bootstrap resamples failed");
  }
  if (out.failures > 0) {
    log(LogLevel::Warn, std::to_string(out.failures) + " bootstrap resamples failed and were dropped");
  }
  for (const auto& [name, value] : point.scalars()) {
    std::vector<double> v;
    for (const Draw* d : ok) {
      auto it = d->scalars.find(name);
      if (it != d->scalars.end() && std::isfinite(it->second)) v.push_back(it->second);
    }
    if (v.empty()) continue;
    out.intervals[name] = percentile_interval(v, value);
    out.draws[name] = std::move(v);
  }
  const auto g = point.summary.grid.size();
  out.curve_lo = Vector(g);
  out.curve_hi = Vector(g);
  for (Eigen::Index k = 0; k < g; ++k) {
    std::vector<double> v;
    for (const Draw* d : ok) v.push_back(d->curve(k));
    const Interval iv = percentile_interval(v, point.summary.centered(k));
    out.curve_lo(k) = iv.lo;
    out.curve_hi(k) = iv.hi;
  }
  return out;
}

}  // namespace fcausal
