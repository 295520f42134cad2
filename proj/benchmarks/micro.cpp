#include <benchmark/benchmark.h>

#include "fcausal/bias_engine.hpp"
#include "fcausal/estimators.hpp"
#include "fcausal/factor_model.hpp"
#include "fcausal/log.hpp"
#include "fcausal/random.hpp"
#include "fcausal/sim.hpp"

using namespace fcausal;

namespace {

Matrix gaussian(Rng& rng, int r, int c) {
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

void BM_FactorEM(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(1);
  Matrix b = gaussian(rng, d, 3);
  Matrix x = gaussian(rng, 200, 3) * b.transpose() + gaussian(rng, 200, d);
  for (auto _ : state) benchmark::DoNotOptimize(fit_factor_model(x, 3, NoiseMode::Diagonal));
}
BENCHMARK(BM_FactorEM)->Arg(20)->Arg(50)->Arg(100);

void BM_MaskedProcrustes(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const int m = static_cast<int>(state.range(1));
  Rng rng(2);
  Matrix gamma = gaussian(rng, d, m);
  Matrix r = gaussian(rng, m, d);
  Matrix c = gamma * random_orthogonal(rng, m) * r + 0.05 * gaussian(rng, d, d);
  const BoolMatrix mask = no_neighborhoods(d).off_mask();
  for (auto _ : state) benchmark::DoNotOptimize(masked_procrustes(gamma, r, c, mask));
}
BENCHMARK(BM_MaskedProcrustes)->Args({50, 3})->Args({50, 6})->Args({100, 3});

void BM_Estimator(benchmark::State& state) {
  set_log_level(LogLevel::Error);
  const SimDraw draw = generate(SimScenario::linear_fixed(), 3);
  EstimatorConfig cfg;
  cfg.method = static_cast<Method>(state.range(0));
  cfg.rank = cfg.method == Method::IFE ? 6 : 3;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_point(draw.panel, cfg));
  state.SetLabel(to_string(cfg.method));
}
BENCHMARK(BM_Estimator)
    ->Arg(static_cast<int>(Method::FC))
    ->Arg(static_cast<int>(Method::IFE))
    ->Arg(static_cast<int>(Method::MultiDML))
    ->Arg(static_cast<int>(Method::StackedDML))
    ->Unit(benchmark::kMillisecond);

void BM_Generate(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate(SimScenario::linear_fixed(), ++seed));
}
BENCHMARK(BM_Generate)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
