#include <benchmark/benchmark.h>

#include "decel/optimize.hpp"
#include "decel/simulate.hpp"

namespace {

const decel::LifeTable& table() {
  static const auto t = decel::build_life_table(decel::sample_lifetimes(10000, {1e-4, 0.1, 0.2}, 11), 120).table;
  return t;
}

void BM_FitMl(benchmark::State& state) {
  decel::FitOptions options;
  options.compute_se = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(decel::fit_ml(table(), options));
}
BENCHMARK(BM_FitMl)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FitMap(benchmark::State& state) {
  decel::FitOptions options;
  options.compute_se = false;
  const decel::PenaltyConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(decel::fit_map(table(), cfg, options));
}
BENCHMARK(BM_FitMap)->Unit(benchmark::kMillisecond);

}  // namespace
