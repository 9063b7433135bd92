#include <benchmark/benchmark.h>

#include "decel/model.hpp"
#include "decel/simulate.hpp"

namespace {

decel::LifeTable table_of(std::size_t n) {
  return decel::build_life_table(decel::sample_lifetimes(n, {1e-4, 0.1, 0.2}, 7), 120).table;
}

void BM_LogLikelihood(benchmark::State& state) {
  const auto table = table_of(10000);
  const decel::ModelParams p{1.1e-4, 0.098, 0.25};
  for (auto _ : state) benchmark::DoNotOptimize(decel::log_likelihood(p, table));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(table.size()));
}
BENCHMARK(BM_LogLikelihood);

void BM_Gradient(benchmark::State& state) {
  const auto table = table_of(10000);
  const decel::ModelParams p{1.1e-4, 0.098, 0.25};
  const decel::PenaltyConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(decel::gradient(p, table, cfg, true));
}
BENCHMARK(BM_Gradient);

void BM_SampleLifetimes(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(decel::sample_lifetimes(n, {1e-4, 0.1, 0.2}, ++seed));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleLifetimes)->Arg(10000);

}  // namespace
