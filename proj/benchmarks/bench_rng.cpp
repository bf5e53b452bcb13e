#include <benchmark/benchmark.h>

#include <vector>

#include "mspk/rng.hpp"

namespace {

void bm_fill_gaussian(benchmark::State& state) {
  std::vector<double> buf(state.range(0));
  mspk::RngStream rng(1);
  for (auto _ : state) {
    rng.fill_gaussian(buf);
    benchmark::DoNotOptimize(buf.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_fill_gaussian)->Arg(1024)->Arg(65536);

void bm_fill_exponential(benchmark::State& state) {
  std::vector<double> buf(state.range(0));
  mspk::RngStream rng(1);
  for (auto _ : state) {
    rng.fill_exponential(buf);
    benchmark::DoNotOptimize(buf.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_fill_exponential)->Arg(1024)->Arg(65536);

void bm_scalar_u64(benchmark::State& state) {
  mspk::RngStream rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(rng.next_u64());
}
BENCHMARK(bm_scalar_u64);

}  // namespace
