#include <benchmark/benchmark.h>

#include "mspk/model.hpp"
#include "mspk/parisi.hpp"

namespace {

mspk::ModelSpec reference_model() {
  return mspk::validate_model({"a", "b"}, {0.5, 0.5}, {{1.0, 0.5}, {0.5, 1.0}});
}

mspk::RsbParams params_at(int r) {
  mspk::RsbParams params;
  params.r = r;
  for (int l = 0; l < r; ++l) params.zeta.push_back((l + 0.5) / r);
  for (int s = 0; s < 2; ++s) {
    std::vector<double> q{0.0};
    for (int l = 1; l < r; ++l) q.push_back(static_cast<double>(l) / r);
    q.push_back(1.0);
    params.q.push_back(q);
  }
  return params;
}

void bm_parisi_grid(benchmark::State& state) {
  const mspk::ModelSpec spec = reference_model();
  const mspk::RsbParams params = params_at(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(mspk::parisi_functional(spec, params, {}).value);
}
BENCHMARK(bm_parisi_grid)->Arg(1)->Arg(2)->Arg(4)->Arg(6);

void bm_parisi_nested(benchmark::State& state) {
  const mspk::ModelSpec spec = reference_model();
  const mspk::RsbParams params = params_at(static_cast<int>(state.range(0)));
  mspk::QuadratureConfig quad;
  quad.mode = mspk::QuadratureMode::nested_exact;
  quad.hermite_nodes = 20;
  for (auto _ : state)
    benchmark::DoNotOptimize(mspk::parisi_functional(spec, params, quad).value);
}
BENCHMARK(bm_parisi_nested)->Arg(1)->Arg(2)->Arg(3);

}  // namespace
