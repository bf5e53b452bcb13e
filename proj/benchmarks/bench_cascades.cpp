#include <benchmark/benchmark.h>

#include "mspk/cascades.hpp"
#include "mspk/model.hpp"
#include "mspk/parisi.hpp"

namespace {

mspk::ModelSpec reference_model() {
  return mspk::validate_model({"a", "b"}, {0.5, 0.5}, {{1.0, 0.5}, {0.5, 1.0}});
}

mspk::RsbParams reference_params() {
  return {2, {0.4, 0.8}, {{0.0, 0.3, 1.0}, {0.0, 0.5, 1.0}}};
}

void bm_sample_cascade(benchmark::State& state) {
  const mspk::RsbParams params = reference_params();
  const int m = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        mspk::sample_cascade(params.zeta, m, ++seed, 1000000).n_leaves());
  state.SetItemsProcessed(state.iterations() * static_cast<long>(m) * m);
}
BENCHMARK(bm_sample_cascade)->Arg(50)->Arg(200)->Arg(400);

void bm_cascade_identity_sample(benchmark::State& state) {
  const mspk::ModelSpec spec = reference_model();
  const mspk::RsbParams params = reference_params();
  const mspk::PathSequences paths = mspk::path_sequences(spec, params);
  const int m = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const mspk::CascadeTree tree =
        mspk::sample_cascade(params.zeta, m, ++seed, 1000000);
    const mspk::FieldSample fields = mspk::sample_fields(tree, paths, seed);
    benchmark::DoNotOptimize(mspk::cascade_log_ch(tree, fields, 0));
    benchmark::DoNotOptimize(mspk::cascade_log_exp(tree, fields.d, 1.0));
  }
}
BENCHMARK(bm_cascade_identity_sample)->Arg(50)->Arg(200);

void bm_exact_overlap_samples(benchmark::State& state) {
  const mspk::ModelSpec spec = reference_model();
  const mspk::RsbParams params = reference_params();
  const std::vector<double> qc = {0.0, 0.4, 1.0};
  const int draws = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        mspk::exact_overlap_samples(spec, params, qc, 4, draws, 1).draws.size());
  state.SetItemsProcessed(state.iterations() * draws);
}
BENCHMARK(bm_exact_overlap_samples)->Arg(1000)->Arg(10000);

}  // namespace
