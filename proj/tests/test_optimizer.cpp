#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mspk/model.hpp"
#include "mspk/optimizer.hpp"
#include "mspk/parisi.hpp"
#include "mspk/rng.hpp"

using namespace mspk;

namespace {

ModelSpec two_species() {
  return validate_model({"a", "b"}, {0.5, 0.5}, {{1.0, 0.5}, {0.5, 1.0}});
}

}  // namespace

TEST_CASE("decode_params is always feasible and encode inverts it") {
  const ModelSpec spec = two_species();
  OptimizerConfig config;
  RngStream rng(17);
  for (int rep = 0; rep < 25; ++rep) {
    const int r = 1 + static_cast<int>(rng.uniform() * 3);
    std::vector<double> raw((r + 1) + 2 * r);
    for (double& x : raw) x = 6.0 * (rng.uniform() - 0.5);
    const RsbParams params = decode_params(spec, r, raw, config);
    CHECK_NOTHROW(validate_rsb(spec, params));
    const std::vector<double> enc = encode_params(spec, params, config);
    const RsbParams back = decode_params(spec, r, enc, config);
    for (int l = 0; l < r; ++l)
      CHECK(back.zeta[l] == doctest::Approx(params.zeta[l]).epsilon(1e-9));
    for (int s = 0; s < 2; ++s)
      for (int l = 0; l <= r; ++l)
        CHECK(back.q[s][l] == doctest::Approx(params.q[s][l]).epsilon(1e-9));
  }
}

TEST_CASE("flat objective minimizes to log 2") {
  const ModelSpec zero = validate_model({"a"}, {1.0}, {{0.0}});
  OptimizerConfig config;
  config.restarts = 2;
  config.max_evals = 400;
  const OptimizationResult result = minimize_at_level(zero, 2, config);
  CHECK(result.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("r=1 single species matches a grid scan over zeta_0") {
  const ModelSpec spec = validate_model({"a"}, {1.0}, {{0.09}});
  // With one species and r=1 the only free coordinate is zeta_0 (q pinned).
  // The scan covers the optimizer's reachable range including its boundary,
  // where the high-temperature minimum sits.
  OptimizerConfig bounds;
  double best = 1e300;
  for (int k = 0; k <= 1000; ++k) {
    const double z =
        bounds.zeta_lo + (bounds.zeta_hi - bounds.zeta_lo) * k / 1000.0;
    RsbParams params{1, {z}, {{0.0, 1.0}}};
    best = std::min(best, parisi_functional(spec, params, {}).value);
  }
  OptimizerConfig config;
  config.restarts = 3;
  config.max_evals = 3000;
  config.seed = 2;
  const OptimizationResult result = minimize_at_level(spec, 1, config);
  CHECK(result.value <= best + 1e-9);
  CHECK(std::abs(result.value - best) <= 1e-6);
}

TEST_CASE("levels are non-increasing and traces dominate the best") {
  const ModelSpec spec = two_species();
  OptimizerConfig config;
  config.restarts = 2;
  config.max_evals = 1200;
  config.r_max = 3;
  config.seed = 4;
  const std::vector<OptimizationResult> levels = infimum_over_levels(spec, config);
  REQUIRE(levels.size() == 3);
  for (std::size_t i = 1; i < levels.size(); ++i)
    CHECK(levels[i].value <= levels[i - 1].value + 1e-8);
  for (const OptimizationResult& level : levels) {
    CHECK_NOTHROW(validate_rsb(spec, level.params));
    for (const TracePoint& point : level.trace)
      CHECK(level.value <= point.value + 1e-12);
  }
}

TEST_CASE("determinism") {
  const ModelSpec spec = two_species();
  OptimizerConfig config;
  config.restarts = 2;
  config.max_evals = 600;
  config.seed = 11;
  const OptimizationResult a = minimize_at_level(spec, 2, config);
  const OptimizationResult b = minimize_at_level(spec, 2, config);
  CHECK(a.value == b.value);
  CHECK(a.evals == b.evals);
  CHECK(a.params.zeta == b.params.zeta);
}

TEST_CASE("optimizer value is an upper bound on the finite-N free energy") {
  const ModelSpec spec = two_species();  // psd
  OptimizerConfig config;
  config.restarts = 2;
  config.max_evals = 1500;
  config.seed = 6;
  const OptimizationResult result = minimize_at_level(spec, 2, config);
  const MeanWithError fe = free_energy_mc(spec, 10, 200, 13);
  CHECK(fe.mean <= result.value + 3.0 * fe.se);
}

TEST_CASE("finite-difference gradient is small at the r=1 optimum") {
  const ModelSpec spec = validate_model({"a"}, {1.0}, {{0.09}});
  OptimizerConfig config;
  config.restarts = 3;
  config.max_evals = 3000;
  config.seed = 8;
  const OptimizationResult result = minimize_at_level(spec, 1, config);
  const std::vector<double> raw = encode_params(spec, result.params, config);
  for (double g : fd_gradient(spec, 1, raw, config, {}))
    CHECK(std::abs(g) < 1e-3);
}
