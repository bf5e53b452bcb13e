#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mspk/cascades.hpp"
#include "mspk/errors.hpp"
#include "mspk/model.hpp"
#include "mspk/replica_analysis.hpp"
#include "mspk/rng.hpp"

using namespace mspk;

namespace {

ModelSpec two_species() {
  return validate_model({"a", "b"}, {0.5, 0.5}, {{1.0, 0.5}, {0.5, 1.0}});
}

OverlapDraw make_draw(const std::vector<std::vector<double>>& combined,
                      const std::vector<std::vector<std::vector<double>>>& species) {
  OverlapDraw draw;
  draw.combined = combined;
  draw.per_species = species;
  return draw;
}

}  // namespace

TEST_CASE("weighted_overlap") {
  const std::vector<double> lambda = {0.5, 0.5};
  OverlapDraw draw = make_draw({{1.0, 0.3}, {0.3, 1.0}},
                               {{{1.0, 0.4}, {0.4, 1.0}}, {{1.0, 0.2}, {0.2, 1.0}}});
  const std::vector<double> ones = {1.0, 1.0};
  const std::vector<double> zeros = {0.0, 0.0};
  const std::vector<double> first = {1.0, 0.0};
  CHECK(weighted_overlap(draw, lambda, ones, 0, 1) ==
        doctest::Approx(0.3).epsilon(1e-14));
  CHECK(weighted_overlap(draw, lambda, zeros, 0, 1) == 0.0);
  CHECK(weighted_overlap(draw, lambda, first, 0, 1) ==
        doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("perturbation validation and covariance") {
  const ModelSpec spec = validate_model({"a"}, {1.0}, {{1.0}});
  const SpinAssignment assign = assign_species(spec, 8);

  PerturbationSpec pspec;
  pspec.w = {{1.0}};
  pspec.p_max = 2;
  pspec.x = {{1.5, 1.5}};
  pspec.gamma = 0.375;
  CHECK_NOTHROW(validate_perturbation(spec, pspec));

  PerturbationSpec bad = pspec;
  bad.gamma = 0.6;
  CHECK_THROWS_AS(validate_perturbation(spec, bad), validation_error);
  bad = pspec;
  bad.x = {{3.0, 1.5}};
  CHECK_THROWS_AS(validate_perturbation(spec, bad), validation_error);

  // Covariance over disorder of h at a configuration pair equals
  // sum_w sum_p (2^{-j(w)-p} x_{w,p})^2 R_w^p (independent tensors).
  std::vector<int> s1(8, 1), s2(8, 1);
  s2[0] = s2[1] = -1;  // R = 0.5
  const double r = 0.5;
  double theory = 0.0;
  for (int p = 1; p <= 2; ++p) {
    const double coeff = std::pow(2.0, -1 - p) * 1.5;
    theory += coeff * coeff * std::pow(r, p);
  }
  double acc = 0.0;
  const int draws = 20000;
  for (int d = 0; d < draws; ++d) {
    const PerturbationRealization pert =
        sample_perturbation(spec, pspec, assign, 500 + d);
    acc += perturbation_energy(pert, s1) * perturbation_energy(pert, s2);
  }
  CHECK(std::abs(acc / draws - theory) < 0.05 * theory + 0.002 * theory);
  CHECK(perturbation_hamiltonian(spec, pspec, assign, s1, 7) ==
        perturbation_hamiltonian(spec, pspec, assign, s1, 7));
}

TEST_CASE("enumerate_perturbation matches pointwise evaluation") {
  const ModelSpec spec = two_species();
  const SpinAssignment assign = assign_species(spec, 6);
  const PerturbationSpec pspec = default_perturbation(spec, 3);
  const PerturbationRealization pert = sample_perturbation(spec, pspec, assign, 11);
  const std::vector<double> all = enumerate_perturbation(pert);
  REQUIRE(all.size() == 64);
  for (unsigned bits : {0u, 17u, 42u, 63u}) {
    std::vector<int> sigma(6);
    for (int i = 0; i < 6; ++i) sigma[i] = (bits >> i) & 1 ? 1 : -1;
    CHECK(all[bits] == doctest::Approx(perturbation_energy(pert, sigma)).epsilon(1e-11));
  }
}

TEST_CASE("gibbs_distribution matches a 4-state hand oracle") {
  const ModelSpec spec = validate_model({"a"}, {1.0}, {{1.0}});
  const SpinAssignment assign = assign_species(spec, 2);
  const DisorderMatrix g = sample_disorder(spec, assign, 13);
  const std::vector<double> probs = gibbs_distribution(g, nullptr);
  REQUIRE(probs.size() == 4);
  double z = 0.0;
  std::vector<double> weights(4);
  for (unsigned bits = 0; bits < 4; ++bits) {
    const std::vector<int> sigma = {(bits & 1u) ? 1 : -1, (bits & 2u) ? 1 : -1};
    weights[bits] = std::exp(hamiltonian(g, sigma));
    z += weights[bits];
  }
  for (unsigned bits = 0; bits < 4; ++bits)
    CHECK(probs[bits] == doctest::Approx(weights[bits] / z).epsilon(1e-12));
}

TEST_CASE("gibbs_replica_samples") {
  const ModelSpec zero = validate_model({"a"}, {1.0}, {{0.0}});
  const OverlapSample flat = gibbs_replica_samples(zero, 10, nullptr, 2, 4000, 5);
  double mean = 0.0;
  for (const OverlapDraw& d : flat.draws) mean += d.combined[0][1];
  mean /= static_cast<double>(flat.draws.size());
  // Uniform replicas: E R = 0, Var R = 1/N per draw.
  CHECK(std::abs(mean) <= 3.0 * std::sqrt(0.1 / 4000.0));

  const ModelSpec spec = two_species();
  const OverlapSample a = gibbs_replica_samples(spec, 8, nullptr, 3, 50, 2);
  const OverlapSample b = gibbs_replica_samples(spec, 8, nullptr, 3, 50, 2);
  for (std::size_t d = 0; d < a.draws.size(); ++d)
    CHECK(a.draws[d].combined == b.draws[d].combined);
  // Spin-derived arrays: unit diagonal, R = sum lambda_s R^s.
  for (const OverlapDraw& d : a.draws) {
    CHECK(d.combined[1][1] == 1.0);
    for (int l = 0; l < 3; ++l)
      for (int lp = 0; lp < 3; ++lp) {
        const double rec = 0.5 * d.per_species[0][l][lp] + 0.5 * d.per_species[1][l][lp];
        CHECK(d.combined[l][lp] == doctest::Approx(rec).epsilon(1e-12));
      }
  }
}

TEST_CASE("gg_delta exact cancellations") {
  const ModelSpec spec = two_species();
  const RsbParams params{2, {0.4, 0.8}, {{0.0, 0.3, 1.0}, {0.0, 0.5, 1.0}}};
  const std::vector<double> qc = {0.0, 0.4, 1.0};
  const OverlapSample sample = exact_overlap_samples(spec, params, qc, 3, 2000, 21);
  const std::vector<double> lambda = {0.5, 0.5};
  const std::vector<double> w = {1.0, 1.0};

  TestFunction constant;  // f == 1
  const GgDeltaResult c = gg_delta(sample, lambda, constant, 2, w, 1);
  CHECK(c.delta <= 1e-12);  // replica symmetrization forces exact cancellation

  TestFunction indicator;
  indicator.kind = TestFunction::Kind::indicator;
  indicator.threshold = 0.4;
  const GgDeltaResult d = gg_delta(sample, lambda, indicator, 2, w, 1);
  CHECK(d.delta <= 3.0 * d.se + 1e-12);

  OverlapSample few = sample;
  few.n_replicas = 2;
  for (OverlapDraw& draw : few.draws) {
    draw.combined.resize(2);
    for (auto& row : draw.combined) row.resize(2);
    for (auto& sp : draw.per_species) {
      sp.resize(2);
      for (auto& row : sp) row.resize(2);
    }
  }
  CHECK_THROWS_AS(gg_delta(few, lambda, indicator, 2, w, 1), validation_error);
}

TEST_CASE("gg identities hold on exact cascade samples") {
  const ModelSpec spec = two_species();
  const RsbParams params{2, {0.4, 0.8}, {{0.0, 0.3, 1.0}, {0.0, 0.5, 1.0}}};
  const std::vector<double> qc = {0.0, 0.4, 1.0};
  const OverlapSample sample = exact_overlap_samples(spec, params, qc, 4, 20000, 31);
  const std::vector<double> lambda = {0.5, 0.5};
  TestFunction monomial;
  monomial.kind = TestFunction::Kind::monomial;
  monomial.degree = 2;
  for (const std::vector<double>& w :
       {std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 0.0},
        std::vector<double>{0.5, 0.5}}) {
    for (int p : {1, 2}) {
      const GgDeltaResult res = gg_delta(sample, lambda, monomial, 3, w, p);
      CHECK(res.delta <= 3.0 * res.se + 1e-12);
    }
  }
}

TEST_CASE("ultrametricity_violation") {
  const ModelSpec spec = two_species();
  const RsbParams params{2, {0.4, 0.8}, {{0.0, 0.3, 1.0}, {0.0, 0.5, 1.0}}};
  const std::vector<double> qc = {0.0, 0.4, 1.0};
  const OverlapSample cascade =
      cascade_overlap_samples(spec, params, qc, 30, 4, 300, 8);
  const UltrametricityResult u = ultrametricity_violation(cascade);
  CHECK(u.max_violation == 0.0);
  CHECK(u.violating_fraction == 0.0);

  OverlapSample constant;
  constant.species = {"a"};
  constant.n_replicas = 3;
  constant.draws.push_back(make_draw(
      {{1.0, 0.5, 0.5}, {0.5, 1.0, 0.5}, {0.5, 0.5, 1.0}},
      {{{1.0, 0.5, 0.5}, {0.5, 1.0, 0.5}, {0.5, 0.5, 1.0}}}));
  CHECK(ultrametricity_violation(constant).max_violation == 0.0);

  OverlapSample adversarial;
  adversarial.species = {};
  adversarial.n_replicas = 3;
  OverlapDraw bad;
  bad.combined = {{1.0, 0.9, 0.9}, {0.9, 1.0, 0.1}, {0.9, 0.1, 1.0}};
  adversarial.draws.push_back(bad);
  CHECK(ultrametricity_violation(adversarial).max_violation ==
        doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("fit_synchronization") {
  const ModelSpec spec = two_species();
  const RsbParams params{2, {0.4, 0.8}, {{0.0, 0.3, 1.0}, {0.0, 0.5, 1.0}}};
  const std::vector<double> qc = {0.0, 0.4, 1.0};
  const OverlapSample cascade =
      cascade_overlap_samples(spec, params, qc, 30, 4, 500, 14);
  const std::vector<SyncFit> fits = fit_synchronization(cascade);
  REQUIRE(fits.size() == 2);
  for (int s = 0; s < 2; ++s) {
    CHECK(fits[s].max_residual <= 1e-12);
    for (std::size_t k = 0; k < fits[s].knots_x.size(); ++k) {
      // Every knot must be one of the (q_l, q^s_l) pairs.
      bool matched = false;
      for (int l = 0; l <= 2; ++l)
        if (std::abs(fits[s].knots_x[k] - qc[l]) < 1e-12)
          matched = std::abs(fits[s].fitted[k] - params.q[s][l]) < 1e-9;
      CHECK(matched);
    }
  }

  // Synthetic pairs from the map L(q) = min(q / lambda, 1).
  const double lam = 0.4;
  OverlapSample synth;
  synth.species = {"a"};
  synth.n_replicas = 2;
  for (int k = 0; k <= 40; ++k) {
    const double q = k / 40.0;
    const double ls = std::min(q / lam, 1.0);
    synth.draws.push_back(
        make_draw({{1.0, q}, {q, 1.0}}, {{{1.0, ls}, {ls, 1.0}}}));
  }
  const std::vector<SyncFit> sf = fit_synchronization(synth);
  CHECK(sf[0].max_residual <= 1e-12);
  CHECK(sf[0].lipschitz <= 1.0 / lam + 1e-9);

  // Constant combined overlap: degenerate fit, Lipschitz reported as 0.
  OverlapSample flat;
  flat.species = {"a"};
  flat.n_replicas = 2;
  flat.draws.push_back(make_draw({{1.0, 0.5}, {0.5, 1.0}}, {{{1.0, 0.3}, {0.3, 1.0}}}));
  const std::vector<SyncFit> df = fit_synchronization(flat);
  CHECK(df[0].lipschitz == 0.0);
}

TEST_CASE("kolmogorov_distance") {
  OverlapSample sample;
  sample.species = {};
  sample.n_replicas = 2;
  auto add = [&](double v, int count) {
    for (int k = 0; k < count; ++k)
      sample.draws.push_back(make_draw({{1.0, v}, {v, 1.0}}, {}));
  };
  add(0.0, 5);
  add(0.5, 3);
  add(1.0, 2);
  // Sample CDF: 0.5 at 0-, ... vs target P(0)=0.4, P(0.5)=0.4, P(1)=0.2.
  const std::vector<double> values = {0.0, 0.5, 1.0};
  const std::vector<double> probs = {0.4, 0.4, 0.2};
  CHECK(kolmogorov_distance(sample, values, probs) ==
        doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("gg_delta is invariant under replica permutation of the input") {
  const ModelSpec spec = two_species();
  const RsbParams params{1, {0.5}, {{0.0, 1.0}, {0.0, 1.0}}};
  const std::vector<double> qc = {0.0, 1.0};
  OverlapSample sample = exact_overlap_samples(spec, params, qc, 3, 500, 3);
  const std::vector<double> lambda = {0.5, 0.5};
  const std::vector<double> w = {1.0, 0.5};
  TestFunction f;
  f.kind = TestFunction::Kind::monomial;
  f.degree = 1;
  const GgDeltaResult before = gg_delta(sample, lambda, f, 2, w, 1);
  // Swap replicas 0 and 2 in every draw.
  for (OverlapDraw& draw : sample.draws) {
    auto swap_array = [](std::vector<std::vector<double>>& a) {
      std::swap(a[0], a[2]);
      for (auto& row : a) std::swap(row[0], row[2]);
    };
    swap_array(draw.combined);
    for (auto& sp : draw.per_species) swap_array(sp);
  }
  const GgDeltaResult after = gg_delta(sample, lambda, f, 2, w, 1);
  CHECK(std::abs(before.delta - after.delta) <= 1e-12);
}
