#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mspk/errors.hpp"
#include "mspk/model.hpp"
#include "mspk/rng.hpp"

using namespace mspk;

namespace {

ModelSpec two_species() {
  return validate_model({"a", "b"}, {0.5, 0.5}, {{1.0, 0.5}, {0.5, 1.0}});
}

std::vector<int> bits_to_sigma(unsigned bits, int n) {
  std::vector<int> sigma(n);
  for (int i = 0; i < n; ++i) sigma[i] = (bits >> i) & 1 ? 1 : -1;
  return sigma;
}

}  // namespace

TEST_CASE("validate_model accepts and classifies") {
  const ModelSpec one = validate_model({"a"}, {1.0}, {{1.0}});
  CHECK(one.psd);

  const ModelSpec anti = validate_model({"a", "b"}, {0.5, 0.5}, {{0.0, 1.0}, {1.0, 0.0}});
  CHECK_FALSE(anti.psd);  // eigenvalues +-1

  CHECK(two_species().psd);
}

TEST_CASE("validate_model rejects bad input") {
  CHECK_THROWS_AS(validate_model({"a", "b"}, {0.6, 0.5}, {{1.0, 0.0}, {0.0, 1.0}}),
                  validation_error);
  CHECK_THROWS_AS(validate_model({"a", "b"}, {0.5, 0.5}, {{1.0, 0.2}, {0.3, 1.0}}),
                  validation_error);
  CHECK_THROWS_AS(validate_model({"a"}, {1.0}, {{-0.5}}), validation_error);
  CHECK_THROWS_AS(validate_model({"a", "b"}, {1.0, 0.0}, {{1.0, 0.0}, {0.0, 1.0}}),
                  validation_error);
  CHECK_THROWS_AS(validate_model({}, {}, {}), validation_error);
}

TEST_CASE("assign_species largest-remainder rounding") {
  const ModelSpec even = two_species();
  const SpinAssignment a = assign_species(even, 10);
  CHECK(a.counts[0] == 5);
  CHECK(a.counts[1] == 5);
  CHECK(a.block_begin[0] == 0);
  CHECK(a.block_begin[1] == 5);
  for (int i = 0; i < 5; ++i) CHECK(a.species_of[i] == 0);

  const ModelSpec thirds =
      validate_model({"a", "b"}, {1.0 / 3.0, 2.0 / 3.0}, {{1.0, 0.0}, {0.0, 1.0}});
  const SpinAssignment b = assign_species(thirds, 10);
  CHECK(b.counts[0] == 3);
  CHECK(b.counts[1] == 7);
  CHECK(b.realized_lambda[0] == doctest::Approx(0.3).epsilon(1e-14));

  CHECK_THROWS_AS(assign_species(even, 1), validation_error);
}

TEST_CASE("sample_disorder zero variance and determinism") {
  const ModelSpec zero = validate_model({"a"}, {1.0}, {{0.0}});
  const SpinAssignment a = assign_species(zero, 6);
  const DisorderMatrix g = sample_disorder(zero, a, 11);
  for (double v : g.g) CHECK(v == 0.0);

  const ModelSpec spec = two_species();
  const SpinAssignment b = assign_species(spec, 12);
  const DisorderMatrix g1 = sample_disorder(spec, b, 42);
  const DisorderMatrix g2 = sample_disorder(spec, b, 42);
  CHECK(g1.g == g2.g);
  const DisorderMatrix g3 = sample_disorder(spec, b, 43);
  CHECK(g1.g != g3.g);
}

TEST_CASE("sample_disorder blockwise variances (Monte Carlo)") {
  const ModelSpec spec =
      validate_model({"a", "b"}, {0.5, 0.5}, {{1.0, 0.25}, {0.25, 2.0}});
  const SpinAssignment assign = assign_species(spec, 8);
  const int draws = 10000;
  // One entry per block: (0,1) aa, (1,6) ab, (6,7) bb.
  double saa = 0, sab = 0, sbb = 0;
  for (int d = 0; d < draws; ++d) {
    const DisorderMatrix g = sample_disorder(spec, assign, 1000 + d);
    saa += g(0, 1) * g(0, 1);
    sab += g(1, 6) * g(1, 6);
    sbb += g(6, 7) * g(6, 7);
  }
  CHECK(std::abs(saa / draws - 1.0) < 0.05 * 1.0);
  CHECK(std::abs(sab / draws - 0.25) < 0.05 * 0.25 * 1.5);  // 5% is ~2.4 sigma here
  CHECK(std::abs(sbb / draws - 2.0) < 0.05 * 2.0);
}

TEST_CASE("hamiltonian values and symmetry") {
  // all couplings 1, all spins +1, N=2 -> (1/sqrt(2)) * 4 = 2^{3/2}
  DisorderMatrix g;
  g.n = 2;
  g.g = {1.0, 1.0, 1.0, 1.0};
  const std::vector<int> up = {1, 1};
  CHECK(hamiltonian(g, up) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-14));

  const ModelSpec spec = two_species();
  const SpinAssignment assign = assign_species(spec, 6);
  const DisorderMatrix d = sample_disorder(spec, assign, 5);
  const std::vector<int> sigma = {1, -1, 1, 1, -1, -1};
  std::vector<int> neg(sigma);
  for (int& s : neg) s = -s;
  CHECK(hamiltonian(d, sigma) == doctest::Approx(hamiltonian(d, neg)).epsilon(1e-15));
}

TEST_CASE("hamiltonian agrees with a direct double-loop oracle") {
  const ModelSpec spec = validate_model({"a"}, {1.0}, {{1.0}});
  const SpinAssignment assign = assign_species(spec, 3);
  const DisorderMatrix g = sample_disorder(spec, assign, 9);
  const std::vector<int> sigma = {1, -1, 1};
  double direct = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) direct += g(i, j) * sigma[i] * sigma[j];
  direct /= std::sqrt(3.0);
  CHECK(hamiltonian(g, sigma) == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("species_overlaps") {
  const ModelSpec spec = two_species();
  const SpinAssignment assign = assign_species(spec, 6);
  const std::vector<int> s1 = {1, 1, 1, 1, 1, 1};
  Overlaps self = species_overlaps(assign, s1, s1);
  CHECK(self.per_species[0] == 1.0);
  CHECK(self.per_species[1] == 1.0);
  CHECK(self.combined == 1.0);

  std::vector<int> neg(s1);
  for (int& s : neg) s = -s;
  Overlaps anti = species_overlaps(assign, s1, neg);
  CHECK(anti.per_species[0] == -1.0);
  CHECK(anti.per_species[1] == -1.0);

  const std::vector<int> s2 = {1, 1, -1, -1, -1, -1};
  Overlaps o = species_overlaps(assign, s1, s2);
  CHECK(o.per_species[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(o.per_species[1] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(o.combined == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("combined overlap is the realized-lambda average") {
  const ModelSpec spec =
      validate_model({"a", "b"}, {1.0 / 3.0, 2.0 / 3.0}, {{1.0, 0.0}, {0.0, 1.0}});
  const SpinAssignment assign = assign_species(spec, 11);
  RngStream rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<int> s1(11), s2(11);
    for (int i = 0; i < 11; ++i) {
      s1[i] = rng.uniform() < 0.5 ? 1 : -1;
      s2[i] = rng.uniform() < 0.5 ? 1 : -1;
    }
    const Overlaps o = species_overlaps(assign, s1, s2);
    double combined = 0.0;
    for (std::size_t s = 0; s < 2; ++s)
      combined += assign.realized_lambda[s] * o.per_species[s];
    CHECK(o.combined == doctest::Approx(combined).epsilon(1e-14));
  }
}

TEST_CASE("exact_log_partition") {
  const ModelSpec zero = validate_model({"a"}, {1.0}, {{0.0}});
  const SpinAssignment az = assign_species(zero, 9);
  const DisorderMatrix gz = sample_disorder(zero, az, 0);
  CHECK(exact_log_partition(gz) == doctest::Approx(9.0 * std::log(2.0)).epsilon(1e-14));

  const ModelSpec spec = validate_model({"a"}, {1.0}, {{1.0}});
  const SpinAssignment assign = assign_species(spec, 3);
  const DisorderMatrix g = sample_disorder(spec, assign, 77);
  double naive = 0.0;
  for (unsigned bits = 0; bits < 8; ++bits)
    naive += std::exp(hamiltonian(g, bits_to_sigma(bits, 3)));
  CHECK(exact_log_partition(g) == doctest::Approx(std::log(naive)).epsilon(1e-12));

  DisorderMatrix big;
  big.n = 30;
  big.g.assign(900, 0.0);
  CHECK_THROWS_AS(exact_log_partition(big), resource_error);
}

TEST_CASE("log partition is bracketed by the extreme energies") {
  const ModelSpec spec = two_species();
  const SpinAssignment assign = assign_species(spec, 10);
  const DisorderMatrix g = sample_disorder(spec, assign, 21);
  double hmin = 1e300, hmax = -1e300;
  for (unsigned bits = 0; bits < (1u << 10); ++bits) {
    const double h = hamiltonian(g, bits_to_sigma(bits, 10));
    hmin = std::min(hmin, h);
    hmax = std::max(hmax, h);
  }
  const double lz = exact_log_partition(g);
  CHECK(lz >= 10 * std::log(2.0) + hmin - 1e-10);
  CHECK(lz <= 10 * std::log(2.0) + hmax + 1e-10);
}

TEST_CASE("free_energy_mc") {
  const ModelSpec zero = validate_model({"a"}, {1.0}, {{0.0}});
  const MeanWithError fz = free_energy_mc(zero, 8, 10, 1);
  CHECK(fz.mean == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(fz.se == 0.0);

  const ModelSpec spec = two_species();
  const MeanWithError f1 = free_energy_mc(spec, 10, 50, 7);
  const MeanWithError f2 = free_energy_mc(spec, 10, 50, 7);
  CHECK(f1.mean == f2.mean);
  CHECK(f1.se == f2.se);

  // Relabeling the species (and permuting lambda / delta_sq consistently)
  // leaves the estimator unchanged.
  const ModelSpec relabeled =
      validate_model({"b", "a"}, {0.5, 0.5}, {{1.0, 0.5}, {0.5, 1.0}});
  const MeanWithError f3 = free_energy_mc(relabeled, 10, 50, 7);
  CHECK(std::abs(f3.mean - f1.mean) <= 1e-14);
}

TEST_CASE("annealed bound on a psd model") {
  const ModelSpec spec = two_species();
  const MeanWithError f = free_energy_mc(spec, 12, 200, 3);
  CHECK(f.mean <= annealed_value(spec) + 3.0 * f.se);
  CHECK(annealed_value(spec) ==
        doctest::Approx(std::log(2.0) + 0.5 * 0.25 * (1.0 + 0.5 + 0.5 + 1.0))
            .epsilon(1e-14));
}

TEST_CASE("empirical_hamiltonian_covariance") {
  const ModelSpec spec = two_species();
  const SpinAssignment assign = assign_species(spec, 20);

  std::vector<std::pair<std::vector<int>, std::vector<int>>> pairs;
  std::vector<int> up(20, 1);
  pairs.emplace_back(up, up);  // equal pair: theory = sum Delta^2 lambda lambda
  std::vector<int> mixed(up);
  mixed[0] = mixed[10] = -1;  // R_a = R_b = 0.8 keeps the theory value large
  pairs.emplace_back(up, mixed);

  const auto checks = empirical_hamiltonian_covariance(spec, assign, pairs, 10000, 5);
  CHECK(checks[0].theory ==
        doctest::Approx(0.25 * (1.0 + 0.5 + 0.5 + 1.0)).epsilon(1e-12));
  for (const CovarianceCheck& c : checks) CHECK(c.rel_err < 0.05);

  const ModelSpec zero = validate_model({"a"}, {1.0}, {{0.0}});
  const SpinAssignment za = assign_species(zero, 10);
  std::vector<int> zup(10, 1);
  const auto zc = empirical_hamiltonian_covariance(
      zero, za, {{zup, zup}}, 200, 1);
  CHECK(zc[0].mc == 0.0);
  CHECK(zc[0].theory == 0.0);

  // Single species reduces to the SK covariance R^2.
  const ModelSpec single = validate_model({"a"}, {1.0}, {{1.0}});
  const SpinAssignment sa = assign_species(single, 10);
  std::vector<int> s2(10, 1);
  s2[0] = s2[1] = -1;  // R = 0.6
  const auto sc = empirical_hamiltonian_covariance(single, sa, {{zup, s2}}, 100, 1);
  CHECK(sc[0].theory == doctest::Approx(0.36).epsilon(1e-12));
}

TEST_CASE("empirical_cavity_covariance") {
  const ModelSpec zero = validate_model({"a"}, {1.0}, {{0.0}});
  const SpinAssignment za = assign_species(zero, 20);
  std::vector<int> zup(20, 1);
  const auto zc = empirical_cavity_covariance(zero, za, 0, {{zup, zup}}, 200, 1);
  CHECK(zc[0].z.mc == 0.0);
  CHECK(zc[0].y.mc == 0.0);

  const ModelSpec single = validate_model({"a"}, {1.0}, {{1.0}});
  const int n = 200;
  const SpinAssignment sa = assign_species(single, n);
  std::vector<int> up(n, 1);
  const auto sc = empirical_cavity_covariance(single, sa, 0, {{up, up}}, 10000, 9);
  CHECK(sc[0].z.theory == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sc[0].y.theory == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sc[0].z.rel_err < 0.05 + 2.0 / n);
  CHECK(sc[0].y.rel_err < 0.05 + 2.0 / n);

  // Two species, antipodal pair: z covariance theory is -2 sum_t Delta^2 lambda_t.
  const ModelSpec spec = two_species();
  const SpinAssignment ta = assign_species(spec, n);
  std::vector<int> tup(n, 1), tdown(n, -1);
  const auto tc = empirical_cavity_covariance(spec, ta, 0, {{tup, tdown}}, 10000, 9);
  CHECK(tc[0].z.theory == doctest::Approx(-2.0 * (0.5 + 0.25)).epsilon(1e-12));
  CHECK(tc[0].z.rel_err < 0.05 + 2.0 / n);
}

TEST_CASE("disorder persistence round trip") {
  const ModelSpec spec = two_species();
  const SpinAssignment assign = assign_species(spec, 8);
  const DisorderMatrix g = sample_disorder(spec, assign, 17);
  const std::string path = "test_disorder.bin";
  save_disorder(g, path);
  const DisorderMatrix back = load_disorder(path);
  CHECK(back.n == g.n);
  CHECK(back.g == g.g);
  std::remove(path.c_str());
}
