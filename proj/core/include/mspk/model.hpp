#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mspk/errors.hpp"
#include "mspk/rng.hpp"

namespace mspk {

/// Multi-species SK model: species labels, limiting proportions and the
/// matrix of interaction variances.
struct ModelSpec {
  std::vector<std::string> species;
  std::vector<double> lambda;                  // per-species proportion, sums to 1
  std::vector<std::vector<double>> delta_sq;   // |S| x |S|, symmetric, entries >= 0
  bool psd = false;                            // smallest eigenvalue >= -1e-10

  std::size_t n_species() const { return species.size(); }
};

/// Validates a raw model description.  Throws validation_error naming the
/// violated invariant; computes the psd flag.
ModelSpec validate_model(std::vector<std::string> species,
                         std::vector<double> lambda,
                         std::vector<std::vector<double>> delta_sq);

/// Partition of {0..N-1} into contiguous per-species blocks.
struct SpinAssignment {
  int n_total = 0;
  std::vector<int> counts;             // N_s, species order
  std::vector<int> block_begin;        // first index of each species block
  std::vector<int> species_of;         // size N
  std::vector<double> realized_lambda; // N_s / N

  int species_at(int i) const { return species_of[i]; }
};

/// Largest-remainder rounding of lambda_s * N, ties broken by species order,
/// contiguous blocks in species order.  Requires N >= |S|.
SpinAssignment assign_species(const ModelSpec& spec, int n);

/// N x N matrix of independent centered Gaussian couplings with
/// blockwise variances Delta^2_{st}.
struct DisorderMatrix {
  int n = 0;
  std::vector<double> g;  // row-major
  std::uint64_t seed = 0;

  double operator()(int i, int j) const { return g[static_cast<std::size_t>(i) * n + j]; }
};

DisorderMatrix sample_disorder(const ModelSpec& spec, const SpinAssignment& assign,
                               std::uint64_t seed);

/// H_N(sigma) = N^{-1/2} sum_{i,j} g_ij sigma_i sigma_j (diagonal included).
double hamiltonian(const DisorderMatrix& disorder, std::span<const int> sigma);

struct Overlaps {
  std::vector<double> per_species;  // R_s
  double combined = 0.0;            // R = sum_s (N_s/N) R_s
};

Overlaps species_overlaps(const SpinAssignment& assign, std::span<const int> sigma1,
                          std::span<const int> sigma2);

inline constexpr int kDefaultEnumerationCap = 24;

/// log Z_N by Gray-code enumeration of all 2^N configurations with
/// streaming log-sum-exp.  Throws resource_error above the cap.
double exact_log_partition(const DisorderMatrix& disorder,
                           int enumeration_cap = kDefaultEnumerationCap);

struct MeanWithError {
  double mean = 0.0;
  double se = 0.0;
  long n = 0;
};

/// Sample mean and standard error of (1/N) log Z_N over independent
/// disorder draws; draw d uses substream d of `seed`.
MeanWithError free_energy_mc(const ModelSpec& spec, int n, int samples,
                             std::uint64_t seed,
                             int enumeration_cap = kDefaultEnumerationCap);

struct CovarianceCheck {
  double mc = 0.0;
  double mc_se = 0.0;
  double theory = 0.0;
  double rel_err = 0.0;  // |mc - theory| / |theory| (inf if theory == 0 and mc != 0)
};

/// Monte Carlo estimate of (1/N) E H(s1) H(s2) against
/// sum_{s,t} Delta^2_{st} lambda_s lambda_t R_s R_t for the given
/// configuration pairs (common disorder draws across pairs).
std::vector<CovarianceCheck> empirical_hamiltonian_covariance(
    const ModelSpec& spec, const SpinAssignment& assign,
    const std::vector<std::pair<std::vector<int>, std::vector<int>>>& pairs,
    int draws, std::uint64_t seed, bool use_realized_lambda = true);

struct CavityCovarianceCheck {
  CovarianceCheck z;  // cavity field, one added spin of the chosen species
  CovarianceCheck y;  // correction field
};

/// Covariances of the cavity fields z and y (k = 1) against
/// 2 sum_t Delta^2_{st} lambda_t R_t and sum_{s,t} Delta^2 lambda lambda R_s R_t.
std::vector<CavityCovarianceCheck> empirical_cavity_covariance(
    const ModelSpec& spec, const SpinAssignment& assign, int cavity_species,
    const std::vector<std::pair<std::vector<int>, std::vector<int>>>& pairs,
    int draws, std::uint64_t seed, bool use_realized_lambda = true);

/// Annealed value log 2 + (1/2) sum_{s,t} Delta^2_{st} lambda_s lambda_t.
double annealed_value(const ModelSpec& spec);

/// Binary persistence: 16-byte header (magic "MSPK", u32 version, u64 N)
/// followed by row-major 64-bit floats.
void save_disorder(const DisorderMatrix& disorder, const std::string& path);
DisorderMatrix load_disorder(const std::string& path);

}  // namespace mspk
