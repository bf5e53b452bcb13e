#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mspk/model.hpp"
#include "mspk/overlap_sample.hpp"

namespace mspk {

/// Perturbation family: weight vectors w, interaction orders p <= p_max,
/// coefficients x[w index][p-1] in [1,2], and the exponent gamma of the
/// strength s_N = N^gamma.
struct PerturbationSpec {
  std::vector<std::vector<double>> w;
  int p_max = 3;
  std::vector<std::vector<double>> x;
  double gamma = 0.375;
};

/// Default family: all nonzero 0/1 vectors plus the all-0.5 vector,
/// coefficients drawn uniformly from [1,2].
PerturbationSpec default_perturbation(const ModelSpec& spec, std::uint64_t seed);

void validate_perturbation(const ModelSpec& spec, const PerturbationSpec& pspec);

/// Sampled coupling tensors for one disorder realization of h_N.
struct PerturbationRealization {
  int n = 0;
  double s_n = 0.0;                                  // N^gamma
  std::vector<double> site_w;                        // w_{s(i)} per (w idx, site)
  std::vector<std::vector<std::vector<double>>> g;   // [w idx][p-1] flat tensor, N^p
  std::vector<std::vector<double>> coeff;            // 2^{-j(w)-p} x_{w,p}
};

inline constexpr long kDefaultTensorCap = 10000000;

PerturbationRealization sample_perturbation(const ModelSpec& spec,
                                            const PerturbationSpec& pspec,
                                            const SpinAssignment& assign,
                                            std::uint64_t seed,
                                            long tensor_cap = kDefaultTensorCap);

/// h_N(sigma) = sum_w sum_p 2^{-j(w)-p} x_{w,p} h_{N,w,p}(sigma), where
/// h_{N,w,p} = N^{-p/2} sum g_{i_1..i_p} prod sigma_{i_k} sqrt(w_{s(i_k)}).
double perturbation_energy(const PerturbationRealization& pert,
                           std::span<const int> sigma);

/// Convenience matching the one-shot operation shape.
double perturbation_hamiltonian(const ModelSpec& spec, const PerturbationSpec& pspec,
                                const SpinAssignment& assign,
                                std::span<const int> sigma, std::uint64_t seed);

/// h_N over all 2^N configurations (state index: bit i set <=> sigma_i = +1),
/// evaluated by a Gray-code sweep with incremental tensor contractions.
std::vector<double> enumerate_perturbation(const PerturbationRealization& pert);

/// H_N over all 2^N configurations, same state indexing.
std::vector<double> enumerate_hamiltonian(const DisorderMatrix& disorder,
                                          int enumeration_cap = kDefaultEnumerationCap);

/// Exact Gibbs probabilities of H_N + s_N h_N over all 2^N states.
std::vector<double> gibbs_distribution(const DisorderMatrix& disorder,
                                       const PerturbationRealization* pert,
                                       int enumeration_cap = kDefaultEnumerationCap);

/// Exact replica sampling: per draw, fresh disorder (and perturbation
/// couplings when pspec is given), n i.i.d. configurations from the exact
/// Gibbs distribution, overlap arrays with unit diagonal.
OverlapSample gibbs_replica_samples(const ModelSpec& spec, int n_spins,
                                    const PerturbationSpec* pspec, int n_replicas,
                                    int draws, std::uint64_t seed,
                                    int enumeration_cap = kDefaultEnumerationCap);

/// R_w = sum_s lambda_s w_s R^s_{l,l'} for one draw.
double weighted_overlap(const OverlapDraw& draw, std::span<const double> lambda,
                        std::span<const double> w, int l, int lp);

/// Named bounded test functions over the first n replicas of a draw.
struct TestFunction {
  enum class Kind { constant, indicator, monomial };
  Kind kind = Kind::constant;
  double c = 1.0;          // constant value (also scales the other kinds)
  int i = 0, j = 1;        // overlap entry the function looks at
  int species = -1;        // -1: combined array, else species index
  double threshold = 0.0;  // indicator: 1{R_{ij} >= threshold}
  int degree = 1;          // monomial: R_{ij}^degree
};

double eval_test_function(const TestFunction& f, const OverlapDraw& draw);

struct GgDeltaResult {
  double delta = 0.0;   // |T1 - T2/n - T3/n|
  double se = 0.0;      // jackknife SE over draws
  double t1 = 0.0, t2 = 0.0, t3 = 0.0;
};

/// Ghirlanda-Guerra statistic
///   Delta(f,n,w,p) = |E<f R_w(1,n+1)^p> - (1/n) E<f> E<R_w(1,2)^p>
///                    - (1/n) sum_{l=2}^n E<f R_w(1,l)^p>|
/// computed on n+1 replicas per draw, symmetrized over all replica
/// permutations so exchangeability holds exactly.
GgDeltaResult gg_delta(const OverlapSample& sample, std::span<const double> lambda,
                       const TestFunction& f, int n, std::span<const double> w,
                       int p);

struct UltrametricityResult {
  double max_violation = 0.0;
  double violating_fraction = 0.0;
  long triples = 0;
};

/// max over draws, arrays (combined + per species) and ordered triples of
/// max(0, min(R_{l,l'}, R_{l,l''}) - R_{l',l''}).
UltrametricityResult ultrametricity_violation(const OverlapSample& sample,
                                              double tol = 1e-9);

struct SyncFit {
  std::vector<double> knots_x;   // distinct combined-overlap values
  std::vector<double> fitted;    // isotonic fit of R^s at each knot
  double max_residual = 0.0;
  double lipschitz = 0.0;        // max secant slope between distinct knots
  long n_points = 0;
};

/// Weighted isotonic (pool-adjacent-violators) regression of each species
/// overlap on the combined overlap, pooled over all draws and pairs.
std::vector<SyncFit> fit_synchronization(const OverlapSample& sample);

/// Kolmogorov distance between the sample law of R_{12} (combined) and a
/// discrete target law given as (value, probability) pairs.
double kolmogorov_distance(const OverlapSample& sample,
                           std::span<const double> values,
                           std::span<const double> probs);

}  // namespace mspk
