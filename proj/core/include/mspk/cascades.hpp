#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mspk/model.hpp"
#include "mspk/overlap_sample.hpp"
#include "mspk/parisi.hpp"

namespace mspk {

inline constexpr long kDefaultLeafCap = 100000;

/// Truncated Ruelle probability cascade of depth r: each node at depth l
/// keeps the branching[l] largest atoms a_k = T_k^{-1/zeta_l} of its
/// Poisson process; leaf weights are normalized products along the path.
struct CascadeTree {
  int depth = 0;
  std::vector<int> branching;      // kept atoms per node, one entry per level
  std::vector<double> zeta;
  std::vector<double> log_v;       // normalized leaf log-weights (logsumexp 0)
  std::vector<double> v;           // exp(log_v), sums to 1
  std::vector<long> stride;        // leaves per subtree hanging off level l
  double discarded_mass = 0.0;     // tail-mass estimate summed over nodes
  std::uint64_t seed = 0;

  long n_leaves() const { return static_cast<long>(v.size()); }
  /// Digit of leaf alpha at tree level l (mixed-radix, root first).
  int child_at(long alpha, int level) const;
  /// Depth of the last common ancestor of two leaves (alpha wedge beta).
  int common_depth(long alpha, long beta) const;
};

CascadeTree sample_cascade(std::span<const double> zeta,
                           std::span<const int> branching, std::uint64_t seed,
                           long leaf_cap = kDefaultLeafCap);

/// Uniform truncation M per node; deeper levels are halved (never below 2)
/// until the leaf count fits the cap.
CascadeTree sample_cascade(std::span<const double> zeta, int m, std::uint64_t seed,
                           long leaf_cap = kDefaultLeafCap);

/// Hierarchical Gaussian fields on the leaves:
///   E C^s(alpha) C^s(beta) = Q^s_{alpha wedge beta},
///   E D(alpha) D(beta)     = Q_{alpha wedge beta},
/// realized by summing independent per-edge increments along each path.
struct FieldSample {
  std::vector<std::vector<double>> c;  // per species, per leaf
  std::vector<double> d;               // per leaf
  std::uint64_t seed = 0;
};

FieldSample sample_fields(const CascadeTree& tree, const PathSequences& paths,
                          std::uint64_t seed);

/// log sum_alpha v_alpha cosh C^s(alpha); expectation over resamplings
/// approaches X^s_0 of the recursion.
double cascade_log_ch(const CascadeTree& tree, const FieldSample& fields, int s);

/// log sum_alpha v_alpha exp(t D(alpha)); expectation approaches
/// (t^2/2) sum_l zeta_l (Q_{l+1} - Q_l).
double cascade_log_exp(const CascadeTree& tree, std::span<const double> dfield,
                       double t);

struct PhiConfig {
  int truncation = 25;          // per-node M for the cascade
  int samples = 200;            // (disorder, cascade, fields) resamplings
  long leaf_cap = kDefaultLeafCap;
  long work_cap = 200000000;    // cap on samples * 2^N * leaves
  int enumeration_cap = kDefaultEnumerationCap;
};

/// Monte Carlo estimates of the interpolation
///   phi(x) = (1/N) E log sum_{sigma,alpha} v_alpha
///            exp(sqrt(x) H_N(sigma) + sqrt(1-x) sum_i sigma_i C_i(alpha)
///                + sqrt(x) sqrt(N) D(alpha)),
/// evaluated at all requested x with common random numbers per sample.
std::vector<MeanWithError> interpolation_phi(const ModelSpec& spec, int n,
                                             const RsbParams& params,
                                             std::span<const double> xs,
                                             const PhiConfig& config,
                                             std::uint64_t seed);

/// Same estimate, keeping the per-sample values (per_sample[k][j] is sample
/// k at xs[j]) so callers can form exact SEs of cross-x differences under
/// the common random numbers.
struct PhiCurve {
  std::vector<double> xs;
  std::vector<MeanWithError> phi;
  std::vector<std::vector<double>> per_sample;
};

PhiCurve interpolation_phi_curve(const ModelSpec& spec, int n,
                                 const RsbParams& params,
                                 std::span<const double> xs,
                                 const PhiConfig& config, std::uint64_t seed);

/// Overlap array of n replicas drawn i.i.d. from the leaf weights:
/// R_{ll'} = q_combined[depth(alpha^l wedge alpha^{l'})], per species via
/// q_species (synchronization: every entry a fixed function of the
/// combined one).  Diagonals take the final sequence values.
OverlapDraw sample_overlap_array(const CascadeTree& tree,
                                 std::span<const double> q_combined,
                                 const std::vector<std::vector<double>>& q_species,
                                 int n, std::uint64_t seed);

/// Convenience: `draws` overlap arrays, each from a freshly sampled tree.
OverlapSample cascade_overlap_samples(const ModelSpec& spec, const RsbParams& params,
                                      std::span<const double> q_combined, int m,
                                      int n, int draws, std::uint64_t seed,
                                      long leaf_cap = kDefaultLeafCap);

/// Overlap arrays of the untruncated cascade, sampled exactly: n i.i.d.
/// leaf picks from a Poisson-Dirichlet level induce an Ewens-Pitman
/// partition (discount zeta_l, strength 0), nested across levels, so the
/// common-ancestor depths can be drawn without building any tree.
OverlapSample exact_overlap_samples(const ModelSpec& spec, const RsbParams& params,
                                    std::span<const double> q_combined, int n,
                                    int draws, std::uint64_t seed);

}  // namespace mspk
