#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mspk/model.hpp"
#include "mspk/parisi.hpp"

namespace mspk {

struct CheckResult {
  std::string name;
  double value = 0.0;   // measured statistic
  double target = 0.0;  // reference it is compared against
  double se = 0.0;      // Monte Carlo SE where applicable (0 for exact checks)
  double tol = 0.0;     // acceptance tolerance actually applied
  bool hard = true;     // hard checks gate the suite verdict
  bool passed = false;
  std::string note;
};

struct VerifyReport {
  std::string suite;
  std::vector<CheckResult> checks;
  bool passed() const;  // all hard checks passed
};

std::string report_json(const VerifyReport& report);
std::string report_text(const VerifyReport& report);

/// lambda-weighted combination of the per-species overlap sequences,
/// q_l = sum_s lambda_s q^s_l (the natural combined sequence for overlap
/// arrays); must come out strictly increasing to be usable.
std::vector<double> combined_q(const ModelSpec& spec, const RsbParams& params);

/// Both cascade identities against the recursion, plus a paired
/// truncation-bias shrink check at branching 2M vs the embedded top-M
/// subtree (same atoms, same fields).
struct CascadeVerifyConfig {
  int truncation = 50;
  int samples = 2000;
  int shrink_samples = 500;
  long leaf_cap = 400000;
  std::vector<double> t = {1.0, 2.0};
  std::uint64_t seed = 1;
};

VerifyReport verify_cascade(const ModelSpec& spec, const RsbParams& params,
                            const CascadeVerifyConfig& config);

/// Ghirlanda-Guerra battery on exactly sampled (untruncated) cascade
/// overlap arrays: f in {constant, indicator, degree-2 monomial} crossed
/// with p and the weight vectors.  Empty `w` means the default battery
/// (all-ones, each unit vector, all-0.5).
struct GgVerifyConfig {
  int draws = 20000;
  int n = 3;  // identity order; draws use n+1 replicas
  std::vector<int> p = {1, 2};
  std::vector<std::vector<double>> w;
  std::uint64_t seed = 1;
};

VerifyReport verify_gg(const ModelSpec& spec, const RsbParams& params,
                       const GgVerifyConfig& config);

/// Ultrametricity and synchronization on truncated-tree overlap samples:
/// zero violations, exact isotonic fit through the (q_l, q^s_l) knots, and
/// the synthetic Lipschitz bound.
struct SyncVerifyConfig {
  int truncation = 50;
  int draws = 2000;
  int n = 4;
  std::uint64_t seed = 1;
};

VerifyReport verify_sync(const ModelSpec& spec, const RsbParams& params,
                         const SyncVerifyConfig& config);

/// Guerra interpolation: phi estimates pairwise non-increasing (asserted
/// only on psd models) and the endpoint decompositions at x=0 and x=1.
struct InterpolationVerifyConfig {
  int n_spins = 10;
  int truncation = 50;
  int samples = 1000;
  std::vector<double> xs = {0.0, 0.25, 0.5, 0.75, 1.0};
  long leaf_cap = 100000;
  long work_cap = 2000000000;
  int fe_samples = 200;
  std::uint64_t seed = 1;
};

VerifyReport verify_interpolation(const ModelSpec& spec, const RsbParams& params,
                                  const InterpolationVerifyConfig& config);

/// Hamiltonian and cavity-field covariances against the closed forms, on
/// random configuration pairs built by flipping each site with a
/// per-pair probability uniform in [0, flip_max].
struct CovarianceVerifyConfig {
  int n_spins = 50;
  int draws = 10000;
  int pairs = 20;
  int cavity_spins = 200;
  int cavity_draws = 10000;
  int cavity_pairs = 10;
  double flip_max = 0.15;
  double rel_tol = 0.05;
  std::uint64_t seed = 1;
};

VerifyReport verify_covariance(const ModelSpec& spec,
                               const CovarianceVerifyConfig& config);

/// Random spin-configuration pairs for covariance checks: sigma1 uniform,
/// sigma2 = sigma1 with sites flipped independently with a probability
/// drawn once per pair from U[0, flip_max].
std::vector<std::pair<std::vector<int>, std::vector<int>>> flip_pairs(
    int n, int pairs, double flip_max, std::uint64_t seed);

}  // namespace mspk
