#pragma once

#include <cstdint>
#include <vector>

#include "mspk/parisi.hpp"

namespace mspk {

struct OptimizerConfig {
  int restarts = 4;
  long max_evals = 6000;    // total objective-evaluation budget across restarts
  double tol = 1e-9;        // simplex value-spread convergence tolerance
  int r_max = 3;
  std::uint64_t seed = 0;
  double zeta_lo = 1e-6;    // reachable zeta range (open interval (0,1) clipped)
  double zeta_hi = 1.0 - 1e-6;
};

struct TracePoint {
  int restart = 0;
  int iteration = 0;
  double value = 0.0;  // best value of the simplex after the iteration
};

struct OptimizationResult {
  RsbParams params;
  double value = 0.0;
  long evals = 0;
  bool converged = false;
  std::vector<TracePoint> trace;
};

/// Unconstrained coordinates -> feasible RsbParams.  zeta is the cumulative
/// softmax of r+1 raw values mapped into (zeta_lo, zeta_hi); each q^s is the
/// cumulative softmax of r raw increments, endpoints pinned to 0 and 1.
RsbParams decode_params(const ModelSpec& spec, int r, std::span<const double> raw,
                        const OptimizerConfig& config);

/// Right inverse of decode_params (up to the softmax shift degeneracy).
std::vector<double> encode_params(const ModelSpec& spec, const RsbParams& params,
                                  const OptimizerConfig& config);

/// Central finite-difference gradient of P in the unconstrained coordinates.
/// Diagnostic only; the minimizer itself is derivative-free.
std::vector<double> fd_gradient(const ModelSpec& spec, int r,
                                std::span<const double> raw,
                                const OptimizerConfig& config,
                                const QuadratureConfig& quad, double eps = 1e-5);

/// Multi-start Nelder-Mead over the unconstrained coordinates.  Every
/// evaluated point is feasible, so the returned value is a running upper
/// bound on the infimum.  Restart 0 starts from `warm` when given.
OptimizationResult minimize_at_level(const ModelSpec& spec, int r,
                                     const OptimizerConfig& config,
                                     const QuadratureConfig& quad = {},
                                     const RsbParams* warm = nullptr);

/// minimize_at_level for r = 1..r_max, warm-starting each level from the
/// previous optimum with a duplicated q-level (objective-preserving), so the
/// per-level best values are non-increasing.
std::vector<OptimizationResult> infimum_over_levels(const ModelSpec& spec,
                                                    const OptimizerConfig& config,
                                                    const QuadratureConfig& quad = {});

}  // namespace mspk
