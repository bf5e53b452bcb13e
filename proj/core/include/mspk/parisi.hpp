#pragma once

#include <string>
#include <vector>

#include "mspk/model.hpp"

namespace mspk {

/// Replica symmetry breaking parameters: level count r, tree weights
/// zeta_0 < ... < zeta_{r-1} in (0,1), and per-species overlap sequences
/// q^s_0 = 0 <= ... <= q^s_r = 1 (length r+1, species in model order).
struct RsbParams {
  int r = 1;
  std::vector<double> zeta;
  std::vector<std::vector<double>> q;
};

/// Throws validation_error if the sequences violate their invariants or
/// the species count does not match the model.
void validate_rsb(const ModelSpec& spec, const RsbParams& params);

/// Non-decreasing combinations
///   Q_l   = sum_{s,t} Delta^2_{st} lambda_s lambda_t q^s_l q^t_l
///   Q^s_l = 2 sum_t Delta^2_{st} lambda_t q^t_l.
struct PathSequences {
  std::vector<double> combined;                  // Q_l, l = 0..r
  std::vector<std::vector<double>> per_species;  // Q^s_l
};

PathSequences path_sequences(const ModelSpec& spec, const RsbParams& params);

enum class QuadratureMode { grid_interpolation, nested_exact };

struct QuadratureConfig {
  QuadratureMode mode = QuadratureMode::grid_interpolation;
  int hermite_nodes = 40;
  int grid_points = 1025;
  double grid_halfwidth_sigmas = 8.0;
};

void validate_quadrature(const QuadratureConfig& quad, int r);

/// Gauss-Hermite rule for E f(eta), eta ~ N(0,1): nodes and weights
/// (weights sum to 1).
struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
HermiteRule gauss_hermite(int n);

/// Per-species values X^s_0 of the Gaussian recursion
///   X^s_r(x)  = log cosh(x)
///   X^s_l(x)  = (1/zeta_l) log E exp(zeta_l X^s_{l+1}(x + eta sqrt(dQ^s_l)))
/// evaluated at x = 0 (one-dimensional accumulated-field state).
std::vector<double> parisi_recursion(const ModelSpec& spec, const RsbParams& params,
                                     const QuadratureConfig& quad);

struct ParisiValue {
  double value = 0.0;             // P(zeta, q)
  std::vector<double> x0;         // X^s_0 per species
  PathSequences paths;
};

/// P = log 2 + sum_s lambda_s X^s_0 - (1/2) sum_l zeta_l (Q_{l+1} - Q_l).
ParisiValue parisi_functional(const ModelSpec& spec, const RsbParams& params,
                              const QuadratureConfig& quad);

}  // namespace mspk
