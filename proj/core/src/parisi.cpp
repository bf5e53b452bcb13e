#include "mspk/parisi.hpp"

#include <algorithm>
#include <cmath>

namespace mspk {
namespace {

constexpr double kIncrementTol = 1e-12;
constexpr double kZetaDegenerate = 1e-10;  // below this, use the E X limit

inline double log_cosh(double x) {
  const double ax = std::abs(x);
  return ax + std::log1p(std::exp(-2.0 * ax)) - std::log(2.0);
}

/// (1/zeta) log sum_k w_k exp(zeta v_k), shifted around max v.
double tilted_mean(double zeta, std::span<const double> weights,
                   std::span<const double> vals) {
  const double m = *std::max_element(vals.begin(), vals.end());
  if (zeta < kZetaDegenerate) {
    double acc = 0.0;
    for (std::size_t k = 0; k < vals.size(); ++k) acc += weights[k] * vals[k];
    return acc;
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < vals.size(); ++k)
    acc += weights[k] * std::exp(zeta * (vals[k] - m));
  return m + std::log(acc) / zeta;
}

/// Tabulated function on a uniform grid, cubic (4-point Lagrange)
/// interpolation, linear extrapolation outside.
struct GridFn {
  double x0, dx;
  std::vector<double> y;

  double operator()(double x) const {
    const int n = static_cast<int>(y.size());
    const double t = (x - x0) / dx;
    if (t <= 0.0) return y[0] + (y[1] - y[0]) * t;
    if (t >= n - 1) return y[n - 1] + (y[n - 1] - y[n - 2]) * (t - (n - 1));
    int j = static_cast<int>(t);
    j = std::clamp(j, 1, n - 3);
    const double u = t - j;
    const double um = u - 1.0, up = u + 1.0, u2 = u - 2.0;
    return (-u * um * u2 / 6.0) * y[j - 1] + (up * um * u2 / 2.0) * y[j] +
           (-up * u * u2 / 2.0) * y[j + 1] + (up * u * um / 6.0) * y[j + 2];
  }
};

double recursion_grid(const std::vector<double>& qs, std::span<const double> zeta,
                      const QuadratureConfig& quad, const HermiteRule& rule) {
  const int r = static_cast<int>(zeta.size());
  const double total = qs[r];
  const int g = quad.grid_points;
  const double half = quad.grid_halfwidth_sigmas * std::sqrt(total);
  GridFn cur{-half, 2.0 * half / (g - 1), std::vector<double>(g)};
  for (int i = 0; i < g; ++i) cur.y[i] = log_cosh(cur.x0 + i * cur.dx);
  std::vector<double> vals(rule.nodes.size());
  GridFn next = cur;
  for (int l = r - 1; l >= 0; --l) {
    const double inc = qs[l + 1] - qs[l];
    if (inc <= 0.0) continue;  // zero-variance level: identity step
    const double sd = std::sqrt(inc);
    for (int i = 0; i < g; ++i) {
      const double x = cur.x0 + i * cur.dx;
      for (std::size_t k = 0; k < rule.nodes.size(); ++k)
        vals[k] = cur(x + rule.nodes[k] * sd);
      next.y[i] = tilted_mean(zeta[l], rule.weights, vals);
    }
    std::swap(cur.y, next.y);
  }
  return cur(0.0);
}

double recursion_nested(const std::vector<double>& qs, std::span<const double> zeta,
                        const HermiteRule& rule, int level, double x) {
  const int r = static_cast<int>(zeta.size());
  if (level == r) return log_cosh(x);
  const double inc = qs[level + 1] - qs[level];
  if (inc <= 0.0) return recursion_nested(qs, zeta, rule, level + 1, x);
  const double sd = std::sqrt(inc);
  std::vector<double> vals(rule.nodes.size());
  for (std::size_t k = 0; k < rule.nodes.size(); ++k)
    vals[k] = recursion_nested(qs, zeta, rule, level + 1, x + rule.nodes[k] * sd);
  return tilted_mean(zeta[level], rule.weights, vals);
}

}  // namespace

void validate_rsb(const ModelSpec& spec, const RsbParams& params) {
  const int r = params.r;
  if (r < 1) throw validation_error("level count r must be >= 1");
  if (static_cast<int>(params.zeta.size()) != r)
    throw validation_error("zeta must have length r");
  double prev = 0.0;
  for (int l = 0; l < r; ++l) {
    if (!(params.zeta[l] > prev && params.zeta[l] < 1.0))
      throw validation_error("zeta must be strictly increasing inside (0,1)");
    prev = params.zeta[l];
  }
  if (params.q.size() != spec.n_species())
    throw validation_error("q sequences do not match the species count");
  for (std::size_t s = 0; s < params.q.size(); ++s) {
    const auto& q = params.q[s];
    if (static_cast<int>(q.size()) != r + 1)
      throw validation_error("q[" + spec.species[s] + "] must have length r+1");
    if (std::abs(q.front()) > kIncrementTol || std::abs(q.back() - 1.0) > kIncrementTol)
      throw validation_error("q[" + spec.species[s] + "] endpoints must be 0 and 1");
    for (int l = 0; l < r; ++l)
      if (q[l + 1] < q[l] - kIncrementTol)
        throw validation_error("q[" + spec.species[s] + "] must be non-decreasing");
  }
}

PathSequences path_sequences(const ModelSpec& spec, const RsbParams& params) {
  validate_rsb(spec, params);
  const int ns = static_cast<int>(spec.n_species());
  const int r = params.r;
  PathSequences p;
  p.combined.assign(r + 1, 0.0);
  p.per_species.assign(ns, std::vector<double>(r + 1, 0.0));
  for (int l = 0; l <= r; ++l) {
    for (int s = 0; s < ns; ++s) {
      double qsl = 0.0;
      for (int t = 0; t < ns; ++t) {
        p.combined[l] += spec.delta_sq[s][t] * spec.lambda[s] * spec.lambda[t] *
                         params.q[s][l] * params.q[t][l];
        qsl += spec.delta_sq[s][t] * spec.lambda[t] * params.q[t][l];
      }
      p.per_species[s][l] = 2.0 * qsl;
    }
  }
  return p;
}

void validate_quadrature(const QuadratureConfig& quad, int r) {
  if (quad.hermite_nodes < 8)
    throw validation_error("quadrature needs at least 8 Hermite nodes");
  if (quad.mode == QuadratureMode::nested_exact && r > 3)
    throw validation_error("nested-exact quadrature is limited to r <= 3");
  if (quad.mode == QuadratureMode::grid_interpolation && quad.grid_points < 16)
    throw validation_error("grid mode needs at least 16 grid points");
}

HermiteRule gauss_hermite(int n) {
  if (n < 1) throw validation_error("Hermite rule needs at least one node");
  // Golub-Welsch on the Jacobi matrix of the orthonormal polynomials for the
  // N(0,1) weight (zero diagonal, off-diagonal sqrt(j)): implicit-shift QL,
  // carrying only the first eigenvector component for the weights.
  std::vector<double> d(n, 0.0), e(n, 0.0), q(n, 0.0);
  for (int j = 0; j < n - 1; ++j) e[j] = std::sqrt(static_cast<double>(j + 1));
  q[0] = 1.0;
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= 1e-16 * dd) break;
      }
      if (m != l) {
        if (++iter > 60) throw resource_error("Hermite eigenvalue iteration failed");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          f = q[i + 1];
          q[i + 1] = s * q[i] + c * f;
          q[i] = c * q[i] - s * f;
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return d[a] < d[b]; });
  HermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = d[order[i]];
    rule.weights[i] = q[order[i]] * q[order[i]];
  }
  return rule;
}

std::vector<double> parisi_recursion(const ModelSpec& spec, const RsbParams& params,
                                     const QuadratureConfig& quad) {
  validate_rsb(spec, params);
  validate_quadrature(quad, params.r);
  const PathSequences paths = path_sequences(spec, params);
  const HermiteRule rule = gauss_hermite(quad.hermite_nodes);
  const int ns = static_cast<int>(spec.n_species());
  std::vector<double> x0(ns, 0.0);
  for (int s = 0; s < ns; ++s) {
    std::vector<double> qs = paths.per_species[s];
    for (int l = 0; l < params.r; ++l)
      if (qs[l + 1] < qs[l] - kIncrementTol)
        throw validation_error("negative path increment for species " +
                               spec.species[s]);
    for (int l = 0; l < params.r; ++l) qs[l + 1] = std::max(qs[l + 1], qs[l]);
    if (qs[params.r] <= 0.0) continue;  // zero field, log cosh 0 = 0
    x0[s] = quad.mode == QuadratureMode::grid_interpolation
                ? recursion_grid(qs, params.zeta, quad, rule)
                : recursion_nested(qs, params.zeta, rule, 0, 0.0);
  }
  return x0;
}

ParisiValue parisi_functional(const ModelSpec& spec, const RsbParams& params,
                              const QuadratureConfig& quad) {
  ParisiValue out;
  out.x0 = parisi_recursion(spec, params, quad);
  out.paths = path_sequences(spec, params);
  double p = std::log(2.0);
  for (std::size_t s = 0; s < spec.n_species(); ++s) p += spec.lambda[s] * out.x0[s];
  for (int l = 0; l < params.r; ++l)
    p -= 0.5 * params.zeta[l] * (out.paths.combined[l + 1] - out.paths.combined[l]);
  out.value = p;
  return out;
}

}  // namespace mspk
