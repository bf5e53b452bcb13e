#include "mspk/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mspk {
namespace {

/// softmax with the usual max shift; output sums to 1 exactly up to rounding.
std::vector<double> softmax(std::span<const double> u) {
  const double m = *std::max_element(u.begin(), u.end());
  std::vector<double> s(u.size());
  double tot = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) tot += s[i] = std::exp(u[i] - m);
  for (auto& v : s) v /= tot;
  return s;
}

int raw_dim(const ModelSpec& spec, int r) {
  return (r + 1) + static_cast<int>(spec.n_species()) * r;
}

struct Restart {
  std::vector<double> best_raw;
  double best = 0.0;
  long evals = 0;
  bool converged = false;
  std::vector<TracePoint> trace;
};

Restart nelder_mead(const ModelSpec& spec, int r, const OptimizerConfig& config,
                    const QuadratureConfig& quad, int restart_idx,
                    std::vector<double> x0, long budget) {
  const int d = raw_dim(spec, r);
  Restart out;
  out.best = std::numeric_limits<double>::infinity();
  auto objective = [&](std::span<const double> raw) {
    const RsbParams p = decode_params(spec, r, raw, config);
    const double f = parisi_functional(spec, p, quad).value;
    ++out.evals;
    if (f < out.best) {
      out.best = f;
      out.best_raw.assign(raw.begin(), raw.end());
    }
    return f;
  };

  std::vector<std::vector<double>> x(d + 1, x0);
  std::vector<double> f(d + 1);
  for (int i = 0; i < d; ++i) x[i + 1][i] += 0.5;
  for (int i = 0; i <= d; ++i) f[i] = objective(x[i]);

  std::vector<int> ord(d + 1);
  std::vector<double> centroid(d), xr(d), xe(d), xc(d);
  int iteration = 0;
  while (out.evals + 2 <= budget) {
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return f[a] < f[b]; });
    const int lo = ord[0], hi = ord[d], nh = ord[d - 1];
    out.trace.push_back({restart_idx, iteration++, f[lo]});
    if (f[hi] - f[lo] <= config.tol * (1.0 + std::abs(f[lo]))) {
      out.converged = true;
      break;
    }
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (int i = 0; i <= d; ++i)
      if (i != hi)
        for (int k = 0; k < d; ++k) centroid[k] += x[i][k] / d;
    for (int k = 0; k < d; ++k) xr[k] = centroid[k] + (centroid[k] - x[hi][k]);
    const double fr = objective(xr);
    if (fr < f[lo]) {
      for (int k = 0; k < d; ++k) xe[k] = centroid[k] + 2.0 * (centroid[k] - x[hi][k]);
      const double fe = objective(xe);
      if (fe < fr) {
        x[hi] = xe;
        f[hi] = fe;
      } else {
        x[hi] = xr;
        f[hi] = fr;
      }
    } else if (fr < f[nh]) {
      x[hi] = xr;
      f[hi] = fr;
    } else {
      const bool outside = fr < f[hi];
      const std::vector<double>& ref = outside ? xr : x[hi];
      for (int k = 0; k < d; ++k) xc[k] = centroid[k] + 0.5 * (ref[k] - centroid[k]);
      const double fc = objective(xc);
      if (fc < (outside ? fr : f[hi])) {
        x[hi] = xc;
        f[hi] = fc;
      } else {
        for (int i = 0; i <= d; ++i) {  // shrink toward the best vertex
          if (i == lo) continue;
          for (int k = 0; k < d; ++k) x[i][k] = x[lo][k] + 0.5 * (x[i][k] - x[lo][k]);
          if (out.evals >= budget) break;
          f[i] = objective(x[i]);
        }
      }
    }
  }
  return out;
}

/// Insert a duplicate q-level into the r-level optimum: new zeta at the
/// midpoint of the widest gap, zero q-increment at the new level, so the
/// objective value carries over exactly.
RsbParams duplicate_level(const RsbParams& p) {
  const int r = p.r;
  int j = 0;
  double widest = -1.0;
  for (int g = 0; g <= r; ++g) {
    const double a = g == 0 ? 0.0 : p.zeta[g - 1];
    const double b = g == r ? 1.0 : p.zeta[g];
    if (b - a > widest) {
      widest = b - a;
      j = g;
    }
  }
  RsbParams out;
  out.r = r + 1;
  out.zeta = p.zeta;
  const double a = j == 0 ? 0.0 : p.zeta[j - 1];
  const double b = j == r ? 1.0 : p.zeta[j];
  out.zeta.insert(out.zeta.begin() + j, 0.5 * (a + b));
  out.q = p.q;
  for (auto& q : out.q) q.insert(q.begin() + j, q[j]);
  return out;
}

}  // namespace

RsbParams decode_params(const ModelSpec& spec, int r, std::span<const double> raw,
                        const OptimizerConfig& config) {
  const int ns = static_cast<int>(spec.n_species());
  if (static_cast<int>(raw.size()) != raw_dim(spec, r))
    throw validation_error("raw coordinate vector has the wrong dimension");
  RsbParams p;
  p.r = r;
  auto sz = softmax(raw.subspan(0, r + 1));
  // Floor the increments so extreme coordinates cannot underflow two zeta
  // values onto the same double (strict increase is required downstream).
  const double floor_inc = 1e-10;
  double mass = 0.0;
  for (auto& v : sz) mass += v += floor_inc;
  for (auto& v : sz) v /= mass;
  p.zeta.resize(r);
  double c = 0.0;
  for (int l = 0; l < r; ++l) {
    c += sz[l];
    p.zeta[l] = config.zeta_lo + (config.zeta_hi - config.zeta_lo) * c;
  }
  p.q.assign(ns, std::vector<double>(r + 1, 0.0));
  for (int s = 0; s < ns; ++s) {
    const auto inc = softmax(raw.subspan(r + 1 + s * r, r));
    double acc = 0.0;
    for (int l = 0; l < r; ++l) {
      acc += inc[l];
      p.q[s][l + 1] = acc;
    }
    p.q[s][r] = 1.0;
  }
  return p;
}

std::vector<double> encode_params(const ModelSpec& spec, const RsbParams& params,
                                  const OptimizerConfig& config) {
  validate_rsb(spec, params);
  const int r = params.r;
  const int ns = static_cast<int>(spec.n_species());
  std::vector<double> raw;
  raw.reserve(raw_dim(spec, r));
  const double span = config.zeta_hi - config.zeta_lo;
  double prev = 0.0;
  for (int l = 0; l <= r; ++l) {
    const double c = l == r ? 1.0
                            : std::clamp((params.zeta[l] - config.zeta_lo) / span,
                                         1e-12, 1.0 - 1e-12);
    raw.push_back(std::log(std::max(c - prev, 1e-9)));
    prev = c;
  }
  for (int s = 0; s < ns; ++s)
    for (int l = 0; l < r; ++l)
      raw.push_back(std::log(std::max(params.q[s][l + 1] - params.q[s][l], 1e-9)));
  return raw;
}

std::vector<double> fd_gradient(const ModelSpec& spec, int r,
                                std::span<const double> raw,
                                const OptimizerConfig& config,
                                const QuadratureConfig& quad, double eps) {
  std::vector<double> x(raw.begin(), raw.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + eps;
    const double fp = parisi_functional(spec, decode_params(spec, r, x, config), quad).value;
    x[i] = xi - eps;
    const double fm = parisi_functional(spec, decode_params(spec, r, x, config), quad).value;
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * eps);
  }
  return g;
}

OptimizationResult minimize_at_level(const ModelSpec& spec, int r,
                                     const OptimizerConfig& config,
                                     const QuadratureConfig& quad,
                                     const RsbParams* warm) {
  if (r < 1) throw validation_error("level count r must be >= 1");
  if (config.restarts < 1) throw validation_error("restarts must be >= 1");
  if (config.tol <= 0.0) throw validation_error("tolerance must be positive");
  const int d = raw_dim(spec, r);
  const long budget = std::max<long>(config.max_evals / config.restarts, 2L * (d + 1));
  std::vector<Restart> runs(config.restarts);
  std::exception_ptr failure;  // exceptions must not escape the parallel region
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < config.restarts; ++k) {
    try {
      std::vector<double> x0(d);
      if (k == 0 && warm != nullptr) {
        x0 = encode_params(spec, *warm, config);
      } else {
        RngStream rng(config.seed, static_cast<std::uint64_t>(k));
        for (auto& v : x0) v = rng.gaussian();
      }
      runs[k] = nelder_mead(spec, r, config, quad, k, std::move(x0), budget);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  int win = 0;
  OptimizationResult out;
  for (int k = 0; k < config.restarts; ++k) {
    if (runs[k].best < runs[win].best) win = k;
    out.evals += runs[k].evals;
    out.trace.insert(out.trace.end(), runs[k].trace.begin(), runs[k].trace.end());
  }
  out.value = runs[win].best;
  out.converged = runs[win].converged;
  out.params = decode_params(spec, r, runs[win].best_raw, config);
  return out;
}

std::vector<OptimizationResult> infimum_over_levels(const ModelSpec& spec,
                                                    const OptimizerConfig& config,
                                                    const QuadratureConfig& quad) {
  if (config.r_max < 1) throw validation_error("r_max must be >= 1");
  std::vector<OptimizationResult> out;
  for (int r = 1; r <= config.r_max; ++r) {
    const RsbParams* warm = out.empty() ? nullptr : &out.back().params;
    RsbParams dup;
    if (warm != nullptr) {
      dup = duplicate_level(*warm);
      warm = &dup;
    }
    out.push_back(minimize_at_level(spec, r, config, quad, warm));
    if (out.size() > 1 && out[out.size() - 2].value < out.back().value) {
      // keep the monotone envelope: the duplicated previous optimum is feasible
      OptimizationResult keep = out[out.size() - 2];
      if (keep.value < out.back().value) {
        out.back().value = keep.value;
        out.back().params = dup;
      }
    }
  }
  return out;
}

}  // namespace mspk
