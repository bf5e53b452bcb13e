#include "mspk/replica_analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace mspk {
namespace {

double ipow(double x, int p) {
  double r = 1.0;
  for (int k = 0; k < p; ++k) r *= x;
  return r;
}

/// Incremental evaluator of one h_{N,w,p} term along a Gray-code sweep.
struct TermState {
  int p = 0;
  const double* g = nullptr;  // flat tensor, N^p
  std::vector<double> s1;     // p=2: S1[i] = sum_j g_ij c_j; p=3: S2[i,j]
  double h = 0.0;

  void init(int n, std::span<const double> c) {
    if (p == 1) {
      h = 0.0;
      for (int i = 0; i < n; ++i) h += g[i] * c[i];
    } else if (p == 2) {
      s1.assign(n, 0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s1[i] += g[i * n + j] * c[j];
      h = 0.0;
      for (int i = 0; i < n; ++i) h += c[i] * s1[i];
    } else {
      s1.assign(static_cast<std::size_t>(n) * n, 0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double acc = 0.0;
          const double* row = g + (static_cast<std::size_t>(i) * n + j) * n;
          for (int k = 0; k < n; ++k) acc += row[k] * c[k];
          s1[i * n + j] = acc;
        }
      h = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) h += c[i] * c[j] * s1[i * n + j];
    }
  }

  void flip(int n, int k, double dc, std::span<const double> c) {
    if (p == 1) {
      h += g[k] * dc;
    } else if (p == 2) {
      for (int i = 0; i < n; ++i) s1[i] += g[i * n + k] * dc;
      h = 0.0;
      for (int i = 0; i < n; ++i) h += c[i] * s1[i];
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          s1[i * n + j] += g[(static_cast<std::size_t>(i) * n + j) * n + k] * dc;
      h = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) h += c[i] * c[j] * s1[i * n + j];
    }
  }
};

}  // namespace

PerturbationSpec default_perturbation(const ModelSpec& spec, std::uint64_t seed) {
  const int ns = static_cast<int>(spec.n_species());
  PerturbationSpec p;
  for (int mask = 1; mask < (1 << ns); ++mask) {
    std::vector<double> w(ns, 0.0);
    for (int s = 0; s < ns; ++s) w[s] = (mask >> s) & 1 ? 1.0 : 0.0;
    p.w.push_back(std::move(w));
  }
  p.w.emplace_back(ns, 0.5);
  RngStream rng(seed, 0x706572ULL);
  p.x.assign(p.w.size(), std::vector<double>(p.p_max, 0.0));
  for (auto& row : p.x)
    for (auto& v : row) v = 1.0 + rng.uniform();
  return p;
}

void validate_perturbation(const ModelSpec& spec, const PerturbationSpec& pspec) {
  if (!(pspec.gamma > 0.25 && pspec.gamma < 0.5))
    throw validation_error("gamma must lie in (1/4, 1/2)");
  if (pspec.p_max < 1) throw validation_error("p_max must be >= 1");
  if (pspec.w.empty()) throw validation_error("perturbation needs at least one weight vector");
  if (pspec.x.size() != pspec.w.size())
    throw validation_error("coefficient table must match the weight list");
  double var_bound = 0.0;
  for (std::size_t wi = 0; wi < pspec.w.size(); ++wi) {
    if (pspec.w[wi].size() != spec.n_species())
      throw validation_error("weight vector dimension must match the species count");
    for (double v : pspec.w[wi])
      if (v < 0.0 || v > 1.0) throw validation_error("weight entries must lie in [0,1]");
    if (static_cast<int>(pspec.x[wi].size()) != pspec.p_max)
      throw validation_error("coefficient rows must have p_max entries");
    for (int p = 1; p <= pspec.p_max; ++p) {
      const double x = pspec.x[wi][p - 1];
      if (x != 0.0 && (x < 1.0 || x > 2.0))
        throw validation_error("coefficients must lie in [1,2]");
      var_bound += ipow(0.25, static_cast<int>(wi) + 1 + p) * x * x;
    }
  }
  if (var_bound > 4.0)
    throw validation_error("perturbation variance bound exceeds 4");
}

PerturbationRealization sample_perturbation(const ModelSpec& spec,
                                            const PerturbationSpec& pspec,
                                            const SpinAssignment& assign,
                                            std::uint64_t seed, long tensor_cap) {
  validate_perturbation(spec, pspec);
  const int n = assign.n_total;
  long total = 0;
  for (std::size_t wi = 0; wi < pspec.w.size(); ++wi)
    for (int p = 1; p <= pspec.p_max; ++p) {
      long sz = 1;
      for (int k = 0; k < p; ++k) sz *= n;
      total += sz;
      if (total > tensor_cap) throw resource_error("coupling tensors exceed the cap");
    }
  PerturbationRealization out;
  out.n = n;
  out.s_n = std::pow(static_cast<double>(n), pspec.gamma);
  RngStream root(seed, 0x676e73ULL);
  out.g.resize(pspec.w.size());
  out.coeff.resize(pspec.w.size());
  out.site_w.resize(pspec.w.size() * n);
  for (std::size_t wi = 0; wi < pspec.w.size(); ++wi) {
    for (int i = 0; i < n; ++i)
      out.site_w[wi * n + i] = pspec.w[wi][assign.species_of[i]];
    out.g[wi].resize(pspec.p_max);
    out.coeff[wi].assign(pspec.p_max, 0.0);
    for (int p = 1; p <= pspec.p_max; ++p) {
      long sz = 1;
      for (int k = 0; k < p; ++k) sz *= n;
      out.g[wi][p - 1].resize(sz);
      root.substream(wi * 64 + p).fill_gaussian(out.g[wi][p - 1]);
      out.coeff[wi][p - 1] =
          std::pow(2.0, -static_cast<double>(wi + 1 + p)) * pspec.x[wi][p - 1];
    }
  }
  return out;
}

double perturbation_energy(const PerturbationRealization& pert,
                           std::span<const int> sigma) {
  const int n = pert.n;
  if (static_cast<int>(sigma.size()) != n)
    throw validation_error("configuration length must match the realization");
  const double inv_sqn = 1.0 / std::sqrt(static_cast<double>(n));
  double total = 0.0;
  std::vector<double> c(n);
  for (std::size_t wi = 0; wi < pert.g.size(); ++wi) {
    for (int i = 0; i < n; ++i)
      c[i] = sigma[i] * std::sqrt(pert.site_w[wi * n + i]) * inv_sqn;
    for (std::size_t pm = 0; pm < pert.g[wi].size(); ++pm) {
      if (pert.coeff[wi][pm] == 0.0) continue;
      TermState term{static_cast<int>(pm) + 1, pert.g[wi][pm].data(), {}, 0.0};
      term.init(n, c);
      total += pert.coeff[wi][pm] * term.h;
    }
  }
  return total;
}

double perturbation_hamiltonian(const ModelSpec& spec, const PerturbationSpec& pspec,
                                const SpinAssignment& assign,
                                std::span<const int> sigma, std::uint64_t seed) {
  return perturbation_energy(sample_perturbation(spec, pspec, assign, seed), sigma);
}

std::vector<double> enumerate_perturbation(const PerturbationRealization& pert) {
  const int n = pert.n;
  if (n > 30) throw resource_error("spin count exceeds the enumeration range");
  const long states = 1L << n;
  const double inv_sqn = 1.0 / std::sqrt(static_cast<double>(n));
  const std::size_t nw = pert.g.size();
  // per weight vector: current c values and one TermState per order p
  std::vector<std::vector<double>> c(nw, std::vector<double>(n));
  std::vector<std::vector<TermState>> terms(nw);
  std::vector<int> sigma(n, -1);
  for (std::size_t wi = 0; wi < nw; ++wi) {
    for (int i = 0; i < n; ++i)
      c[wi][i] = -std::sqrt(pert.site_w[wi * n + i]) * inv_sqn;
    terms[wi].resize(pert.g[wi].size());
    for (std::size_t pm = 0; pm < pert.g[wi].size(); ++pm) {
      terms[wi][pm] = TermState{static_cast<int>(pm) + 1, pert.g[wi][pm].data(), {}, 0.0};
      if (pert.coeff[wi][pm] != 0.0) terms[wi][pm].init(n, c[wi]);
    }
  }
  std::vector<double> out(states, 0.0);
  long state = 0;  // bit i set <=> sigma_i = +1
  for (long code = 0;; ++code) {
    double h = 0.0;
    for (std::size_t wi = 0; wi < nw; ++wi)
      for (std::size_t pm = 0; pm < pert.g[wi].size(); ++pm)
        if (pert.coeff[wi][pm] != 0.0) h += pert.coeff[wi][pm] * terms[wi][pm].h;
    out[state] = h;
    if (code + 1 >= states) break;
    const int k = std::countr_zero(static_cast<unsigned long>(code + 1));
    sigma[k] = -sigma[k];
    state ^= 1L << k;
    for (std::size_t wi = 0; wi < nw; ++wi) {
      const double nc = sigma[k] * std::sqrt(pert.site_w[wi * n + k]) * inv_sqn;
      const double dc = nc - c[wi][k];
      c[wi][k] = nc;
      for (std::size_t pm = 0; pm < pert.g[wi].size(); ++pm)
        if (pert.coeff[wi][pm] != 0.0) terms[wi][pm].flip(n, k, dc, c[wi]);
    }
  }
  return out;
}

std::vector<double> enumerate_hamiltonian(const DisorderMatrix& disorder,
                                          int enumeration_cap) {
  const int n = disorder.n;
  if (n > enumeration_cap) throw resource_error("spin count exceeds the enumeration cap");
  const long states = 1L << n;
  std::vector<double> arow(static_cast<std::size_t>(n) * n), b(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) arow[i * n + j] = disorder(i, j) + disorder(j, i);
  std::vector<int> sigma(n, -1);
  double energy = 0.0;
  for (int i = 0; i < n; ++i) {
    double bi = 0.0;
    for (int j = 0; j < n; ++j) bi += arow[i * n + j] * sigma[j];
    b[i] = bi;
    for (int j = 0; j < n; ++j) energy += disorder(i, j) * sigma[i] * sigma[j];
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> out(states, 0.0);
  long state = 0;
  for (long code = 0;; ++code) {
    out[state] = energy * scale;
    if (code + 1 >= states) break;
    const int k = std::countr_zero(static_cast<unsigned long>(code + 1));
    const int old = sigma[k];
    sigma[k] = -old;
    state ^= 1L << k;
    energy -= 2.0 * old * (b[k] - arow[k * n + k] * old);
    for (int j = 0; j < n; ++j) b[j] += 2.0 * sigma[k] * arow[k * n + j];
  }
  return out;
}

std::vector<double> gibbs_distribution(const DisorderMatrix& disorder,
                                       const PerturbationRealization* pert,
                                       int enumeration_cap) {
  std::vector<double> e = enumerate_hamiltonian(disorder, enumeration_cap);
  if (pert != nullptr) {
    if (pert->n != disorder.n)
      throw validation_error("perturbation and disorder dimensions differ");
    const std::vector<double> h = enumerate_perturbation(*pert);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] += pert->s_n * h[i];
  }
  const double m = *std::max_element(e.begin(), e.end());
  double z = 0.0;
  for (double& v : e) z += v = std::exp(v - m);
  for (double& v : e) v /= z;
  return e;
}

OverlapSample gibbs_replica_samples(const ModelSpec& spec, int n_spins,
                                    const PerturbationSpec* pspec, int n_replicas,
                                    int draws, std::uint64_t seed,
                                    int enumeration_cap) {
  if (n_replicas < 1) throw validation_error("replica count must be >= 1");
  const SpinAssignment assign = assign_species(spec, n_spins);
  OverlapSample out;
  out.species = spec.species;
  out.n_replicas = n_replicas;
  out.draws.resize(draws);
#pragma omp parallel for schedule(dynamic)
  for (int d = 0; d < draws; ++d) {
    RngStream rng(seed, static_cast<std::uint64_t>(d));
    const DisorderMatrix dis =
        sample_disorder(spec, assign, rng.substream(0).next_u64());
    std::vector<double> probs;
    if (pspec != nullptr) {
      const PerturbationRealization pert =
          sample_perturbation(spec, *pspec, assign, rng.substream(1).next_u64());
      probs = gibbs_distribution(dis, &pert, enumeration_cap);
    } else {
      probs = gibbs_distribution(dis, nullptr, enumeration_cap);
    }
    std::partial_sum(probs.begin(), probs.end(), probs.begin());
    RngStream pick = rng.substream(2);
    std::vector<std::vector<int>> sigmas(n_replicas, std::vector<int>(n_spins));
    for (int l = 0; l < n_replicas; ++l) {
      const double u = pick.uniform() * probs.back();
      const long state =
          std::lower_bound(probs.begin(), probs.end(), u) - probs.begin();
      for (int i = 0; i < n_spins; ++i)
        sigmas[l][i] = (state >> i) & 1 ? 1 : -1;
    }
    OverlapDraw& draw = out.draws[d];
    const int ns = static_cast<int>(spec.n_species());
    draw.combined.assign(n_replicas, std::vector<double>(n_replicas, 1.0));
    draw.per_species.assign(
        ns, std::vector<std::vector<double>>(n_replicas,
                                             std::vector<double>(n_replicas, 1.0)));
    for (int l = 0; l < n_replicas; ++l)
      for (int lp = l + 1; lp < n_replicas; ++lp) {
        const Overlaps o = species_overlaps(assign, sigmas[l], sigmas[lp]);
        draw.combined[l][lp] = draw.combined[lp][l] = o.combined;
        for (int s = 0; s < ns; ++s)
          draw.per_species[s][l][lp] = draw.per_species[s][lp][l] = o.per_species[s];
      }
  }
  return out;
}

double weighted_overlap(const OverlapDraw& draw, std::span<const double> lambda,
                        std::span<const double> w, int l, int lp) {
  if (draw.per_species.size() != lambda.size() || w.size() != lambda.size())
    throw validation_error("weight vector dimension must match the species count");
  double acc = 0.0;
  for (std::size_t s = 0; s < lambda.size(); ++s) {
    if (w[s] < 0.0 || w[s] > 1.0)
      throw validation_error("weight entries must lie in [0,1]");
    acc += lambda[s] * w[s] * draw.per_species[s][l][lp];
  }
  return acc;
}

double eval_test_function(const TestFunction& f, const OverlapDraw& draw) {
  const double v = f.species < 0 ? draw.combined[f.i][f.j]
                                 : draw.per_species[f.species][f.i][f.j];
  switch (f.kind) {
    case TestFunction::Kind::constant:
      return f.c;
    case TestFunction::Kind::indicator:
      return v >= f.threshold ? f.c : 0.0;
    case TestFunction::Kind::monomial:
      return f.c * ipow(v, f.degree);
  }
  return 0.0;
}

GgDeltaResult gg_delta(const OverlapSample& sample, std::span<const double> lambda,
                       const TestFunction& f, int n, std::span<const double> w,
                       int p) {
  if (n < 2) throw validation_error("gg_delta needs n >= 2");
  if (sample.n_replicas < n + 1)
    throw validation_error("sample draws must contain at least n+1 replicas");
  const long d = static_cast<long>(sample.draws.size());
  if (d < 2) throw validation_error("need at least two draws");

  // per-draw permutation-symmetrized contributions
  std::vector<double> av(d), bv(d), cv(d), ev(d), wt(d);
  std::vector<int> perm(n + 1);
  TestFunction fp = f;
  for (long di = 0; di < d; ++di) {
    const OverlapDraw& draw = sample.draws[di];
    std::iota(perm.begin(), perm.end(), 0);
    double a = 0.0, b = 0.0, c = 0.0, e = 0.0;
    long count = 0;
    auto rw = [&](int l, int lp) {
      return ipow(weighted_overlap(draw, lambda, w, l, lp), p);
    };
    do {
      fp.i = perm[f.i];
      fp.j = perm[f.j];
      const double fv = eval_test_function(fp, draw);
      a += fv * rw(perm[0], perm[n]);
      b += fv;
      c += rw(perm[0], perm[1]);
      for (int l = 2; l <= n; ++l) e += fv * rw(perm[0], perm[l - 1]);
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    av[di] = a / count;
    bv[di] = b / count;
    cv[di] = c / count;
    ev[di] = e / count;
    wt[di] = draw.weight;
  }
  double sw = 0.0, sa = 0.0, sb = 0.0, sc = 0.0, se_sum = 0.0;
  for (long di = 0; di < d; ++di) {
    sw += wt[di];
    sa += wt[di] * av[di];
    sb += wt[di] * bv[di];
    sc += wt[di] * cv[di];
    se_sum += wt[di] * ev[di];
  }
  auto delta_of = [n](double t1, double t2f, double t2r, double t3) {
    return std::abs(t1 - t2f * t2r / n - t3 / n);
  };
  GgDeltaResult out;
  out.t1 = sa / sw;
  out.t2 = (sb / sw) * (sc / sw);
  out.t3 = se_sum / sw;
  out.delta = delta_of(sa / sw, sb / sw, sc / sw, se_sum / sw);
  // jackknife over draws
  double jmean = 0.0;
  std::vector<double> jd(d);
  for (long di = 0; di < d; ++di) {
    const double w0 = sw - wt[di];
    jd[di] = delta_of((sa - wt[di] * av[di]) / w0, (sb - wt[di] * bv[di]) / w0,
                      (sc - wt[di] * cv[di]) / w0, (se_sum - wt[di] * ev[di]) / w0);
    jmean += jd[di];
  }
  jmean /= d;
  double var = 0.0;
  for (long di = 0; di < d; ++di) var += (jd[di] - jmean) * (jd[di] - jmean);
  out.se = std::sqrt(var * (d - 1.0) / d);
  return out;
}

UltrametricityResult ultrametricity_violation(const OverlapSample& sample,
                                              double tol) {
  if (sample.n_replicas < 3)
    throw validation_error("ultrametricity needs at least 3 replicas");
  UltrametricityResult out;
  const int n = sample.n_replicas;
  long violating = 0;
  for (const OverlapDraw& draw : sample.draws) {
    auto scan = [&](const std::vector<std::vector<double>>& r) {
      for (int l = 0; l < n; ++l)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) {
            if (l == a || l == b || a == b) continue;
            const double v = std::max(0.0, std::min(r[l][a], r[l][b]) - r[a][b]);
            out.max_violation = std::max(out.max_violation, v);
            ++out.triples;
            if (v > tol) ++violating;
          }
    };
    scan(draw.combined);
    for (const auto& r : draw.per_species) scan(r);
  }
  out.violating_fraction =
      out.triples > 0 ? static_cast<double>(violating) / out.triples : 0.0;
  return out;
}

std::vector<SyncFit> fit_synchronization(const OverlapSample& sample) {
  if (sample.draws.empty()) throw validation_error("sample is empty");
  if (sample.n_replicas < 2) throw validation_error("need at least 2 replicas");
  const int n = sample.n_replicas;
  const std::size_t ns = sample.draws.front().per_species.size();
  // pooled (R, R^s, weight) points
  std::vector<double> xs;
  std::vector<std::vector<double>> ys(ns);
  std::vector<double> wts;
  for (const OverlapDraw& draw : sample.draws)
    for (int l = 0; l < n; ++l)
      for (int lp = l + 1; lp < n; ++lp) {
        xs.push_back(draw.combined[l][lp]);
        wts.push_back(draw.weight);
        for (std::size_t s = 0; s < ns; ++s)
          ys[s].push_back(draw.per_species[s][l][lp]);
      }
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });

  std::vector<SyncFit> out(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    SyncFit& fit = out[s];
    fit.n_points = static_cast<long>(xs.size());
    // group by distinct x (the fit must be a function of x)
    std::vector<double> gx, gy, gw;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const std::size_t i = order[k];
      if (!gx.empty() && xs[i] == gx.back()) {
        gy.back() += wts[i] * ys[s][i];
        gw.back() += wts[i];
      } else {
        gx.push_back(xs[i]);
        gy.push_back(wts[i] * ys[s][i]);
        gw.push_back(wts[i]);
      }
    }
    for (std::size_t k = 0; k < gy.size(); ++k) gy[k] /= gw[k];
    // pool adjacent violators
    std::vector<double> bv, bw;
    std::vector<std::size_t> bn;
    for (std::size_t k = 0; k < gy.size(); ++k) {
      bv.push_back(gy[k]);
      bw.push_back(gw[k]);
      bn.push_back(1);
      while (bv.size() > 1 && bv[bv.size() - 2] > bv.back()) {
        const double wsum = bw[bw.size() - 2] + bw.back();
        bv[bv.size() - 2] =
            (bv[bv.size() - 2] * bw[bw.size() - 2] + bv.back() * bw.back()) / wsum;
        bw[bw.size() - 2] = wsum;
        bn[bn.size() - 2] += bn.back();
        bv.pop_back();
        bw.pop_back();
        bn.pop_back();
      }
    }
    fit.knots_x = gx;
    fit.fitted.reserve(gx.size());
    for (std::size_t blk = 0; blk < bv.size(); ++blk)
      for (std::size_t rep = 0; rep < bn[blk]; ++rep) fit.fitted.push_back(bv[blk]);
    // residuals against the raw pooled points
    std::size_t gi = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const std::size_t i = order[k];
      while (gx[gi] != xs[i]) ++gi;
      fit.max_residual =
          std::max(fit.max_residual, std::abs(ys[s][i] - fit.fitted[gi]));
    }
    for (std::size_t k = 0; k + 1 < gx.size(); ++k)
      fit.lipschitz = std::max(
          fit.lipschitz, (fit.fitted[k + 1] - fit.fitted[k]) / (gx[k + 1] - gx[k]));
  }
  return out;
}

double kolmogorov_distance(const OverlapSample& sample,
                           std::span<const double> values,
                           std::span<const double> probs) {
  if (values.size() != probs.size() || values.empty())
    throw validation_error("target law needs matching values and probabilities");
  double psum = 0.0;
  for (double p : probs) psum += p;
  if (std::abs(psum - 1.0) > 1e-9)
    throw validation_error("target probabilities must sum to 1");
  std::vector<double> xs;
  std::vector<double> wts;
  double wsum = 0.0;
  for (const OverlapDraw& draw : sample.draws) {
    xs.push_back(draw.combined[0][1]);
    wts.push_back(draw.weight);
    wsum += draw.weight;
  }
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<std::size_t> torder(values.size());
  std::iota(torder.begin(), torder.end(), 0);
  std::sort(torder.begin(), torder.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  // sweep the union of jump points
  double sup = 0.0, fhat = 0.0, ftgt = 0.0;
  std::size_t i = 0, j = 0;
  while (i < order.size() || j < torder.size()) {
    double x;
    if (j >= torder.size() || (i < order.size() && xs[order[i]] <= values[torder[j]]))
      x = xs[order[i]];
    else
      x = values[torder[j]];
    while (i < order.size() && xs[order[i]] <= x) fhat += wts[order[i++]] / wsum;
    while (j < torder.size() && values[torder[j]] <= x) ftgt += probs[torder[j++]];
    sup = std::max(sup, std::abs(fhat - ftgt));
  }
  return sup;
}

}  // namespace mspk
