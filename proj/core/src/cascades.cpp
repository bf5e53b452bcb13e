#include "mspk/cascades.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace mspk {
namespace {

constexpr double kIncrementTol = 1e-12;

void check_zeta(std::span<const double> zeta) {
  double prev = 0.0;
  for (double z : zeta) {
    if (!(z > prev && z < 1.0))
      throw validation_error("zeta must be strictly increasing inside (0,1)");
    prev = z;
  }
}

double logsumexp(std::span<const double> terms) {
  const double m = *std::max_element(terms.begin(), terms.end());
  const double* t = terms.data();
  const std::size_t n = terms.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::exp(t[i] - m);
  return m + std::log(acc);
}

/// Non-decreasing increments of a path sequence; tiny negatives clamped.
std::vector<double> path_increments(std::span<const double> path) {
  std::vector<double> inc(path.size());
  inc[0] = path[0];
  for (std::size_t l = 1; l < path.size(); ++l) inc[l] = path[l] - path[l - 1];
  for (double& d : inc) {
    if (d < -kIncrementTol) throw validation_error("path increments must be non-negative");
    d = std::max(d, 0.0);
  }
  return inc;
}

/// One hierarchical Gaussian field over the leaves: per-edge independent
/// increments with variances inc[l+1], plus a root value of variance inc[0]
/// shared by all leaves.
std::vector<double> hierarchical_field(const CascadeTree& tree,
                                       std::span<const double> inc, RngStream rng) {
  std::vector<double> cur(1, std::sqrt(inc[0]) * rng.gaussian());
  std::vector<double> next;
  for (int l = 0; l < tree.depth; ++l) {
    const double sd = std::sqrt(inc[l + 1]);
    const int b = tree.branching[l];
    next.resize(cur.size() * b);
    rng.fill_gaussian(next);
    for (std::size_t parent = 0; parent < cur.size(); ++parent) {
      const double base = cur[parent];
      double* nx = next.data() + parent * b;
      for (int k = 0; k < b; ++k) nx[k] = base + sd * nx[k];
    }
    std::swap(cur, next);
  }
  return cur;
}

}  // namespace

int CascadeTree::child_at(long alpha, int level) const {
  return static_cast<int>((alpha / stride[level]) % branching[level]);
}

int CascadeTree::common_depth(long alpha, long beta) const {
  for (int l = 0; l < depth; ++l)
    if (child_at(alpha, l) != child_at(beta, l)) return l;
  return depth;
}

CascadeTree sample_cascade(std::span<const double> zeta,
                           std::span<const int> branching, std::uint64_t seed,
                           long leaf_cap) {
  check_zeta(zeta);
  if (branching.size() != zeta.size())
    throw validation_error("branching must have one entry per level");
  long leaves = 1;
  for (int m : branching) {
    if (m < 2) throw validation_error("branching truncation must be >= 2");
    leaves *= m;
    if (leaves > leaf_cap) throw resource_error("cascade leaf count exceeds the cap");
  }
  CascadeTree tree;
  tree.depth = static_cast<int>(zeta.size());
  tree.branching.assign(branching.begin(), branching.end());
  tree.zeta.assign(zeta.begin(), zeta.end());
  tree.seed = seed;
  tree.stride.assign(tree.depth, 1);
  for (int l = tree.depth - 2; l >= 0; --l)
    tree.stride[l] = tree.stride[l + 1] * branching[l + 1];

  RngStream root(seed, 0x636173ULL);  // distinct stream tag for tree atoms
  std::vector<double> cur(1, 0.0), next, gaps(0), la, rel;
  long node_id = 0;
  for (int l = 0; l < tree.depth; ++l) {
    const int m = branching[l];
    const double inv_zeta = 1.0 / zeta[l];
    next.resize(cur.size() * m);
    gaps.resize(m);
    la.resize(m);
    rel.resize(m);
    double tail_sum = 0.0;
    for (std::size_t node = 0; node < cur.size(); ++node) {
      RngStream rng = root.substream(static_cast<std::uint64_t>(node_id++));
      rng.fill_exponential(gaps);
      std::partial_sum(gaps.begin(), gaps.end(), gaps.begin());
      const double* t = gaps.data();
      double* lp = la.data();
      for (int k = 0; k < m; ++k) lp[k] = -inv_zeta * std::log(t[k]);
      const double base = cur[node];
      double* nx = next.data() + node * m;
      for (int k = 0; k < m; ++k) nx[k] = base + lp[k];
      const double lead = lp[0];  // largest atom: arrival times increase
      double* rp = rel.data();
      for (int k = 0; k < m; ++k) rp[k] = std::exp(lp[k] - lead);
      double retained = 0.0;
      for (int k = 0; k < m; ++k) retained += rp[k];
      tail_sum += rp[m - 1] / retained;
    }
    tree.discarded_mass += tail_sum / static_cast<double>(cur.size());
    std::swap(cur, next);
  }
  const double lse = logsumexp(cur);
  tree.log_v.resize(cur.size());
  tree.v.resize(cur.size());
  const double* c = cur.data();
  double* lv = tree.log_v.data();
  double* v = tree.v.data();
  const std::size_t nl = cur.size();
  for (std::size_t i = 0; i < nl; ++i) lv[i] = c[i] - lse;
  for (std::size_t i = 0; i < nl; ++i) v[i] = std::exp(lv[i]);
  return tree;
}

CascadeTree sample_cascade(std::span<const double> zeta, int m, std::uint64_t seed,
                           long leaf_cap) {
  if (m < 2) throw validation_error("branching truncation must be >= 2");
  std::vector<int> branching(zeta.size(), m);
  auto leaves = [&] {
    long p = 1;
    for (int b : branching) p = std::min(p * b, leaf_cap + 1);
    return p;
  };
  for (int l = static_cast<int>(branching.size()) - 1; l >= 0 && leaves() > leaf_cap; --l)
    while (branching[l] > 2 && leaves() > leaf_cap) branching[l] = (branching[l] + 1) / 2;
  return sample_cascade(zeta, branching, seed, leaf_cap);
}

FieldSample sample_fields(const CascadeTree& tree, const PathSequences& paths,
                          std::uint64_t seed) {
  if (static_cast<int>(paths.combined.size()) != tree.depth + 1)
    throw validation_error("path sequences do not match the tree depth");
  FieldSample out;
  out.seed = seed;
  RngStream root(seed, 0x666c64ULL);
  out.c.resize(paths.per_species.size());
  for (std::size_t s = 0; s < paths.per_species.size(); ++s)
    out.c[s] = hierarchical_field(tree, path_increments(paths.per_species[s]),
                                  root.substream(s));
  out.d = hierarchical_field(tree, path_increments(paths.combined),
                             root.substream(paths.per_species.size()));
  return out;
}

double cascade_log_ch(const CascadeTree& tree, const FieldSample& fields, int s) {
  const long nl = tree.n_leaves();
  std::vector<double> terms(nl);
  const double* c = fields.c.at(s).data();
  const double* lv = tree.log_v.data();
  double* tm = terms.data();
  const double log2 = std::log(2.0);
  for (long a = 0; a < nl; ++a) {
    const double x = std::abs(c[a]);
    tm[a] = lv[a] + x + std::log(1.0 + std::exp(-2.0 * x)) - log2;
  }
  return logsumexp(terms);
}

double cascade_log_exp(const CascadeTree& tree, std::span<const double> dfield,
                       double t) {
  if (t < 0.0) throw validation_error("scale factor t must be >= 0");
  const long nl = tree.n_leaves();
  std::vector<double> terms(nl);
  const double* lv = tree.log_v.data();
  const double* d = dfield.data();
  double* tm = terms.data();
  for (long a = 0; a < nl; ++a) tm[a] = lv[a] + t * d[a];
  return logsumexp(terms);
}

PhiCurve interpolation_phi_curve(const ModelSpec& spec, int n,
                                 const RsbParams& params,
                                 std::span<const double> xs,
                                 const PhiConfig& config, std::uint64_t seed) {
  validate_rsb(spec, params);
  for (double x : xs)
    if (x < 0.0 || x > 1.0) throw validation_error("interpolation x must lie in [0,1]");
  if (n < static_cast<int>(spec.n_species()))
    throw validation_error("need at least one spin per species");
  if (n > config.enumeration_cap)
    throw resource_error("spin count exceeds the enumeration cap");
  const SpinAssignment assign = assign_species(spec, n);
  const PathSequences paths = path_sequences(spec, params);
  const long states = 1L << n;

  {  // work estimate against the configured cap
    long leaves = 1;
    for (int l = 0; l < params.r; ++l)
      leaves = std::min(leaves * config.truncation, config.leaf_cap);
    if (static_cast<double>(config.samples) * static_cast<double>(states) *
            static_cast<double>(leaves) > static_cast<double>(config.work_cap))
      throw resource_error("interpolation work exceeds the cap");
  }

  const int nx = static_cast<int>(xs.size());
  std::vector<std::vector<double>> per_sample(config.samples,
                                              std::vector<double>(nx, 0.0));
#pragma omp parallel for schedule(dynamic)
  for (int sm = 0; sm < config.samples; ++sm) {
    RngStream rng(seed, static_cast<std::uint64_t>(sm));
    const DisorderMatrix dis =
        sample_disorder(spec, assign, rng.substream(0).next_u64());
    const CascadeTree tree = sample_cascade(params.zeta, config.truncation,
                                            rng.substream(1).next_u64(),
                                            config.leaf_cap);
    const long leaves = tree.n_leaves();
    // independent per-site copies of C^{s(i)} plus the shared D field
    std::vector<std::vector<double>> site_c(n);
    RngStream froot(rng.substream(2).next_u64(), 0);
    for (int i = 0; i < n; ++i)
      site_c[i] = hierarchical_field(
          tree, path_increments(paths.per_species[assign.species_of[i]]),
          froot.substream(i));
    const std::vector<double> dfield = hierarchical_field(
        tree, path_increments(paths.combined), froot.substream(n));

    // per-x per-leaf constant part: log v + sqrt(x) sqrt(N) D
    std::vector<double> base(static_cast<std::size_t>(leaves) * nx);
    std::vector<double> sx(nx), s1x(nx);
    for (int j = 0; j < nx; ++j) {
      sx[j] = std::sqrt(xs[j]);
      s1x[j] = std::sqrt(1.0 - xs[j]);
    }
    const double sqn = std::sqrt(static_cast<double>(n));
    for (long a = 0; a < leaves; ++a)
      for (int j = 0; j < nx; ++j)
        base[a * nx + j] = tree.log_v[a] + sx[j] * sqn * dfield[a];

    // Gray-code sweep over sigma, maintaining the energy and all leaf dots
    std::vector<double> arow(static_cast<std::size_t>(n) * n), b(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) arow[i * n + j] = dis(i, j) + dis(j, i);
    std::vector<int> sigma(n, -1);
    double energy = 0.0;
    for (int i = 0; i < n; ++i) {
      double bi = 0.0;
      for (int j = 0; j < n; ++j) bi += arow[i * n + j] * sigma[j];
      b[i] = bi;
      for (int j = 0; j < n; ++j) energy += dis(i, j) * sigma[i] * sigma[j];
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<double> dots(leaves, 0.0);
    for (long a = 0; a < leaves; ++a) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc -= site_c[i][a];
      dots[a] = acc;
    }
    std::vector<double> mx(nx, -std::numeric_limits<double>::infinity());
    std::vector<double> acc(nx, 0.0);
    for (long code = 0;; ++code) {
      const double h = energy * scale;
      for (long a = 0; a < leaves; ++a) {
        const double dot = dots[a];
        for (int j = 0; j < nx; ++j) {
          const double term = base[a * nx + j] + sx[j] * h + s1x[j] * dot;
          if (term <= mx[j]) {
            acc[j] += std::exp(term - mx[j]);
          } else {
            acc[j] = acc[j] * std::exp(mx[j] - term) + 1.0;
            mx[j] = term;
          }
        }
      }
      if (code + 1 >= states) break;
      const int k = std::countr_zero(static_cast<unsigned long>(code + 1));
      const int old = sigma[k];
      sigma[k] = -old;
      energy -= 2.0 * old * (b[k] - arow[k * n + k] * old);
      for (int j = 0; j < n; ++j) b[j] += 2.0 * sigma[k] * arow[k * n + j];
      const double twos = 2.0 * sigma[k];
      const auto& ck = site_c[k];
      for (long a = 0; a < leaves; ++a) dots[a] += twos * ck[a];
    }
    for (int j = 0; j < nx; ++j)
      per_sample[sm][j] = (mx[j] + std::log(acc[j])) / n;
  }

  PhiCurve out;
  out.xs.assign(xs.begin(), xs.end());
  out.phi.resize(nx);
  for (int j = 0; j < nx; ++j) {
    double mean = 0.0;
    for (int sm = 0; sm < config.samples; ++sm) mean += per_sample[sm][j];
    mean /= config.samples;
    double var = 0.0;
    for (int sm = 0; sm < config.samples; ++sm) {
      const double d = per_sample[sm][j] - mean;
      var += d * d;
    }
    out.phi[j].mean = mean;
    out.phi[j].n = config.samples;
    out.phi[j].se = config.samples > 1
                        ? std::sqrt(var / (config.samples - 1.0) / config.samples)
                        : 0.0;
  }
  out.per_sample = std::move(per_sample);
  return out;
}

std::vector<MeanWithError> interpolation_phi(const ModelSpec& spec, int n,
                                             const RsbParams& params,
                                             std::span<const double> xs,
                                             const PhiConfig& config,
                                             std::uint64_t seed) {
  return interpolation_phi_curve(spec, n, params, xs, config, seed).phi;
}

OverlapDraw sample_overlap_array(const CascadeTree& tree,
                                 std::span<const double> q_combined,
                                 const std::vector<std::vector<double>>& q_species,
                                 int n, std::uint64_t seed) {
  if (static_cast<int>(q_combined.size()) != tree.depth + 1)
    throw validation_error("combined overlap sequence must have length r+1");
  double prev = -1.0;
  for (double q : q_combined) {
    if (q <= prev) throw validation_error("combined overlap sequence must be strictly increasing");
    prev = q;
  }
  for (const auto& qs : q_species)
    if (qs.size() != q_combined.size())
      throw validation_error("species overlap sequences must have length r+1");
  if (n < 1) throw validation_error("replica count must be >= 1");

  std::vector<double> cum(tree.v.size());
  std::partial_sum(tree.v.begin(), tree.v.end(), cum.begin());
  RngStream rng(seed, 0x6f766cULL);
  std::vector<long> leaf(n);
  for (int l = 0; l < n; ++l) {
    const double u = rng.uniform() * cum.back();
    leaf[l] = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
  }
  OverlapDraw draw;
  draw.combined.assign(n, std::vector<double>(n, 0.0));
  draw.per_species.assign(q_species.size(),
                          std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)));
  for (int l = 0; l < n; ++l) {
    for (int lp = 0; lp < n; ++lp) {
      const int d = l == lp ? tree.depth : tree.common_depth(leaf[l], leaf[lp]);
      draw.combined[l][lp] = q_combined[d];
      for (std::size_t s = 0; s < q_species.size(); ++s)
        draw.per_species[s][l][lp] = q_species[s][d];
    }
  }
  return draw;
}

OverlapSample cascade_overlap_samples(const ModelSpec& spec, const RsbParams& params,
                                      std::span<const double> q_combined, int m,
                                      int n, int draws, std::uint64_t seed,
                                      long leaf_cap) {
  validate_rsb(spec, params);
  OverlapSample out;
  out.species = spec.species;
  out.n_replicas = n;
  out.draws.resize(draws);
#pragma omp parallel for schedule(dynamic)
  for (int d = 0; d < draws; ++d) {
    RngStream rng(seed, static_cast<std::uint64_t>(d));
    const CascadeTree tree =
        sample_cascade(params.zeta, m, rng.substream(0).next_u64(), leaf_cap);
    out.draws[d] = sample_overlap_array(tree, q_combined, params.q, n,
                                        rng.substream(1).next_u64());
  }
  return out;
}

OverlapSample exact_overlap_samples(const ModelSpec& spec, const RsbParams& params,
                                    std::span<const double> q_combined, int n,
                                    int draws, std::uint64_t seed) {
  validate_rsb(spec, params);
  if (static_cast<int>(q_combined.size()) != params.r + 1)
    throw validation_error("combined overlap sequence must have length r+1");
  double prev = -1.0;
  for (double q : q_combined) {
    if (q <= prev)
      throw validation_error("combined overlap sequence must be strictly increasing");
    prev = q;
  }
  if (n < 1) throw validation_error("replica count must be >= 1");
  const int ns = static_cast<int>(spec.n_species());
  OverlapSample out;
  out.species = spec.species;
  out.n_replicas = n;
  out.draws.resize(draws);
#pragma omp parallel for schedule(dynamic)
  for (int d = 0; d < draws; ++d) {
    RngStream rng(seed, static_cast<std::uint64_t>(d));
    // Bottom-up coagulation: the flattened leaf weights form a
    // Poisson-Dirichlet PD(zeta_{r-1}) level, so the leaf partition of n
    // picks is Ewens-Pitman(zeta_{r-1}, 0); distinct leaf blocks land in
    // coarser subtrees as i.i.d. picks from PD(zeta_{l-1}/zeta_l), i.e.
    // successive coagulations by Ewens-Pitman(zeta_{l-1}/zeta_l, 0).
    const auto crp = [&rng](int m, double alpha) {
      std::vector<int> label(m, 0);
      std::vector<double> counts{1.0};
      for (int k = 1; k < m; ++k) {
        const double u = rng.uniform() * static_cast<double>(k);
        double acc = 0.0;
        int chosen = static_cast<int>(counts.size());  // default: new table
        for (std::size_t t = 0; t < counts.size(); ++t) {
          acc += counts[t] - alpha;
          if (u < acc) {
            chosen = static_cast<int>(t);
            break;
          }
        }
        label[k] = chosen;
        if (chosen == static_cast<int>(counts.size()))
          counts.push_back(1.0);
        else
          counts[chosen] += 1.0;
      }
      return label;
    };
    std::vector<std::vector<int>> depth_group(params.r + 1,
                                              std::vector<int>(n, 0));
    depth_group[params.r] = crp(n, params.zeta[params.r - 1]);
    for (int l = params.r - 1; l >= 1; --l) {
      const std::vector<int>& fine = depth_group[l + 1];
      const int blocks = 1 + *std::max_element(fine.begin(), fine.end());
      const std::vector<int> coarse =
          crp(blocks, params.zeta[l - 1] / params.zeta[l]);
      for (int i = 0; i < n; ++i) depth_group[l][i] = coarse[fine[i]];
    }
    OverlapDraw& draw = out.draws[d];
    draw.combined.assign(n, std::vector<double>(n, 0.0));
    draw.per_species.assign(
        ns, std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        int cd = params.r;
        if (a != b) {
          cd = 0;
          while (cd < params.r && depth_group[cd + 1][a] == depth_group[cd + 1][b])
            ++cd;
        }
        draw.combined[a][b] = q_combined[cd];
        for (int s = 0; s < ns; ++s) draw.per_species[s][a][b] = params.q[s][cd];
      }
  }
  return out;
}

}  // namespace mspk
