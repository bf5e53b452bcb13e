#include "mspk/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

namespace mspk {
namespace {

constexpr double kSumTol = 1e-12;
constexpr double kPsdTol = -1e-10;

/// Smallest eigenvalue of a small symmetric matrix (cyclic Jacobi).
double min_eigenvalue(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  if (n == 1) return a[0][0];
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  double mn = a[0][0];
  for (std::size_t i = 1; i < n; ++i) mn = std::min(mn, a[i][i]);
  return mn;
}

double lambda_of(const ModelSpec& spec, const SpinAssignment& assign, int s,
                 bool realized) {
  return realized ? assign.realized_lambda[s] : spec.lambda[s];
}

MeanWithError summarize(std::span<const double> vals) {
  MeanWithError r;
  r.n = static_cast<long>(vals.size());
  const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / r.n;
  double ss = 0.0;
  for (double v : vals) ss += (v - mean) * (v - mean);
  r.mean = mean;
  r.se = r.n > 1 ? std::sqrt(ss / (r.n * (r.n - 1.0))) : 0.0;
  return r;
}

}  // namespace

ModelSpec validate_model(std::vector<std::string> species,
                         std::vector<double> lambda,
                         std::vector<std::vector<double>> delta_sq) {
  const std::size_t ns = species.size();
  if (ns < 1) throw validation_error("model must declare at least one species");
  if (lambda.size() != ns)
    throw validation_error("lambda length does not match species count");
  if (delta_sq.size() != ns)
    throw validation_error("delta_sq row count does not match species count");
  for (const auto& row : delta_sq)
    if (row.size() != ns)
      throw validation_error("delta_sq is not square");
  double sum = 0.0;
  for (std::size_t s = 0; s < ns; ++s) {
    if (!(lambda[s] > 0.0))
      throw validation_error("lambda[" + species[s] + "] must be positive");
    if (lambda[s] >= 1.0 && ns > 1)
      throw validation_error("lambda[" + species[s] + "] must be below 1");
    sum += lambda[s];
  }
  if (std::abs(sum - 1.0) > kSumTol)
    throw validation_error("species proportions sum to " + std::to_string(sum) +
                           ", expected 1");
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t t = 0; t < ns; ++t) {
      if (delta_sq[s][t] < 0.0)
        throw validation_error("delta_sq[" + species[s] + "][" + species[t] +
                               "] is negative; entries are variances");
      if (std::abs(delta_sq[s][t] - delta_sq[t][s]) > kSumTol)
        throw validation_error("delta_sq is not symmetric at (" + species[s] +
                               "," + species[t] + ")");
    }
  }
  ModelSpec spec{std::move(species), std::move(lambda), std::move(delta_sq), false};
  spec.psd = min_eigenvalue(spec.delta_sq) >= kPsdTol;
  return spec;
}

SpinAssignment assign_species(const ModelSpec& spec, int n) {
  const int ns = static_cast<int>(spec.n_species());
  if (n < ns)
    throw validation_error("N=" + std::to_string(n) +
                           " is below the species count; some species would be empty");
  std::vector<int> counts(ns);
  std::vector<double> frac(ns);
  int assigned = 0;
  for (int s = 0; s < ns; ++s) {
    const double exact = spec.lambda[s] * n;
    counts[s] = static_cast<int>(std::floor(exact));
    frac[s] = exact - counts[s];
    assigned += counts[s];
  }
  std::vector<int> order(ns);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return frac[a] > frac[b]; });
  for (int k = 0; k < n - assigned; ++k) counts[order[k % ns]] += 1;
  // no species may end up empty
  for (int s = 0; s < ns; ++s) {
    while (counts[s] == 0) {
      const int donor = static_cast<int>(
          std::max_element(counts.begin(), counts.end()) - counts.begin());
      counts[donor] -= 1;
      counts[s] += 1;
    }
  }
  SpinAssignment a;
  a.n_total = n;
  a.counts = counts;
  a.block_begin.resize(ns);
  a.species_of.resize(n);
  a.realized_lambda.resize(ns);
  int pos = 0;
  for (int s = 0; s < ns; ++s) {
    a.block_begin[s] = pos;
    std::fill(a.species_of.begin() + pos, a.species_of.begin() + pos + counts[s], s);
    a.realized_lambda[s] = static_cast<double>(counts[s]) / n;
    pos += counts[s];
  }
  return a;
}

DisorderMatrix sample_disorder(const ModelSpec& spec, const SpinAssignment& assign,
                               std::uint64_t seed) {
  const int n = assign.n_total;
  DisorderMatrix d;
  d.n = n;
  d.seed = seed;
  d.g.resize(static_cast<std::size_t>(n) * n);
  RngStream rng(seed, 0x6d73706b);  // "mspk"
  rng.fill_gaussian(d.g);
  for (int i = 0; i < n; ++i) {
    const int s = assign.species_of[i];
    for (int j = 0; j < n; ++j) {
      const double sd = std::sqrt(spec.delta_sq[s][assign.species_of[j]]);
      d.g[static_cast<std::size_t>(i) * n + j] *= sd;
    }
  }
  return d;
}

double hamiltonian(const DisorderMatrix& disorder, std::span<const int> sigma) {
  const int n = disorder.n;
  if (static_cast<int>(sigma.size()) != n)
    throw validation_error("configuration length does not match disorder size");
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    const double* gi = &disorder.g[static_cast<std::size_t>(i) * n];
    for (int j = 0; j < n; ++j) row += gi[j] * sigma[j];
    acc += sigma[i] * row;
  }
  return acc / std::sqrt(static_cast<double>(n));
}

Overlaps species_overlaps(const SpinAssignment& assign, std::span<const int> sigma1,
                          std::span<const int> sigma2) {
  const int n = assign.n_total;
  if (static_cast<int>(sigma1.size()) != n || static_cast<int>(sigma2.size()) != n)
    throw validation_error("configuration length does not match assignment");
  const int ns = static_cast<int>(assign.counts.size());
  Overlaps o;
  o.per_species.assign(ns, 0.0);
  for (int i = 0; i < n; ++i)
    o.per_species[assign.species_of[i]] += sigma1[i] * sigma2[i];
  for (int s = 0; s < ns; ++s) {
    o.per_species[s] /= assign.counts[s];
    o.combined += assign.realized_lambda[s] * o.per_species[s];
  }
  return o;
}

double exact_log_partition(const DisorderMatrix& disorder, int enumeration_cap) {
  const int n = disorder.n;
  if (n > enumeration_cap)
    throw resource_error("N=" + std::to_string(n) + " exceeds enumeration cap " +
                         std::to_string(enumeration_cap));
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  // A = G + G^T; track b = A sigma for O(N) flip updates.
  std::vector<double> a(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      a[static_cast<std::size_t>(i) * n + j] = disorder(i, j) + disorder(j, i);
  std::vector<double> sigma(n, 1.0), b(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b[i] += a[static_cast<std::size_t>(i) * n + j];
  double equad = 0.0;  // sigma^T G sigma = (1/2) sigma^T A sigma
  for (int i = 0; i < n; ++i) equad += 0.5 * sigma[i] * b[i];

  double mx = equad * inv_sqrt_n;
  double sum = 1.0;  // exp(E - mx) for the first configuration
  const std::uint64_t total = 1ULL << n;
  for (std::uint64_t m = 1; m < total; ++m) {
    const int k = std::countr_zero(m);
    const double sk = sigma[k];
    equad += -2.0 * sk * (b[k] - a[static_cast<std::size_t>(k) * n + k] * sk);
    const double* ak = &a[static_cast<std::size_t>(k) * n];
    for (int j = 0; j < n; ++j) b[j] -= 2.0 * sk * ak[j];
    sigma[k] = -sk;
    const double e = equad * inv_sqrt_n;
    if (e <= mx) {
      sum += std::exp(e - mx);
    } else {
      sum = sum * std::exp(mx - e) + 1.0;
      mx = e;
    }
  }
  return mx + std::log(sum);
}

MeanWithError free_energy_mc(const ModelSpec& spec, int n, int samples,
                             std::uint64_t seed, int enumeration_cap) {
  if (samples < 1) throw validation_error("samples must be >= 1");
  const SpinAssignment assign = assign_species(spec, n);
  std::vector<double> vals(samples);
  RngStream root(seed);
#pragma omp parallel for schedule(dynamic)
  for (int d = 0; d < samples; ++d) {
    const DisorderMatrix dis =
        sample_disorder(spec, assign, root.substream(d).next_u64());
    vals[d] = exact_log_partition(dis, enumeration_cap) / n;
  }
  return summarize(vals);
}

std::vector<CovarianceCheck> empirical_hamiltonian_covariance(
    const ModelSpec& spec, const SpinAssignment& assign,
    const std::vector<std::pair<std::vector<int>, std::vector<int>>>& pairs,
    int draws, std::uint64_t seed, bool use_realized_lambda) {
  if (draws < 100) throw validation_error("need at least 100 disorder draws");
  const int n = assign.n_total;
  const std::size_t np = pairs.size();
  std::vector<std::vector<double>> prods(np, std::vector<double>(draws));
  RngStream root(seed);
#pragma omp parallel for schedule(dynamic)
  for (int d = 0; d < draws; ++d) {
    const DisorderMatrix dis =
        sample_disorder(spec, assign, root.substream(d).next_u64());
    for (std::size_t p = 0; p < np; ++p) {
      const double h1 = hamiltonian(dis, pairs[p].first);
      const double h2 = hamiltonian(dis, pairs[p].second);
      prods[p][d] = h1 * h2 / n;
    }
  }
  std::vector<CovarianceCheck> out(np);
  const int ns = static_cast<int>(spec.n_species());
  for (std::size_t p = 0; p < np; ++p) {
    const Overlaps o = species_overlaps(assign, pairs[p].first, pairs[p].second);
    double theory = 0.0;
    for (int s = 0; s < ns; ++s)
      for (int t = 0; t < ns; ++t)
        theory += spec.delta_sq[s][t] * lambda_of(spec, assign, s, use_realized_lambda) *
                  lambda_of(spec, assign, t, use_realized_lambda) * o.per_species[s] *
                  o.per_species[t];
    const MeanWithError m = summarize(prods[p]);
    out[p] = {m.mean, m.se, theory,
              theory != 0.0 ? std::abs(m.mean - theory) / std::abs(theory)
                            : (m.mean == 0.0 ? 0.0 : INFINITY)};
  }
  return out;
}

std::vector<CavityCovarianceCheck> empirical_cavity_covariance(
    const ModelSpec& spec, const SpinAssignment& assign, int cavity_species,
    const std::vector<std::pair<std::vector<int>, std::vector<int>>>& pairs,
    int draws, std::uint64_t seed, bool use_realized_lambda) {
  if (draws < 100) throw validation_error("need at least 100 disorder draws");
  const int n = assign.n_total;
  const int ns = static_cast<int>(spec.n_species());
  const std::size_t np = pairs.size();
  const double norm_z = 1.0 / std::sqrt(n + 1.0);
  const double norm_y = 1.0 / std::sqrt(n * (n + 1.0));  // k = 1
  std::vector<std::vector<double>> zprod(np, std::vector<double>(draws));
  std::vector<std::vector<double>> yprod(np, std::vector<double>(draws));
  RngStream root(seed);
#pragma omp parallel for schedule(dynamic)
  for (int d = 0; d < draws; ++d) {
    RngStream rng = root.substream(d);
    // fresh cavity row/column couplings g_{i.}, g_{.i}
    std::vector<double> grow(n), gcol(n);
    rng.fill_gaussian(grow);
    rng.fill_gaussian(gcol);
    for (int j = 0; j < n; ++j) {
      const double sd =
          std::sqrt(spec.delta_sq[cavity_species][assign.species_of[j]]);
      grow[j] *= sd;
      gcol[j] *= sd;
    }
    const DisorderMatrix dis = sample_disorder(spec, assign, rng.next_u64());
    for (std::size_t p = 0; p < np; ++p) {
      double z1 = 0.0, z2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double gj = grow[j] + gcol[j];
        z1 += gj * pairs[p].first[j];
        z2 += gj * pairs[p].second[j];
      }
      zprod[p][d] = (norm_z * z1) * (norm_z * z2);
      const double y1 = hamiltonian(dis, pairs[p].first);
      const double y2 = hamiltonian(dis, pairs[p].second);
      // hamiltonian() already divides by sqrt(N); y carries 1/sqrt(N(N+k))
      yprod[p][d] = (y1 * std::sqrt(static_cast<double>(n)) * norm_y) *
                    (y2 * std::sqrt(static_cast<double>(n)) * norm_y);
    }
  }
  std::vector<CavityCovarianceCheck> out(np);
  for (std::size_t p = 0; p < np; ++p) {
    const Overlaps o = species_overlaps(assign, pairs[p].first, pairs[p].second);
    double tz = 0.0, ty = 0.0;
    for (int t = 0; t < ns; ++t)
      tz += 2.0 * spec.delta_sq[cavity_species][t] *
            lambda_of(spec, assign, t, use_realized_lambda) * o.per_species[t];
    for (int s = 0; s < ns; ++s)
      for (int t = 0; t < ns; ++t)
        ty += spec.delta_sq[s][t] * lambda_of(spec, assign, s, use_realized_lambda) *
              lambda_of(spec, assign, t, use_realized_lambda) * o.per_species[s] *
              o.per_species[t];
    const MeanWithError mz = summarize(zprod[p]);
    const MeanWithError my = summarize(yprod[p]);
    out[p].z = {mz.mean, mz.se, tz,
                tz != 0.0 ? std::abs(mz.mean - tz) / std::abs(tz)
                          : (mz.mean == 0.0 ? 0.0 : INFINITY)};
    out[p].y = {my.mean, my.se, ty,
                ty != 0.0 ? std::abs(my.mean - ty) / std::abs(ty)
                          : (my.mean == 0.0 ? 0.0 : INFINITY)};
  }
  return out;
}

double annealed_value(const ModelSpec& spec) {
  const int ns = static_cast<int>(spec.n_species());
  double q = 0.0;
  for (int s = 0; s < ns; ++s)
    for (int t = 0; t < ns; ++t)
      q += spec.delta_sq[s][t] * spec.lambda[s] * spec.lambda[t];
  return std::log(2.0) + 0.5 * q;
}

namespace {
constexpr char kMagic[4] = {'M', 'S', 'P', 'K'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_disorder(const DisorderMatrix& disorder, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw validation_error("cannot open " + path + " for writing");
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&kVersion), 4);
  const std::uint64_t n = disorder.n;
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(disorder.g.data()),
            static_cast<std::streamsize>(disorder.g.size() * sizeof(double)));
}

DisorderMatrix load_disorder(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot open " + path);
  char magic[4];
  std::uint32_t version;
  std::uint64_t n;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&n), 8);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw validation_error(path + " is not a disorder matrix file");
  if (version != kVersion)
    throw validation_error("unsupported disorder file version");
  DisorderMatrix d;
  d.n = static_cast<int>(n);
  d.g.resize(n * n);
  in.read(reinterpret_cast<char*>(d.g.data()),
          static_cast<std::streamsize>(d.g.size() * sizeof(double)));
  if (!in) throw validation_error(path + " is truncated");
  return d;
}

}  // namespace mspk
