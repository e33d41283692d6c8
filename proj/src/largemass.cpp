#include "looplab/largemass.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace looplab {

namespace {

constexpr double kConfigBudget = 2e7;

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::size_t volume_of(const LmParams& p) { return p.potential->torus.volume(); }

// Multiplicity vector m_x of a tuple.
std::vector<int> multiplicities(const std::vector<Site>& xs, std::size_t V) {
  std::vector<int> m(V, 0);
  for (Site x : xs) ++m[x];
  return m;
}

double permutation_matches(const std::vector<Site>& xs, const std::vector<Site>& ys) {
  std::vector<int> pi(xs.size());
  std::iota(pi.begin(), pi.end(), 0);
  double count = 0.0;
  do {
    bool ok = true;
    for (std::size_t i = 0; i < xs.size() && ok; ++i) ok = ys[pi[i]] == xs[i];
    if (ok) count += 1.0;
  } while (std::next_permutation(pi.begin(), pi.end()));
  return count;
}

void check_tuples(const LmParams& params, int p, const std::vector<Site>& xs, const std::vector<Site>& ys) {
  if (p < 1) throw ValidationError("gamma_lm: p must be positive");
  if (xs.size() != static_cast<std::size_t>(p) || ys.size() != static_cast<std::size_t>(p))
    throw ValidationError("gamma_lm: tuple length differs from p");
  for (Site s : xs)
    if (s >= volume_of(params)) throw ValidationError("gamma_lm: site out of range");
  for (Site s : ys)
    if (s >= volume_of(params)) throw ValidationError("gamma_lm: site out of range");
}

struct OccupationSums {
  double z = 0.0;              // Σ_K e^{-κ0|K|-V(K)}
  std::vector<double> g;       // same with Π_x C(K(x), m_x) for each multiplicity vector
  double tail_z = 0.0;         // absolute bounds on the omitted configurations
  std::vector<double> tail_g;
  int cutoff = 0;
};

OccupationSums enumerate_occupations(const LmParams& params, const std::vector<std::vector<int>>& mults, int M) {
  const PeriodizedPotential& v = *params.potential;
  const Torus& t = v.torus;
  const std::size_t V = t.volume();
  const bool hard = v.hard_core();
  if (std::pow(M + 1.0, static_cast<double>(V)) > kConfigBudget)
    throw BudgetError("largemass: occupation enumeration above the budget");
  OccupationSums s;
  s.cutoff = M;
  s.g.assign(mults.size(), 0.0);
  std::vector<int> K(V, 0);
  while (true) {
    int total = 0;
    for (int k : K) total += k;
    double e = 0.0;
    for (Site x = 0; x < V; ++x) {
      if (K[x] == 0) continue;
      for (Site y = 0; y < V; ++y) {
        if (K[y] == 0 || (hard && x == y)) continue;
        e += static_cast<double>(K[x]) * K[y] * v.at(t.diff(x, y));
      }
    }
    const double w = boltzmann(0.5 * e + params.kappa0 * total);
    s.z += w;
    for (std::size_t j = 0; j < mults.size(); ++j) {
      double c = 1.0;
      for (Site x = 0; x < V && c != 0.0; ++x)
        if (mults[j][x] > 0) c *= binomial(K[x], mults[j][x]);
      s.g[j] += w * c;
    }
    std::size_t i = 0;
    while (i < V && K[i] == M) K[i++] = 0;
    if (i == V) break;
    ++K[i];
  }
  // e^{-V} <= 1 and C(K, m) <= (1+K)^m: dominate by independent geometric sites
  const double a = std::exp(-params.kappa0);
  auto site_sums = [&](int power) {
    double full = 0.0, tail = 0.0;
    for (int k = 0;; ++k) {
      const double term = std::pow(a, k) * std::pow(1.0 + k, power);
      full += term;
      if (k > M) tail += term;
      if (k > M + 10 && term < 1e-18 * full) break;
    }
    return std::pair{full, tail};
  };
  s.tail_g.assign(mults.size(), 0.0);
  if (!hard) {
    const auto [f0, t0] = site_sums(0);
    s.tail_z = static_cast<double>(V) * t0 * std::pow(f0, static_cast<double>(V) - 1.0);
    for (std::size_t j = 0; j < mults.size(); ++j) {
      const int p = std::accumulate(mults[j].begin(), mults[j].end(), 0);
      const auto [fp, tp] = site_sums(p);
      s.tail_g[j] = static_cast<double>(V) * tp * std::pow(fp, static_cast<double>(V) - 1.0);
    }
  }
  return s;
}

OccupationSums occupation_sums(const LmParams& params, const std::vector<std::vector<int>>& mults) {
  params.validate();
  if (params.potential->hard_core()) return enumerate_occupations(params, mults, 1);
  for (int M = 8;; M *= 2) {
    OccupationSums s = enumerate_occupations(params, mults, M);
    bool ok = s.tail_z <= params.tol * s.z;
    for (std::size_t j = 0; j < mults.size(); ++j) ok = ok && s.tail_g[j] <= params.tol * s.g[j];
    if (ok) return s;
    if (M >= 4096) throw PrecisionError("largemass: tolerance not reachable");
  }
}

}  // namespace

void LmParams::validate() const {
  if (!(kappa0 > 0.0) || !std::isfinite(kappa0)) throw ValidationError("largemass: κ0 must be positive and finite");
  if (!potential) throw ValidationError("largemass: missing potential");
  if (!(tol > 0.0)) throw ValidationError("largemass: tol must be positive");
  if (k_max < 0 || n_max < 0) throw ValidationError("largemass: cut-offs must be >= 0");
  for (Site x = 0; x < potential->torus.volume(); ++x) {
    if (potential->hard_core() && x == 0) continue;
    if (!(potential->at(x) >= 0.0) || !std::isfinite(potential->at(x)))
      throw ValidationError("largemass: potential must be finite and nonnegative off the core");
  }
}

LmPartition z_lm(const LmParams& params) {
  const OccupationSums s = occupation_sums(params, {});
  const double V = static_cast<double>(volume_of(params));
  const double a = std::exp(-params.kappa0);
  LmPartition r;
  r.numerator = s.z;
  r.normalizer = std::pow(1.0 - a, -V);  // exp(|Λ| Σ_k a^k/k)
  r.relative = s.z / r.normalizer;
  r.tail = s.tail_z / s.z;
  r.cutoff = s.cutoff;
  return r;
}

double gamma_lm(const LmParams& params, int p, const std::vector<Site>& xs, const std::vector<Site>& ys) {
  params.validate();
  check_tuples(params, p, xs, ys);
  const double matches = permutation_matches(xs, ys);
  if (matches == 0.0) return 0.0;
  const OccupationSums s = occupation_sums(params, {multiplicities(xs, volume_of(params))});
  return matches * s.g[0] / s.z;
}

Kernel gamma_lm_kernel(const LmParams& params, int p) {
  params.validate();
  if (p < 1) throw ValidationError("gamma_lm_kernel: p must be positive");
  const std::size_t V = volume_of(params);
  std::size_t Vp = 1;
  for (int i = 0; i < p; ++i) Vp *= V;
  std::map<std::vector<int>, std::size_t> key_of;
  std::vector<std::vector<int>> keys;
  std::vector<std::size_t> row_key(Vp);
  for (std::size_t i = 0; i < Vp; ++i) {
    auto m = multiplicities(tuple_sites(i, p, V), V);
    auto [it, fresh] = key_of.try_emplace(m, keys.size());
    if (fresh) keys.push_back(m);
    row_key[i] = it->second;
  }
  const OccupationSums s = occupation_sums(params, keys);
  Kernel K = Kernel::Zero(Vp, Vp);
  for (std::size_t i = 0; i < Vp; ++i) {
    const auto xs = tuple_sites(i, p, V);
    for (std::size_t j = 0; j < Vp; ++j) {
      const double m = permutation_matches(xs, tuple_sites(j, p, V));
      if (m > 0.0) K(i, j) = m * s.g[row_key[i]] / s.z;
    }
  }
  return K;
}

double gibbs_potential_lm(const LmParams& params) {
  const LmPartition z = z_lm(params);
  return std::log(z.relative) / static_cast<double>(volume_of(params));
}

namespace {

struct LabeledSetup {
  int k_max = 1;
  int n_max = 0;
  double normalizer = 1.0;
  double tail = 0.0;
};

LabeledSetup labeled_setup(const LmParams& params) {
  params.validate();
  const std::size_t V = volume_of(params);
  const double a = std::exp(-params.kappa0);
  LabeledSetup s;
  const bool hard = params.potential->hard_core();
  if (hard) {
    s.k_max = 1;
  } else if (params.k_max > 0) {
    s.k_max = params.k_max;
  } else {
    double tail = -std::log1p(-a);
    s.k_max = 0;
    while (tail > params.tol) {
      ++s.k_max;
      tail -= std::pow(a, s.k_max) / s.k_max;
    }
    s.k_max = std::max(s.k_max, 1);
  }
  double mu = 0.0, k_tail = -std::log1p(-a);
  for (int k = 1; k <= s.k_max; ++k) {
    mu += std::pow(a, k) / k;
    k_tail -= std::pow(a, k) / k;
  }
  mu *= static_cast<double>(V);
  // exact free normalizer; the numerator truncation is reported in `tail`
  s.normalizer = std::pow(1.0 - a, -static_cast<double>(V));
  if (hard) {
    s.n_max = static_cast<int>(V);  // more particles than sites always collide
    s.tail = 0.0;
    return s;
  }
  // Poisson(μ) tail beyond n_max
  double term = std::exp(-mu), cdf = term;
  int n = 0;
  if (params.n_max > 0) {
    for (n = 1; n <= params.n_max; ++n) {
      term *= mu / n;
      cdf += term;
    }
    s.n_max = params.n_max;
  } else {
    while (1.0 - cdf > params.tol && n < 200) {
      ++n;
      term *= mu / n;
      cdf += term;
    }
    s.n_max = n;
  }
  s.tail = std::max(0.0, 1.0 - cdf) + static_cast<double>(V) * std::max(0.0, k_tail);
  return s;
}

// Σ over multisets of extra particles (k ≤ k_max) of size ≤ n_max of
// Π 1/(mult!) Π e^{-κ0 k}/k e^{-V^lm(fixed ∪ extra)}.
double labeled_sum(const LmParams& params, const LabeledSetup& s, const std::vector<int>& fixed_k,
                   const std::vector<Site>& fixed_x) {
  const std::size_t V = volume_of(params);
  const int types = s.k_max * static_cast<int>(V);
  // budget: number of multisets Σ_n C(types+n-1, n)
  double count = 0.0;
  for (int n = 0; n <= s.n_max; ++n) count += binomial(types + n - 1, n);
  if (count > kConfigBudget) throw BudgetError("largemass: labeled sum above the budget");
  double acc = 0.0;
  std::vector<int> k = fixed_k;
  std::vector<Site> x = fixed_x;
  std::vector<int> mult(types, 0);
  // depth-first over non-decreasing type sequences
  auto rec = [&](auto&& self, int first, int n, double weight) -> void {
    acc += weight * boltzmann(v_lm(k, x, *params.potential));
    if (n == s.n_max) return;
    for (int ty = first; ty < types; ++ty) {
      const int kk = ty / static_cast<int>(V) + 1;
      const Site xx = static_cast<Site>(ty % static_cast<int>(V));
      ++mult[ty];
      k.push_back(kk);
      x.push_back(xx);
      self(self, ty, n + 1, weight * std::exp(-params.kappa0 * kk) / kk / mult[ty]);
      k.pop_back();
      x.pop_back();
      --mult[ty];
    }
  };
  rec(rec, 0, 0, 1.0);
  return acc;
}

}  // namespace

LmPartition z_lm_labeled(const LmParams& params) {
  const LabeledSetup s = labeled_setup(params);
  LmPartition r;
  r.numerator = labeled_sum(params, s, {}, {});
  r.normalizer = s.normalizer;
  r.relative = r.numerator / r.normalizer;
  r.tail = s.tail;
  r.cutoff = s.k_max;
  return r;
}

double gamma_lm_labeled(const LmParams& params, int p, const std::vector<Site>& xs, const std::vector<Site>& ys) {
  check_tuples(params, p, xs, ys);
  const double matches = permutation_matches(xs, ys);
  if (matches == 0.0) return 0.0;
  const LabeledSetup s = labeled_setup(params);
  const double z = labeled_sum(params, s, {}, {});
  double acc = 0.0;
  std::vector<int> k(p, 1);
  while (true) {
    int total = 0;
    for (int ki : k) total += ki;
    acc += std::exp(-params.kappa0 * total) * labeled_sum(params, s, k, xs);
    int i = 0;
    while (i < p && k[i] == s.k_max) k[i++] = 1;
    if (i == p) break;
    ++k[i];
  }
  return matches * acc / z;
}

std::vector<WeightedParticle> weighted_particle_view(const LoopConfig& config, double nu) {
  if (!(nu > 0.0)) throw ValidationError("weighted_particle_view: ν must be positive");
  std::vector<WeightedParticle> out;
  for (const Path& p : config) {
    if (!p.jumps.empty()) throw ValidationError("weighted_particle_view: loop is not constant");
    const double k = std::round(p.T / nu);
    if (k < 1.0 || std::abs(p.T - k * nu) > 1e-9 * nu)
      throw ValidationError("weighted_particle_view: duration is not a positive multiple of ν");
    out.push_back({static_cast<int>(k), p.start});
  }
  return out;
}

LoopConfig loops_from_particles(const std::vector<WeightedParticle>& particles, double nu) {
  LoopConfig out;
  for (const auto& q : particles) {
    if (q.k < 1) throw ValidationError("loops_from_particles: k must be positive");
    out.push_back(constant_path(q.x, q.k * nu));
  }
  return out;
}

double lm_pair_energy(const WeightedParticle& a, const WeightedParticle& b, const PeriodizedPotential& vL) {
  return static_cast<double>(a.k) * b.k * vL.at(vL.torus.diff(a.x, b.x));
}

}  // namespace looplab
