#include "looplab/loop_mc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace looplab {

namespace {
constexpr std::uint64_t kTagNumerator = 101;
constexpr std::uint64_t kTagDenominator = 102;
constexpr std::uint64_t kTagPartition = 103;
}  // namespace

EnsembleSpec EnsembleSpec::ginibre(const InteractionParams& params, double kappa) {
  EnsembleSpec s;
  s.kind = EnsembleKind::ginibre;
  s.params = params;
  s.torus = params.potential ? params.potential->torus : Torus(1, 1);
  s.kappa = kappa;
  s.validate();
  s.intensity = LoopIntensity::ginibre(s.torus, params.nu, kappa);
  return s;
}

EnsembleSpec EnsembleSpec::largemass(const InteractionParams& params) {
  if (params.regime != Regime::largemass) throw ValidationError("EnsembleSpec::largemass needs large-mass parameters");
  return ginibre(params, params.kappa0 / params.nu);
}

EnsembleSpec EnsembleSpec::symanzik(std::shared_ptr<const PeriodizedPotential> v, double kappa, double eps) {
  if (!v) throw ValidationError("symanzik ensemble: missing potential");
  EnsembleSpec s;
  s.kind = EnsembleKind::symanzik;
  s.torus = v->torus;
  s.classical = std::move(v);
  s.kappa = kappa;
  s.validate();
  s.intensity = LoopIntensity::symanzik(s.torus, kappa, eps);
  return s;
}

void EnsembleSpec::validate() const {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ValidationError("ensemble: κ must be positive and finite");
  if (kind == EnsembleKind::ginibre) {
    params.validate();
    if (params.regime == Regime::largemass && std::abs(kappa * params.nu - params.kappa0) > 1e-12 * params.kappa0)
      throw ValidationError("ensemble: large-mass mode needs κ = κ0/ν");
  } else {
    if (!classical) throw ValidationError("ensemble: missing classical potential");
    if (classical->hard_core()) throw ValidationError("ensemble: hard core is not supported for the Symanzik ensemble");
  }
  if (intensity) {
    const bool ok = (kind == EnsembleKind::ginibre) == (intensity->kind() == LoopIntensity::Kind::ginibre);
    if (!ok) throw ValidationError("ensemble: intensity kind does not match ensemble kind");
    if (!std::isfinite(intensity->mass())) throw ValidationError("ensemble: loop intensity mass is not finite");
  }
}

double EnsembleSpec::energy(const LoopConfig& config) const {
  if (kind == EnsembleKind::symanzik) return energy_cl(config, *classical);
  return energy_ginibre(config, params);
}

DurationLaw EnsembleSpec::open_law() const {
  return kind == EnsembleKind::ginibre ? DurationLaw::ginibre(params.nu, kappa) : DurationLaw::symanzik(kappa);
}

McEstimate estimate_rel_partition(const EnsembleSpec& spec, std::size_t n_samples, std::uint64_t seed,
                                  unsigned workers) {
  spec.validate();
  if (!spec.intensity) throw ValidationError("estimate_rel_partition: missing intensity");
  const LoopIntensity& li = *spec.intensity;
  auto acc = run_samples(n_samples, 3, seed, kTagPartition, workers, [&](Rng& rng, std::vector<double>& out) {
    const std::size_t a0 = LoopIntensity::attempts;
    LoopConfig cfg = sample_poisson_config(li, rng);
    out[0] = boltzmann(spec.energy(cfg));
    out[1] = static_cast<double>(cfg.size());
    out[2] = static_cast<double>(LoopIntensity::attempts - a0);
  });
  McEstimate e = to_estimate(acc[0], seed);
  e.meta["mass"] = li.mass();
  e.meta["tail"] = li.truncated_tail();
  e.meta["mean_loops"] = acc[1].mean;
  e.meta["bridge_acceptance"] = acc[2].mean > 0.0 ? acc[1].mean / acc[2].mean : 1.0;
  return e;
}

namespace {

void check_tuple(const EnsembleSpec& spec, int p, const std::vector<Site>& s) {
  if (static_cast<int>(s.size()) != p) throw ValidationError("gamma_p: tuple length differs from p");
  for (Site x : s)
    if (x >= spec.torus.volume()) throw ValidationError("gamma_p: site out of range");
}

McEstimate denominator(const EnsembleSpec& spec, std::size_t n, std::uint64_t seed, unsigned workers) {
  const LoopIntensity& li = *spec.intensity;
  auto acc = run_samples(n, 1, seed, kTagDenominator, workers, [&](Rng& rng, std::vector<double>& out) {
    out[0] = boltzmann(spec.energy(sample_poisson_config(li, rng)));
  });
  McEstimate d = to_estimate(acc[0], seed);
  if (d.mean <= 3.0 * d.std_error) throw SamplingError("gamma_p: denominator estimate is indistinguishable from 0");
  return d;
}

}  // namespace

McEstimate estimate_gamma_p(const EnsembleSpec& spec, int p, const std::vector<Site>& xs,
                            const std::vector<Site>& ys, std::size_t n_samples, std::uint64_t seed,
                            unsigned workers) {
  spec.validate();
  if (p < 1) throw ValidationError("gamma_p: p must be positive");
  if (p > 4) throw ValidationError("gamma_p: p > 4 is unsupported");
  check_tuple(spec, p, xs);
  check_tuple(spec, p, ys);
  const LoopIntensity& li = *spec.intensity;
  const DurationLaw law = spec.open_law();
  const double norm = std::pow(law.normalization(), p);

  std::vector<std::vector<int>> perms;
  std::vector<int> pi(p);
  std::iota(pi.begin(), pi.end(), 0);
  do perms.push_back(pi);
  while (std::next_permutation(pi.begin(), pi.end()));

  auto acc = run_samples(n_samples, 1, seed, kTagNumerator, workers, [&](Rng& rng, std::vector<double>& out) {
    LoopConfig open(p);
    for (int i = 0; i < p; ++i) open[i] = sample_free_walk(spec.torus, xs[i], law.sample(rng), rng);
    double matches = 0.0;
    for (const auto& perm : perms) {
      bool ok = true;
      for (int i = 0; i < p && ok; ++i) ok = open[i].end() == ys[perm[i]];
      if (ok) matches += 1.0;
    }
    // the background is drawn regardless so that the stream layout does not depend on the endpoints
    LoopConfig cfg = sample_poisson_config(li, rng);
    if (matches == 0.0) return;
    cfg.insert(cfg.end(), open.begin(), open.end());
    out[0] = norm * matches * boltzmann(spec.energy(cfg));
  });
  McEstimate num = to_estimate(acc[0], seed);
  McEstimate r = ratio(num, denominator(spec, n_samples, seed, workers));
  r.meta["numerator"] = num.mean;
  r.meta["mass"] = li.mass();
  return r;
}

std::vector<McEstimate> estimate_gamma1_row(const EnsembleSpec& spec, Site x, std::size_t n_samples,
                                            std::uint64_t seed, unsigned workers) {
  spec.validate();
  check_tuple(spec, 1, {x});
  const LoopIntensity& li = *spec.intensity;
  const DurationLaw law = spec.open_law();
  const double norm = law.normalization();
  const std::size_t V = spec.torus.volume();
  auto acc = run_samples(n_samples, V, seed, kTagNumerator, workers, [&](Rng& rng, std::vector<double>& out) {
    Path open = sample_free_walk(spec.torus, x, law.sample(rng), rng);
    LoopConfig cfg = sample_poisson_config(li, rng);
    const Site y = open.end();
    cfg.push_back(std::move(open));
    out[y] = norm * boltzmann(spec.energy(cfg));
  });
  const McEstimate den = denominator(spec, n_samples, seed, workers);
  std::vector<McEstimate> row;
  for (std::size_t y = 0; y < V; ++y) row.push_back(ratio(to_estimate(acc[y], seed), den));
  return row;
}

Kernel free_gas_gamma1(double nu, double kappa, const Torus& torus) {
  if (!(nu > 0.0) || !(kappa * nu > 0.0)) throw ValidationError("free_gas_gamma1: needs κν > 0");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * laplacian_matrix(torus));
  const Eigen::VectorXd a = (nu * (es.eigenvalues().array() - kappa)).exp().matrix();
  if (a.maxCoeff() >= 1.0) throw DivergenceError("free_gas_gamma1: spectral radius >= 1");
  const Eigen::VectorXd g = (a.array() / (1.0 - a.array())).matrix();
  return es.eigenvectors() * g.asDiagonal() * es.eigenvectors().transpose();
}

Kernel free_field_gamma1(double kappa, const Torus& torus) {
  if (!(kappa > 0.0)) throw ValidationError("free_field_gamma1: needs κ > 0");
  const std::size_t V = torus.volume();
  Eigen::MatrixXd A = -0.5 * laplacian_matrix(torus) + kappa * Eigen::MatrixXd::Identity(V, V);
  return A.llt().solve(Eigen::MatrixXd::Identity(V, V));
}

}  // namespace looplab
