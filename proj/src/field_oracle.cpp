#include "looplab/field_oracle.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numeric>

namespace looplab {

namespace {
constexpr std::uint64_t kTagZ = 301;
constexpr std::uint64_t kTagNumerator = 302;
constexpr std::uint64_t kTagDenominator = 303;
constexpr std::uint64_t kTagWick = 304;
constexpr std::uint64_t kTagHs = 305;
constexpr std::uint64_t kTagInequality = 320;

void check_potential(const GaussianField& gf, const PeriodizedPotential& vL) {
  if (!(gf.torus == vL.torus)) throw ValidationError("field oracle: torus mismatch");
  if (vL.hard_core()) throw ValidationError("field oracle: hard-core potentials are not supported");
  for (double x : vL.v)
    if (!std::isfinite(x)) throw ValidationError("field oracle: potential must be finite");
}

void check_tuples(const GaussianField& gf, int p, const std::vector<Site>& xs, const std::vector<Site>& ys) {
  if (p < 1) throw ValidationError("field oracle: p must be positive");
  if (xs.size() != static_cast<std::size_t>(p) || ys.size() != static_cast<std::size_t>(p))
    throw ValidationError("field oracle: tuple length differs from p");
  for (Site s : xs)
    if (s >= gf.torus.volume()) throw ValidationError("field oracle: site out of range");
  for (Site s : ys)
    if (s >= gf.torus.volume()) throw ValidationError("field oracle: site out of range");
}

}  // namespace

GaussianField GaussianField::make(const Torus& torus, double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ValidationError("GaussianField: κ must be positive");
  GaussianField g;
  g.torus = torus;
  g.kappa = kappa;
  const std::size_t V = torus.volume();
  const Eigen::MatrixXd A = -0.5 * laplacian_matrix(torus) + kappa * Eigen::MatrixXd::Identity(V, V);
  Eigen::LLT<Eigen::MatrixXd> llt_a(A);
  if (llt_a.info() != Eigen::Success) throw ValidationError("GaussianField: precision matrix is not positive definite");
  g.covariance = llt_a.solve(Eigen::MatrixXd::Identity(V, V));
  g.covariance = 0.5 * (g.covariance + g.covariance.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(g.covariance);
  if (llt.info() != Eigen::Success) throw ValidationError("GaussianField: covariance factorization failed");
  g.factor = llt.matrixL();
  return g;
}

Field GaussianField::sample(Rng& rng) const {
  const std::size_t V = torus.volume();
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  std::vector<double> re(V), im(V);
  for (std::size_t i = 0; i < V; ++i) {
    re[i] = normal(rng);
    im[i] = normal(rng);
  }
  Field phi(V);
  for (std::size_t x = 0; x < V; ++x) {
    double a = 0.0, b = 0.0;
    for (std::size_t k = 0; k <= x; ++k) {
      a += factor(x, k) * re[k];
      b += factor(x, k) * im[k];
    }
    phi[x] = {a, b};
  }
  return phi;
}

double quartic_weight(const Field& phi, const PeriodizedPotential& vL) {
  const Torus& t = vL.torus;
  const std::size_t V = phi.size();
  double acc = 0.0;
  for (Site x = 0; x < V; ++x) {
    const double nx = std::norm(phi[x]);
    if (nx == 0.0) continue;
    for (Site y = 0; y < V; ++y) acc += nx * vL.at(t.diff(x, y)) * std::norm(phi[y]);
  }
  return 0.5 * acc;
}

std::complex<double> field_monomial(const Field& phi, const std::vector<Site>& xs, const std::vector<Site>& ys) {
  std::complex<double> m = 1.0;
  for (Site y : ys) m *= std::conj(phi[y]);
  for (Site x : xs) m *= phi[x];
  return m;
}

McEstimate estimate_Zcl(const GaussianField& gf, const PeriodizedPotential& vL, std::size_t n_samples,
                        std::uint64_t seed, unsigned workers) {
  check_potential(gf, vL);
  if (vL.is_zero()) {
    McEstimate e;
    e.mean = 1.0;
    e.n_samples = n_samples;
    e.seed = seed;
    return e;
  }
  return run_scalar(n_samples, seed, kTagZ, workers,
                    [&](Rng& rng) { return std::exp(-quartic_weight(gf.sample(rng), vL)); });
}

McEstimate estimate_gamma_hat(const GaussianField& gf, const PeriodizedPotential& vL, int p,
                              const std::vector<Site>& xs, const std::vector<Site>& ys, std::size_t n_samples,
                              std::uint64_t seed, std::uint64_t tag, unsigned workers) {
  check_potential(gf, vL);
  check_tuples(gf, p, xs, ys);
  auto acc = run_samples(n_samples, 2, seed, tag, workers, [&](Rng& rng, std::vector<double>& out) {
    const Field phi = gf.sample(rng);
    const std::complex<double> m = field_monomial(phi, xs, ys) * std::exp(-quartic_weight(phi, vL));
    out[0] = m.real();
    out[1] = m.imag();
  });
  McEstimate e = to_estimate(acc[0], seed);
  e.meta["imag"] = acc[1].mean;
  e.meta["imag_std_error"] = acc[1].std_error();
  return e;
}

McEstimate estimate_gamma_cl(const GaussianField& gf, const PeriodizedPotential& vL, int p,
                             const std::vector<Site>& xs, const std::vector<Site>& ys, std::size_t n_samples,
                             std::uint64_t seed, unsigned workers) {
  McEstimate num = estimate_gamma_hat(gf, vL, p, xs, ys, n_samples, seed, kTagNumerator, workers);
  if (vL.is_zero()) return num;
  const McEstimate den = run_scalar(n_samples, seed, kTagDenominator, workers,
                                    [&](Rng& rng) { return std::exp(-quartic_weight(gf.sample(rng), vL)); });
  if (den.mean <= 3.0 * den.std_error) throw SamplingError("gamma_cl: denominator estimate is indistinguishable from 0");
  McEstimate r = ratio(num, den);
  r.meta["imag"] = num.meta["imag"] / den.mean;
  r.meta["numerator"] = num.mean;
  r.meta["denominator"] = den.mean;
  return r;
}

SingleSiteValues quadrature_single_site(double kappa, double w, int p) {
  if (!(kappa > 0.0)) throw ValidationError("quadrature_single_site: κ must be positive");
  if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("quadrature_single_site: w must be finite and >= 0");
  if (p < 0) throw ValidationError("quadrature_single_site: p must be >= 0");
  using boost::math::quadrature::gauss_kronrod;
  auto integrate = [&](int q) {
    double err = 0.0;
    auto f = [&](double s) { return kappa * std::pow(s, q) * std::exp(-kappa * s - 0.5 * w * s * s); };
    const double val = gauss_kronrod<double, 61>::integrate(f, 0.0, std::numeric_limits<double>::infinity(), 15,
                                                           1e-13, &err);
    if (!(err <= 1e-12 * std::abs(val)) && val != 0.0) throw PrecisionError("quadrature_single_site: did not converge");
    return std::pair{val, val != 0.0 ? err / std::abs(val) : 0.0};
  };
  SingleSiteValues out;
  const auto [z, ez] = integrate(0);
  out.z = z;
  if (p == 0) {
    out.gamma = 1.0;
    out.error = ez;
    return out;
  }
  const auto [g, eg] = integrate(p);
  out.gamma = g / z;
  out.error = ez + eg;
  return out;
}

double wick_moment(const Eigen::MatrixXd& C, const std::vector<Site>& xs, const std::vector<Site>& ys) {
  if (xs.size() != ys.size()) throw ValidationError("wick_moment: tuple lengths differ");
  std::vector<int> perm(xs.size());
  std::iota(perm.begin(), perm.end(), 0);
  double acc = 0.0;
  do {
    double term = 1.0;
    for (std::size_t k = 0; k < xs.size(); ++k) term *= C(xs[k], ys[perm[k]]);
    acc += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return acc;
}

WickReport wick_check(const GaussianField& gf, const std::vector<Site>& xs, const std::vector<Site>& ys,
                      std::size_t n_samples, std::uint64_t seed, unsigned workers) {
  const int p = static_cast<int>(xs.size());
  check_tuples(gf, p, xs, ys);
  WickReport r;
  r.exact = wick_moment(gf.covariance, xs, ys);
  r.from_factor = wick_moment(gf.factor * gf.factor.transpose(), xs, ys);
  PeriodizedPotential zero{gf.torus, 0, std::vector<double>(gf.torus.volume(), 0.0)};
  r.mc = estimate_gamma_hat(gf, zero, p, xs, ys, n_samples, seed, kTagWick, workers);
  const bool algebra = std::abs(r.exact - r.from_factor) <= 1e-12 * std::max(1.0, std::abs(r.exact));
  r.pass = algebra && std::abs(r.mc.mean - r.exact) <= 3.0 * r.mc.std_error &&
           std::abs(r.mc.meta.at("imag")) <= 3.0 * std::max(r.mc.meta.at("imag_std_error"), 1e-300);
  return r;
}

HsReport hubbard_stratonovich_check(const PeriodizedPotential& v_pt, const std::vector<double>& f,
                                    std::size_t n_samples, std::uint64_t seed, unsigned workers) {
  const Torus& t = v_pt.torus;
  const std::size_t V = t.volume();
  if (f.size() != V) throw ValidationError("hubbard_stratonovich_check: f has the wrong size");
  if (v_pt.hard_core()) throw ValidationError("hubbard_stratonovich_check: hard-core potential");
  if (!check_positive_type(v_pt).positive)
    throw ValidationError("hubbard_stratonovich_check: potential is not of positive type");
  Eigen::MatrixXd Vm(V, V);
  for (Site x = 0; x < V; ++x)
    for (Site y = 0; y < V; ++y) Vm(x, y) = v_pt.at(t.diff(x, y));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Vm);
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd B = es.eigenvectors() * root.asDiagonal();
  const Eigen::Map<const Eigen::VectorXd> fv(f.data(), static_cast<Eigen::Index>(V));

  HsReport r;
  const double quad = fv.dot(Vm * fv);
  r.exact = std::exp(-0.5 * quad);
  r.deterministic_error = std::abs(r.exact - std::exp(-0.5 * (B.transpose() * fv).squaredNorm()));
  auto acc = run_samples(n_samples, 2, seed, kTagHs, workers, [&](Rng& rng, std::vector<double>& out) {
    std::normal_distribution<double> normal;
    Eigen::VectorXd g(V);
    for (std::size_t i = 0; i < V; ++i) g[i] = normal(rng);
    const double phase = fv.dot(B * g);
    out[0] = std::cos(phase);
    out[1] = std::sin(phase);
  });
  r.re = to_estimate(acc[0], seed);
  r.im = to_estimate(acc[1], seed);
  auto close = [](double diff, double se) { return se > 0.0 ? std::abs(diff) <= 3.0 * se : std::abs(diff) <= 1e-12; };
  r.pass = r.deterministic_error <= 1e-12 && close(r.re.mean - r.exact, r.re.std_error) &&
           close(r.im.mean, r.im.std_error);
  return r;
}

CorrelationReport correlation_inequality_check(const GaussianField& gf, const PeriodizedPotential& vL,
                                               const std::vector<double>& lambdas, int p,
                                               const std::vector<Site>& xs, const std::vector<Site>& ys,
                                               std::size_t n_samples, std::uint64_t seed, unsigned workers) {
  check_potential(gf, vL);
  check_tuples(gf, p, xs, ys);
  if (!check_positive_type(vL).positive)
    throw ValidationError("correlation_inequality_check: potential is not of positive type");
  CorrelationReport rep;
  rep.gaussian = wick_moment(gf.covariance, xs, ys);
  rep.pass = true;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] >= 0.0)) throw ValidationError("correlation_inequality_check: λ must be >= 0");
    CorrelationRow row;
    row.lambda = lambdas[i];
    row.estimate = estimate_gamma_hat(gf, scaled(vL, lambdas[i]), p, xs, ys, n_samples, seed, kTagInequality + i,
                                      workers);
    const double se = row.estimate.std_error;
    row.lower_ok = row.estimate.mean >= -3.0 * se;
    row.upper_ok = row.estimate.mean <= rep.gaussian + 3.0 * se;
    rep.pass = rep.pass && row.lower_ok && row.upper_ok;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace looplab
