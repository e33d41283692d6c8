#pragma once

#include <complex>

#include "looplab/interactions.hpp"

namespace looplab {

using Field = std::vector<std::complex<double>>;

// Complex Gaussian field with E[φ̄(x)φ(y)] = C(x,y), C = (-Δ/2 + κ)^{-1}, sampled as φ = F z with
// F the lower Cholesky factor of C and z a standard complex normal vector (E|z_i|² = 1).
struct GaussianField {
  Torus torus{1, 1};
  double kappa = 1.0;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd factor;

  static GaussianField make(const Torus& torus, double kappa);
  Field sample(Rng& rng) const;
};

// W(φ) = ½ Σ_{x,y} |φ(x)|² v(x-y) |φ(y)|².
double quartic_weight(const Field& phi, const PeriodizedPotential& vL);

// Π φ̄(y_i) Π φ(x_i).
std::complex<double> field_monomial(const Field& phi, const std::vector<Site>& xs, const std::vector<Site>& ys);

McEstimate estimate_Zcl(const GaussianField& gf, const PeriodizedPotential& vL, std::size_t n_samples,
                        std::uint64_t seed, unsigned workers = 1);

// Normalized correlation E[monomial e^{-W}] / E[e^{-W}] (real part; imaginary part in meta["imag"]).
McEstimate estimate_gamma_cl(const GaussianField& gf, const PeriodizedPotential& vL, int p,
                             const std::vector<Site>& xs, const std::vector<Site>& ys, std::size_t n_samples,
                             std::uint64_t seed, unsigned workers = 1);

// Unnormalized E[monomial e^{-W}].
McEstimate estimate_gamma_hat(const GaussianField& gf, const PeriodizedPotential& vL, int p,
                              const std::vector<Site>& xs, const std::vector<Site>& ys, std::size_t n_samples,
                              std::uint64_t seed, std::uint64_t tag, unsigned workers = 1);

struct SingleSiteValues {
  double z = 1.0;
  double gamma = 1.0;  // Γ_p at the site
  double error = 0.0;  // quadrature error estimate (relative)
};
// One site: s = |φ|² ~ Exp(κ), Z = κ∫ e^{-κs - ws²/2} ds, Γ_p = κ∫ s^p e^{-κs - ws²/2} ds / Z.
SingleSiteValues quadrature_single_site(double kappa, double w, int p);

// Σ_π Π_k C(x_k, y_π(k)).
double wick_moment(const Eigen::MatrixXd& C, const std::vector<Site>& xs, const std::vector<Site>& ys);

struct WickReport {
  double exact = 0.0;
  double from_factor = 0.0;  // same permanent with C rebuilt as F Fᵀ
  McEstimate mc;
  bool pass = false;
};
WickReport wick_check(const GaussianField& gf, const std::vector<Site>& xs, const std::vector<Site>& ys,
                      std::size_t n_samples, std::uint64_t seed, unsigned workers = 1);

struct HsReport {
  double exact = 1.0;              // e^{-½⟨f, v f⟩}
  double deterministic_error = 0;  // |e^{-½⟨f,vf⟩} - e^{-½|Bᵀf|²}| with B Bᵀ = v the sampler factor
  McEstimate re, im;               // MC of E[cos⟨f,σ⟩], E[sin⟨f,σ⟩]
  bool pass = false;
};
// Real Gaussian σ with covariance v(x-y); v must be of positive type.
HsReport hubbard_stratonovich_check(const PeriodizedPotential& v_pt, const std::vector<double>& f,
                                    std::size_t n_samples, std::uint64_t seed, unsigned workers = 1);

struct CorrelationRow {
  double lambda = 0.0;
  McEstimate estimate;  // unnormalized Γ̂ at λ
  bool lower_ok = false;
  bool upper_ok = false;
};
struct CorrelationReport {
  double gaussian = 0.0;  // Γ̂ at λ = 0, exact Wick value
  std::vector<CorrelationRow> rows;
  bool pass = false;
};
// Checks 0 ≤ Γ̂^λ ≤ Γ̂^0 within 3σ for each λ (fresh samples per λ).
CorrelationReport correlation_inequality_check(const GaussianField& gf, const PeriodizedPotential& vL,
                                               const std::vector<double>& lambdas, int p,
                                               const std::vector<Site>& xs, const std::vector<Site>& ys,
                                               std::size_t n_samples, std::uint64_t seed, unsigned workers = 1);

}  // namespace looplab
