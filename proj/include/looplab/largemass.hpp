#pragma once

#include "looplab/interactions.hpp"

namespace looplab {

// Infinite-mass gas of weighted particles (k, x): single-particle weight e^{-κ0 k}/k, pair
// energy k k̃ v(x - x̃); under a hard core only k = 1 at distinct sites survives.
struct LmParams {
  double kappa0 = 1.0;
  std::shared_ptr<const PeriodizedPotential> potential;
  double tol = 1e-12;  // relative truncation tolerance
  // Labeled-sum route only: cut-offs on k and on the number of particles (0 = choose from tol).
  int k_max = 0;
  int n_max = 0;

  void validate() const;
};

struct LmPartition {
  double relative = 1.0;    // 𝒵^lm
  double numerator = 1.0;   // unnormalized Z^lm(∅)
  double normalizer = 1.0;  // exp(|Λ| Σ_k e^{-κ0 k}/k) = (1 - e^{-κ0})^{-|Λ|}
  double tail = 0.0;        // bound on the omitted part, relative to the numerator
  int cutoff = 0;           // occupation cut-off per site, or k_max on the labeled route
};

// Occupation route: configurations are grouped by total site occupations K ∈ N^Λ, each carrying
// weight e^{-κ0|K|} e^{-½ Σ K(x) v(x-y) K(y)} (hard core: K ∈ {0,1}^Λ, diagonal dropped).
LmPartition z_lm(const LmParams& params);
// Γ_p^lm(x⃗, y⃗) = #{π : πy⃗ = x⃗} · E[Π_x C(K(x), m_x)], m_x the multiplicity of x in x⃗.
double gamma_lm(const LmParams& params, int p, const std::vector<Site>& xs, const std::vector<Site>& ys);
Kernel gamma_lm_kernel(const LmParams& params, int p);
// log 𝒵^lm / |Λ|.
double gibbs_potential_lm(const LmParams& params);

// Labeled route: literal truncated sums over n, k⃗ ≤ k_max and x⃗ (small instances only).
LmPartition z_lm_labeled(const LmParams& params);
double gamma_lm_labeled(const LmParams& params, int p, const std::vector<Site>& xs, const std::vector<Site>& ys);

struct WeightedParticle {
  int k = 1;
  Site x = 0;
  bool operator==(const WeightedParticle& o) const { return k == o.k && x == o.x; }
};
// Constant loops of duration kν <-> (k, x).
std::vector<WeightedParticle> weighted_particle_view(const LoopConfig& config, double nu);
LoopConfig loops_from_particles(const std::vector<WeightedParticle>& particles, double nu);
// V^lm((k,x),(k̃,x̃)) = k k̃ v(x - x̃).
double lm_pair_energy(const WeightedParticle& a, const WeightedParticle& b, const PeriodizedPotential& vL);

}  // namespace looplab
