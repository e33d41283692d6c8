#pragma once

#include <memory>

#include "looplab/interactions.hpp"

namespace looplab {

enum class EnsembleKind { ginibre, symanzik };

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::ginibre;
  Torus torus{1, 1};
  InteractionParams params;                               // ginibre
  std::shared_ptr<const PeriodizedPotential> classical;   // symanzik, coupling already applied
  double kappa = 1.0;                                     // killing rate of loops and open paths
  std::shared_ptr<const LoopIntensity> intensity;

  // Large-mass parameters imply κ = κ0/ν.
  static EnsembleSpec ginibre(const InteractionParams& params, double kappa);
  static EnsembleSpec largemass(const InteractionParams& params);
  static EnsembleSpec symanzik(std::shared_ptr<const PeriodizedPotential> v, double kappa, double eps);

  void validate() const;
  double energy(const LoopConfig& config) const;
  DurationLaw open_law() const;
};

// 𝒵 = E_Poisson[e^{-V(Φ)}] with Φ ~ Poisson(intensity). Meta: mass, tail, mean_loops, bridge_acceptance.
McEstimate estimate_rel_partition(const EnsembleSpec& spec, std::size_t n_samples, std::uint64_t seed,
                                  unsigned workers = 1);

// (Γ_p)_{x⃗,y⃗} = Σ_π Σ_T e^{-κ|T|} ∫W^T_{πy⃗,x⃗} E[e^{-V(ω⃗ ∪ Φ)}] / E[e^{-V(Φ)}].
// One set of free open paths per sample; all permutations are scored on it.
McEstimate estimate_gamma_p(const EnsembleSpec& spec, int p, const std::vector<Site>& xs,
                            const std::vector<Site>& ys, std::size_t n_samples, std::uint64_t seed,
                            unsigned workers = 1);

// Row y ↦ Γ_1(x, y) from one open path per sample.
std::vector<McEstimate> estimate_gamma1_row(const EnsembleSpec& spec, Site x, std::size_t n_samples,
                                            std::uint64_t seed, unsigned workers = 1);

// Free Ginibre kernel A(I-A)^{-1}, A = e^{ν(Δ/2 - κ)}.
Kernel free_gas_gamma1(double nu, double kappa, const Torus& torus);
// Free Symanzik kernel (-Δ/2 + κ)^{-1}.
Kernel free_field_gamma1(double kappa, const Torus& torus);

}  // namespace looplab
