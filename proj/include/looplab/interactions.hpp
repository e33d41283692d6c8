#pragma once

#include <functional>

#include "looplab/paths.hpp"

namespace looplab {

enum class Regime { meanfield, generic, largemass };

struct InteractionParams {
  double nu = 1.0;
  double lambda = 0.0;
  double kappa0 = 0.0;  // large-mass mode only
  Regime regime = Regime::generic;
  std::shared_ptr<const PeriodizedPotential> potential;

  static InteractionParams meanfield(double nu, std::shared_ptr<const PeriodizedPotential> v);
  static InteractionParams generic(double nu, double lambda, std::shared_ptr<const PeriodizedPotential> v);
  static InteractionParams largemass(double nu, double kappa0, std::shared_ptr<const PeriodizedPotential> v);
  void validate() const;
};

// ∫∫ v(ω(t) - ω̃(t̃)) dt dt̃ via constant segments.
double v_cl_pair(const Path& a, const Path& b, const PeriodizedPotential& vL);

// (λ/ν) Σ_{r,s} ∫_0^ν v(ω(r+t) - ω̃(s+t)) dt over windows r, s ∈ νN below T, T̃.
double v_ginibre_pair(const Path& a, const Path& b, const InteractionParams& params);

// (1/ν) Σ_{r≠s} ∫_0^ν v(ω(t+r) - ω(t+s)) dt.
double v_ginibre_self_offdiag(const Path& a, const InteractionParams& params);

using PairFn = std::function<double(const Path&, const Path&)>;

// ½ Σ_{i,j} pair(ω_i, ω_j) including i = j.
double v_total(const LoopConfig& config, const PairFn& pair);

// ½Σ_{i≠j} 𝒱^{ν,1} + ½Σ_i 𝒱̃ + v(0)|T|/(2ν) 1{R=0}.
double v_total_largemass(const LoopConfig& config, const InteractionParams& params);

// R=0: ½Σ_{i,j} k_i k_j v(x_i-x_j). R=1: ½Σ_{i≠j} v(x_i-x_j) if k = 1 and sites distinct, else +inf.
double v_lm(const std::vector<int>& k, const std::vector<Site>& x, const PeriodizedPotential& vL);

// Windowed integral over [0,ν) of v(ω(r+t) - ω̃(s+t)), exact.
double window_overlap(const Path& a, std::size_t r, const Path& b, std::size_t s, double nu,
                      const PeriodizedPotential& vL);

std::size_t window_count(const Path& p, double nu);

// Fast total energies for whole configurations (used by the samplers).
// Symanzik: ½ Σ_{x,y} τ(x) v(x-y) τ(y) with τ the summed local times.
double energy_cl(const LoopConfig& config, const PeriodizedPotential& vL);
// Ginibre and large-mass: sweep over the phase t ∈ [0,ν) of the aligned windows.
// Equals v_total with v_ginibre_pair (generic/meanfield) or v_total_largemass.
double energy_ginibre(const LoopConfig& config, const InteractionParams& params);

// Convenience: concatenation of two configurations.
LoopConfig join(const LoopConfig& a, const LoopConfig& b);

}  // namespace looplab
