#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "looplab/lattice.hpp"

namespace looplab {

struct Jump {
  double t;
  Site site;  // position from t on
};

// Right-continuous step path on [0, T].
struct Path {
  Site start = 0;
  double T = 0.0;
  std::vector<Jump> jumps;

  Site end() const { return jumps.empty() ? start : jumps.back().site; }
  bool closed() const { return end() == start; }
};

using LoopConfig = std::vector<Path>;

Path constant_path(Site x, double T);

Site position(const Path& path, double t);
double local_time(const Path& path, Site site);
// Adds the local times of `path` into `acc` (size = volume).
void add_local_times(const Path& path, std::vector<double>& acc);

// Walk with generator Δ/2: total jump rate d, uniform over the 2d signed steps.
Path sample_free_walk(const Torus& torus, Site x, double T, Rng& rng);

std::string to_line(const Path& path);
Path from_line(const std::string& line);

// Law of open-path durations: P(T = νk) ∝ e^{-κνk} on νN*, or Exp(κ) on (0,∞).
struct DurationLaw {
  enum class Kind { grid, exponential } kind = Kind::grid;
  double nu = 1.0;
  double kappa = 1.0;

  static DurationLaw ginibre(double nu, double kappa);
  static DurationLaw symanzik(double kappa);
  // Total weight: sum_{k>=1} e^{-κνk} or ∫ e^{-κT} dT.
  double normalization() const;
  double sample(Rng& rng) const;
};

struct WeightedSample {
  double value = 0.0;          // 1{end = y} f(ω)
  double normalization = 0.0;  // of the duration law
  Path path;
};

// E[value] * normalization = Σ_T (or ∫dT) e^{-κT} ∫ W^T_{y,x}(dω) f(ω).
WeightedSample open_path_weighted_sample(const Torus& torus, Site x, Site y, const DurationLaw& law, Rng& rng,
                                         const std::function<double(const Path&)>& f = {});

// Single-loop measure: Ginibre ν Σ_{T∈νN*} e^{-κT}/T W^T, or Symanzik
// ∫_ε^∞ e^{-κT}/T W^T dT. Durations truncated where the tail mass < 1e-12 m.
class LoopIntensity {
 public:
  enum class Kind { ginibre, symanzik };

  // max_k > 0 cuts the duration support to {ν, ..., max_k ν} (the tail is then reported, not added).
  static std::shared_ptr<LoopIntensity> ginibre(const Torus& torus, double nu, double kappa, std::size_t max_k = 0);
  static std::shared_ptr<LoopIntensity> symanzik(const Torus& torus, double kappa, double eps);

  Kind kind() const { return kind_; }
  const Torus& torus() const { return torus_; }
  double mass() const { return mass_; }
  double nu() const { return nu_; }
  double kappa() const { return kappa_; }
  double eps() const { return eps_; }
  double truncated_tail() const { return tail_; }

  // Grid: pmf over k = 1..K (T = kν). Continuum: cell edges and masses.
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& edges() const { return edges_; }

  double density(double T) const;  // e^{-κT} ψ^T(0) |Λ| / T
  double sample_duration(Rng& rng) const;
  Path sample(Rng& rng) const;

  // Bridge rejection statistics accumulated by this thread's calls (diagnostics).
  static thread_local std::size_t attempts;
  static thread_local std::size_t accepted;

 private:
  LoopIntensity(const Torus& torus) : torus_(torus), hk_(torus) {}
  Kind kind_ = Kind::ginibre;
  Torus torus_;
  HeatKernel hk_;
  double nu_ = 0.0, kappa_ = 0.0, eps_ = 0.0;
  double mass_ = 0.0, tail_ = 0.0;
  std::vector<double> weights_;  // unnormalized per k or per cell
  std::vector<double> cdf_;      // normalized cumulative
  std::vector<double> edges_;
};

// Bridge of duration T from x to x by rejection; throws SamplingError after max_attempts.
Path sample_bridge(const Torus& torus, Site x, double T, Rng& rng, std::size_t max_attempts = 1000000);

// Poisson configuration from the intensity.
LoopConfig sample_poisson_config(const LoopIntensity& intensity, Rng& rng);

}  // namespace looplab
