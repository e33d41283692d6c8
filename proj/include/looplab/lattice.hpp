#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "looplab/core.hpp"

namespace looplab {

using Site = std::uint32_t;
using Coord = std::vector<int>;

// Periodic cube [-L/2, L/2)^d of Z^d. Site index = sum_j (x_j mod L) L^j,
// so index 0 is the origin.
class Torus {
 public:
  Torus(int d, int L);

  int dim() const { return d_; }
  int side() const { return L_; }
  std::size_t volume() const { return volume_; }

  Coord coords(Site s) const;          // centered representative
  Site index(const Coord& x) const;    // any integer vector, reduced mod L
  Site step(Site s, int dir) const { return steps_[s * 2 * d_ + dir]; }  // dir in [0, 2d)
  int num_steps() const { return 2 * d_; }
  Site diff(Site a, Site b) const { return diff_[a * volume_ + b]; }  // a - b
  Site neg(Site a) const { return diff_[a]; }                         // 0 - a
  double norm(Site s) const;           // periodic Euclidean norm |x|_L

  bool operator==(const Torus& o) const { return d_ == o.d_ && L_ == o.L_; }

 private:
  int d_, L_;
  std::size_t volume_;
  std::vector<Site> steps_;
  std::vector<Site> diff_;
};

// (Δf)(x) = sum over 2d signed steps e of f(x+e) - f(x).
Eigen::MatrixXd laplacian_matrix(const Torus& torus);

// Rates d - sum_j cos(xi_j) over all Fourier modes, in site-index order of k.
std::vector<double> laplacian_rates(const Torus& torus);

class HeatKernel {
 public:
  explicit HeatKernel(const Torus& torus) : torus_(torus) {}
  const Torus& torus() const { return torus_; }
  // psi^{L,t}(x) for all sites.
  std::vector<double> table(double t) const;
  double value(double t, Site x) const;
  double at_origin(double t) const;

 private:
  Torus torus_;
};

// One-dimensional torus kernel L^{-1} sum_k e^{-t(1-cos 2πk/L)} cos(2πk u/L).
double heat_kernel_1d(int L, double t, int u);

// psi^{inf,t}(x) by adaptive quadrature over [-π,π)^d; throws PrecisionError
// when the error estimate stays above tail_tol.
double heat_kernel_infinite(int d, double t, const Coord& x, double tail_tol = 1e-13);
// Same quantity as a product of e^{-t} I_{|x_j|}(t).
double heat_kernel_infinite_bessel(int d, double t, const Coord& x);

// Sum over k in (LZ)^d with |k_j| <= K L of psi^{inf,t}(x+k).
double periodized_infinite_kernel(const Torus& torus, double t, Site x, int K, bool use_bessel);

struct PotentialSpec {
  int d = 1;
  int R = 0;
  // Finite-support part (symmetric, nonnegative); x = 0 excluded when R = 1.
  std::map<Coord, double> entries;
  // Optional summable profile used instead of entries when set.
  std::function<double(const Coord&)> profile;

  double operator()(const Coord& x) const;  // +inf on the hard core
  static PotentialSpec on_site(int d, double w);
};

// p-point kernel: rows x⃗, columns y⃗, tuple index Σ_i x_i |Λ|^i.
using Kernel = Eigen::MatrixXd;
std::size_t tuple_index(const std::vector<Site>& xs, std::size_t volume);
std::vector<Site> tuple_sites(std::size_t index, int p, std::size_t volume);

PotentialSpec load_potential_json(const std::string& text);
PotentialSpec load_potential_file(const std::string& path);

struct PeriodizedPotential {
  Torus torus;
  int R = 0;
  std::vector<double> v;  // v^L(x), +inf at the origin when R = 1
  double at(Site x) const { return v[x]; }
  bool hard_core() const { return R == 1; }
  double v0_finite() const { return R == 1 ? 0.0 : v[0]; }
  double l1_finite() const;  // l1 norm of v^L 1{|x|>=R}
  bool is_zero() const;
  // Nonzero finite entries excluding the origin: (offset, value).
  std::vector<std::pair<Site, double>> off_origin() const;
};

PeriodizedPotential periodize_potential(const PotentialSpec& spec, const Torus& torus);
PeriodizedPotential scaled(const PeriodizedPotential& p, double factor);

// ṽ = v 1{|x| >= R}.
PeriodizedPotential v_tilde(const PeriodizedPotential& p);

struct PositiveTypeReport {
  bool positive = false;
  double min_coefficient = 0.0;
};
PositiveTypeReport check_positive_type(const PeriodizedPotential& vL);

}  // namespace looplab
