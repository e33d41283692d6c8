#pragma once

#include <iosfwd>
#include <map>

#include "looplab/interactions.hpp"

namespace looplab {

// n-particle product basis Λ^n; coincident tuples are dropped under a hard core.
struct ProductSpace {
  Torus torus{1, 1};
  int n = 0;
  bool hard_core = false;
  std::vector<std::vector<Site>> states;
  std::map<std::vector<Site>, std::size_t> index;
  std::size_t dim() const { return states.size(); }
};
ProductSpace make_product_space(const Torus& torus, int n, bool hard_core);

// Symmetric sector with n particles in the occupation basis |N⟩ (normalized symmetric states).
struct OccupationSector {
  Torus torus{1, 1};
  int n = 0;
  bool hard_core = false;
  std::vector<std::vector<int>> states;  // occupation vectors
  std::map<std::vector<int>, std::size_t> index;
  std::size_t dim() const { return states.size(); }
};
OccupationSector make_sector(const Torus& torus, int n, bool hard_core);

// H = -(ν/2) Σ_i Δ_i + (λ/2) Σ_{i,j} v(x_i - x_j); under a hard core (large-mass R = 1) the i = j
// terms are dropped and coincident configurations are excluded from the basis.
Eigen::MatrixXd hamiltonian(const ProductSpace& space, const InteractionParams& params);
Eigen::MatrixXd hamiltonian(const OccupationSector& sector, const InteractionParams& params);
// P⁺ on the (masked) product basis.
Eigen::MatrixXd symmetrizer(const ProductSpace& space);

struct GrandCanonicalResult {
  double xi = 1.0;        // Ξ
  double xi0 = 1.0;       // ideal gas Ξ at λ = 0
  double z = 1.0;         // Ξ/Ξ₀
  double log_z = 0.0;
  std::vector<double> traces;  // tr e^{-(H_n + κνn)} P⁺, n = 0..n_max
  int n_max = 0;
  double tail_bound = 0.0;     // bound on the omitted sectors, relative to Ξ
};

// κ is the killing rate: the chemical weight per particle is e^{-κν}.
GrandCanonicalResult grand_partition(const InteractionParams& params, double kappa, double tol = 1e-10);
// Γ_p as a |Λ|^p x |Λ|^p kernel (see tuple_index).
Kernel reduced_density_matrix(int p, const InteractionParams& params, double kappa, double tol = 1e-10);

// Product-basis routes with a fixed sector cap (cross-checks on tiny instances).
GrandCanonicalResult grand_partition_product(const InteractionParams& params, double kappa, int n_max);
Kernel reduced_density_matrix_product(int p, const InteractionParams& params, double kappa, int n_max);

// log Ξ₀ = -Σ_ξ log(1 - e^{-νλ_ξ - κν}).
double ideal_gas_log_xi(const Torus& torus, double nu, double kappa);

// g = log 𝒵 / |Λ|.
double gibbs_potential(const InteractionParams& params, double kappa, double tol = 1e-10);

// sup_{x⃗ ∈ B^p} Σ_{y⃗ ∈ B^p} |K(x⃗, y⃗)| with B the centered sub-box of side L0.
double kernel_norm(const Kernel& K, int p, const Torus& torus, int L0);
std::vector<Site> centered_box(const Torus& torus, int L0);

struct FeynmanKacReport {
  Eigen::MatrixXd exact;  // (e^{t(Δ/2 - V)})_{y,x}, indexed (x, y)
  Eigen::MatrixXd mc;
  Eigen::MatrixXd std_error;
  double max_z = 0.0;
  bool pass = false;
};
FeynmanKacReport feynman_kac_check(const Torus& torus, const std::vector<double>& v_site, double t,
                                   std::size_t n_samples, std::uint64_t seed, unsigned workers = 1);

// CSV rows: x_1..x_p, y_1..y_p, value (site indices).
void write_kernel_csv(std::ostream& out, const Kernel& K, int p, std::size_t volume);

}  // namespace looplab
