#pragma once

#include <optional>

#include "looplab/loop_mc.hpp"

namespace looplab {

// Simple graph on [n] with edges stored as a bitmask over pair indices (see pair_index).
struct Graph {
  int n = 0;
  std::uint32_t mask = 0;

  std::vector<std::pair<int, int>> edges() const;
  std::size_t edge_count() const;
  bool has(int i, int j) const;
  bool connected() const;
  std::vector<int> degrees() const;
  bool operator==(const Graph& o) const { return n == o.n && mask == o.mask; }
};

inline constexpr int kMaxGraphVertices = 7;

// Index of {i, j}, i < j, in lexicographic order of (i, j).
int pair_index(int n, int i, int j);
std::pair<int, int> pair_of(int n, int index);
Graph make_graph(int n, const std::vector<std::pair<int, int>>& edges);

// Exhaustive enumerations (n <= 7, BudgetError above).
std::vector<Graph> connected_graphs(int n);
std::vector<Graph> trees(int n);
std::vector<Graph> trees_with_degrees(const std::vector<int>& degrees);

// (n-2)!/Π(δ_i - 1)! for feasible degree sequences, 0 otherwise; 1 for n = 1, δ = (0).
std::uint64_t tree_count(const std::vector<int>& degrees);

// Strict total order on the pairs of [n]: rank[pair_index] (smaller rank = smaller edge).
struct EdgeOrder {
  int n = 0;
  std::vector<int> rank;
  static EdgeOrder lexicographic(int n);
  static EdgeOrder reverse_lexicographic(int n);
  static EdgeOrder from_sequence(int n, const std::vector<std::pair<int, int>>& increasing);
};

// Forest growth: repeatedly add the smallest edge of G that closes no cycle.
Graph kruskal(const Graph& g, const EdgeOrder& order);

struct BracketReport {
  Graph maximal;                 // union of the preimage of T
  Graph closed_form;             // T plus every edge that is the largest on its cycle through T
  std::size_t preimage_size = 0;
  bool pass = false;             // preimage == {G : T ⊆ G ⊆ M(T)} and M(T) == closed_form
};
BracketReport kruskal_preimage_bracket(const Graph& tree, const EdgeOrder& order);

// (1/n!) Σ_{G connected} Π_{ij ∈ G} ζ_ij, n <= 6.
double ursell(const Eigen::MatrixXd& zeta);

struct TreeBoundReport {
  double ursell = 0.0;
  double bound = 0.0;  // (1/n!) Σ_T Π_T |ζ|
  double resummed = std::nan("");  // (1/n!) Σ_T Π_T ζ e^{-Σ_{M(T)\T} a}, when a is supplied
  bool pass = false;
};
// ζ must lie in [-1, 0]. With `a` given, ζ_ij = e^{-a_ij} - 1 is required and the Kruskal
// resummation identity is checked to 1e-12 (relative to the bound).
TreeBoundReport tree_bound_check(const Eigen::MatrixXd& zeta, const std::optional<Eigen::MatrixXd>& a = std::nullopt);

// Number of children of each vertex when the tree is rooted at `root`.
std::vector<int> children_counts(const Graph& tree, int root);

// Set partitions of {0..p-1}.
std::vector<std::vector<std::vector<int>>> set_partitions(int p);

struct ExpansionTerm {
  int order = 0;
  McEstimate estimate;
};

struct XEstimate {
  std::vector<ExpansionTerm> terms;  // orders max(p,1)..n_max; for p = 0 the free value is subtracted
  double sum = 0.0;
  double std_error = 0.0;
  McEstimate next_order_bound;       // tree-bound magnitude of order n_max + 1
  double mass = 0.0;                 // total mass of the free loop law
};

// Truncated X(ω⃗) for fixed paths ω⃗ (p = size). For p = 0 returns X - X⁰. Pair factor
// ζ = e^{-𝒱} - 1, loops weighted by e^{-𝒱(ω,ω)/2}.
XEstimate estimate_X(const EnsembleSpec& spec, const LoopConfig& fixed, int n_max, std::size_t n_samples,
                     std::uint64_t seed, unsigned workers = 1);

// Γ_p (p <= 2) from the expansion truncated at n_max; meta["remainder"] carries the order n_max+1 bound.
McEstimate gamma_via_expansion(const EnsembleSpec& spec, int p, const std::vector<Site>& xs,
                               const std::vector<Site>& ys, int n_max, std::size_t n_samples, std::uint64_t seed,
                               unsigned workers = 1);

// Mayer factor e^{-𝒱(a,b)} - 1 used by the expansion.
double mayer_factor(const Path& a, const Path& b, const InteractionParams& params);
double self_weight(const Path& a, const InteractionParams& params);

struct RiemannRow {
  double kappa = 0, nu = 0;
  int q = 0;
  double lhs = 0, rhs = 0;  // ν Σ e^{-κT} T^q and q!/κ^{q+1}
};
struct RiemannReport {
  std::vector<RiemannRow> rows;
  double constant = 0.0;  // max lhs/rhs
};
RiemannReport riemann_sum_bound_check(const std::vector<double>& kappas, const std::vector<double>& nu_factors,
                                      const std::vector<int>& qs);

struct IntegrationRow {
  int q = 0;
  McEstimate lhs[4];
  double rhs[4] = {0, 0, 0, 0};
};
struct IntegrationReport {
  std::vector<IntegrationRow> rows;
  double constant[4] = {0, 0, 0, 0};  // max over q of lhs/rhs (item (iii) skips q = 0)
};
// MC left-hand sides of the four vertex-integration estimates against a reference loop.
IntegrationReport integration_bound_check(const EnsembleSpec& spec, const Path& reference, Site x,
                                          const std::vector<int>& qs, std::size_t n_samples, std::uint64_t seed,
                                          unsigned workers = 1);

}  // namespace looplab
