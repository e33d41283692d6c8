#include "looplab/cluster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace looplab {

namespace {

constexpr std::uint64_t kTagOrder = 400;
constexpr std::uint64_t kTagBound = 450;
constexpr std::uint64_t kTagGamma = 460;
constexpr std::uint64_t kTagIntegration = 500;

int pair_count(int n) { return n * (n - 1) / 2; }

void check_n(int n) {
  if (n < 1) throw ValidationError("graph enumeration: n must be positive");
  if (n > kMaxGraphVertices) throw BudgetError("graph enumeration: n above the enumeration budget");
}

bool mask_connected(int n, std::uint32_t mask) {
  std::uint32_t seen = 1, frontier = 1;
  while (frontier) {
    std::uint32_t next = 0;
    for (int v = 0; v < n; ++v) {
      if (!(frontier >> v & 1u)) continue;
      for (int u = 0; u < n; ++u)
        if (u != v && (mask >> pair_index(n, std::min(u, v), std::max(u, v)) & 1u)) next |= 1u << u;
    }
    frontier = next & ~seen;
    seen |= next;
  }
  return seen == (1u << n) - 1;
}

double factorial(int n) { return std::tgamma(n + 1.0); }

// Connected graphs and trees per n, each with its edge list, computed once.
struct GraphTable {
  std::vector<Graph> graphs;
  std::vector<std::vector<std::pair<int, int>>> edges;
};

const GraphTable& connected_table(int n) {
  static const auto tables = [] {
    std::vector<GraphTable> t(7);
    for (int k = 1; k <= 6; ++k)
      for (const Graph& g : connected_graphs(k)) {
        t[k].graphs.push_back(g);
        t[k].edges.push_back(g.edges());
      }
    return t;
  }();
  if (n < 1 || n > 6) throw BudgetError("ursell: n must be in 1..6");
  return tables[n];
}

struct TreeTable {
  std::vector<std::vector<std::pair<int, int>>> edges;
  std::vector<std::vector<std::pair<int, int>>> extra;  // M(T) \ T under the lexicographic order
};

Graph bracket_closed_form(const Graph& tree, const EdgeOrder& order);

const TreeTable& tree_table(int n) {
  static const auto tables = [] {
    std::vector<TreeTable> t(8);
    for (int k = 1; k <= 7; ++k) {
      const EdgeOrder order = EdgeOrder::lexicographic(k);
      for (const Graph& tr : trees(k)) {
        t[k].edges.push_back(tr.edges());
        const Graph m = bracket_closed_form(tr, order);
        t[k].extra.push_back(Graph{k, m.mask & ~tr.mask}.edges());
      }
    }
    return t;
  }();
  check_n(n);
  return tables[n];
}

// Pair indices of the edges on the tree path between a and b.
std::vector<int> tree_path_edges(const Graph& tree, int a, int b) {
  const int n = tree.n;
  std::vector<int> parent(n, -1);
  std::vector<int> stack{a};
  parent[a] = a;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u = 0; u < n; ++u)
      if (u != v && parent[u] < 0 && tree.has(u, v)) {
        parent[u] = v;
        stack.push_back(u);
      }
  }
  std::vector<int> out;
  for (int v = b; v != a; v = parent[v]) out.push_back(pair_index(n, std::min(v, parent[v]), std::max(v, parent[v])));
  return out;
}

Graph bracket_closed_form(const Graph& tree, const EdgeOrder& order) {
  const int n = tree.n;
  Graph m = tree;
  for (int e = 0; e < pair_count(n); ++e) {
    if (tree.mask >> e & 1u) continue;
    const auto [a, b] = pair_of(n, e);
    bool largest = true;
    for (int f : tree_path_edges(tree, a, b)) largest = largest && order.rank[f] < order.rank[e];
    if (largest) m.mask |= 1u << e;
  }
  return m;
}

}  // namespace

int pair_index(int n, int i, int j) {
  if (!(0 <= i && i < j && j < n)) throw ValidationError("pair_index: need 0 <= i < j < n");
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

std::pair<int, int> pair_of(int n, int index) {
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (pair_index(n, i, j) == index) return {i, j};
  throw ValidationError("pair_of: index out of range");
}

Graph make_graph(int n, const std::vector<std::pair<int, int>>& edges) {
  check_n(n);
  Graph g{n, 0};
  for (auto [i, j] : edges) {
    if (i == j) throw ValidationError("graph: self-loops are not allowed");
    const int e = pair_index(n, std::min(i, j), std::max(i, j));
    if (g.mask >> e & 1u) throw ValidationError("graph: duplicate edge");
    g.mask |= 1u << e;
  }
  return g;
}

std::vector<std::pair<int, int>> Graph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int e = 0; e < pair_count(n); ++e)
    if (mask >> e & 1u) out.push_back(pair_of(n, e));
  return out;
}

std::size_t Graph::edge_count() const { return static_cast<std::size_t>(std::popcount(mask)); }
bool Graph::has(int i, int j) const {
  if (i == j) return false;
  return mask >> pair_index(n, std::min(i, j), std::max(i, j)) & 1u;
}
bool Graph::connected() const { return mask_connected(n, mask); }

std::vector<int> Graph::degrees() const {
  std::vector<int> d(n, 0);
  for (auto [i, j] : edges()) {
    ++d[i];
    ++d[j];
  }
  return d;
}

std::vector<Graph> connected_graphs(int n) {
  check_n(n);
  std::vector<Graph> out;
  const std::uint32_t top = 1u << pair_count(n);
  for (std::uint32_t m = 0; m < top; ++m)
    if (mask_connected(n, m)) out.push_back(Graph{n, m});
  return out;
}

std::vector<Graph> trees(int n) {
  check_n(n);
  if (n == 1) return {Graph{1, 0}};
  const int k = n - 1, total = pair_count(n);
  std::vector<Graph> out;
  // masks with exactly n-1 bits, in increasing order
  for (std::uint32_t m = (1u << k) - 1; m < (1u << total);) {
    if (mask_connected(n, m)) out.push_back(Graph{n, m});
    const std::uint32_t c = m & -m, r = m + c;
    m = (((r ^ m) >> 2) / c) | r;
  }
  return out;
}

std::vector<Graph> trees_with_degrees(const std::vector<int>& degrees) {
  const int n = static_cast<int>(degrees.size());
  std::vector<Graph> out;
  for (const Graph& t : trees(n))
    if (t.degrees() == degrees) out.push_back(t);
  return out;
}

std::uint64_t tree_count(const std::vector<int>& degrees) {
  const int n = static_cast<int>(degrees.size());
  if (n == 0) return 0;
  if (n == 1) return degrees[0] == 0 ? 1 : 0;
  int sum = 0;
  for (int d : degrees) {
    if (d < 1) return 0;
    sum += d;
  }
  if (sum != 2 * (n - 1)) return 0;
  // multinomial (n-2)! / Π (δ_i - 1)! built incrementally to stay exact
  std::uint64_t result = 1;
  int placed = 0;
  for (int d : degrees) {
    for (int j = 1; j <= d - 1; ++j) {
      ++placed;
      result = result * placed / j;
    }
  }
  return result;
}

EdgeOrder EdgeOrder::lexicographic(int n) {
  EdgeOrder o;
  o.n = n;
  o.rank.resize(pair_count(n));
  std::iota(o.rank.begin(), o.rank.end(), 0);
  return o;
}

EdgeOrder EdgeOrder::reverse_lexicographic(int n) {
  EdgeOrder o = lexicographic(n);
  std::reverse(o.rank.begin(), o.rank.end());
  return o;
}

EdgeOrder EdgeOrder::from_sequence(int n, const std::vector<std::pair<int, int>>& increasing) {
  if (static_cast<int>(increasing.size()) != pair_count(n))
    throw ValidationError("EdgeOrder: the sequence must list every pair once");
  EdgeOrder o;
  o.n = n;
  o.rank.assign(pair_count(n), -1);
  for (std::size_t r = 0; r < increasing.size(); ++r) {
    auto [i, j] = increasing[r];
    const int e = pair_index(n, std::min(i, j), std::max(i, j));
    if (o.rank[e] >= 0) throw ValidationError("EdgeOrder: repeated pair");
    o.rank[e] = static_cast<int>(r);
  }
  return o;
}

Graph kruskal(const Graph& g, const EdgeOrder& order) {
  if (order.n != g.n) throw ValidationError("kruskal: order is for a different vertex count");
  if (!g.connected()) throw ValidationError("kruskal: graph is not connected");
  std::vector<int> es;
  for (int e = 0; e < pair_count(g.n); ++e)
    if (g.mask >> e & 1u) es.push_back(e);
  std::sort(es.begin(), es.end(), [&](int a, int b) { return order.rank[a] < order.rank[b]; });
  std::vector<int> comp(g.n);
  std::iota(comp.begin(), comp.end(), 0);
  Graph f{g.n, 0};
  for (int e : es) {
    const auto [a, b] = pair_of(g.n, e);
    if (comp[a] == comp[b]) continue;
    const int old = comp[b];
    for (int& c : comp)
      if (c == old) c = comp[a];
    f.mask |= 1u << e;
  }
  return f;
}

BracketReport kruskal_preimage_bracket(const Graph& tree, const EdgeOrder& order) {
  if (tree.edge_count() + 1 != static_cast<std::size_t>(tree.n) || !tree.connected())
    throw ValidationError("kruskal_preimage_bracket: not a tree");
  if (tree.n > 5) throw BudgetError("kruskal_preimage_bracket: exhaustive mode needs n <= 5");
  BracketReport r;
  r.maximal = Graph{tree.n, 0};
  std::vector<std::uint32_t> pre;
  for (const Graph& g : connected_graphs(tree.n))
    if (kruskal(g, order) == tree) {
      pre.push_back(g.mask);
      r.maximal.mask |= g.mask;
    }
  r.preimage_size = pre.size();
  r.closed_form = bracket_closed_form(tree, order);
  // interval {G : T ⊆ G ⊆ M}: all supersets of T inside M, each must be in the preimage
  const std::uint32_t free = r.maximal.mask & ~tree.mask;
  bool ok = pre.size() == (std::size_t{1} << std::popcount(free));
  for (std::uint32_t g : pre) ok = ok && (g & tree.mask) == tree.mask && (g & ~r.maximal.mask) == 0;
  r.pass = ok && r.maximal == r.closed_form;
  return r;
}

double ursell(const Eigen::MatrixXd& zeta) {
  const int n = static_cast<int>(zeta.rows());
  if (zeta.cols() != n) throw ValidationError("ursell: ζ must be square");
  const GraphTable& t = connected_table(n);
  double acc = 0.0;
  for (const auto& es : t.edges) {
    double term = 1.0;
    for (auto [i, j] : es) term *= zeta(i, j);
    acc += term;
  }
  return acc / factorial(n);
}

TreeBoundReport tree_bound_check(const Eigen::MatrixXd& zeta, const std::optional<Eigen::MatrixXd>& a) {
  const int n = static_cast<int>(zeta.rows());
  if (zeta.cols() != n) throw ValidationError("tree_bound_check: ζ must be square");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && !(zeta(i, j) >= -1.0 && zeta(i, j) <= 0.0))
        throw ValidationError("tree_bound_check: ζ must lie in [-1, 0]");
  TreeBoundReport r;
  r.ursell = ursell(zeta);
  const TreeTable& tt = tree_table(n);
  double bound = 0.0, resum = 0.0;
  for (std::size_t k = 0; k < tt.edges.size(); ++k) {
    double abs_term = 1.0, term = 1.0;
    for (auto [i, j] : tt.edges[k]) {
      abs_term *= std::abs(zeta(i, j));
      term *= zeta(i, j);
    }
    bound += abs_term;
    if (a) {
      double s = 0.0;
      for (auto [i, j] : tt.extra[k]) s += (*a)(i, j);
      resum += term * std::exp(-s);
    }
  }
  r.bound = bound / factorial(n);
  r.pass = std::abs(r.ursell) <= r.bound * (1.0 + 1e-12) + 1e-300;
  if (a) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && std::abs(zeta(i, j) - std::expm1(-(*a)(i, j))) > 1e-14)
          throw ValidationError("tree_bound_check: ζ does not match e^{-a} - 1");
    r.resummed = resum / factorial(n);
    r.pass = r.pass && std::abs(r.resummed - r.ursell) <= 1e-12 * std::max(r.bound, 1e-300) + 1e-300;
  }
  return r;
}

std::vector<int> children_counts(const Graph& tree, int root) {
  const int n = tree.n;
  std::vector<int> out(n, 0), parent(n, -1);
  std::vector<int> stack{root};
  parent[root] = root;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u = 0; u < n; ++u)
      if (u != v && parent[u] < 0 && tree.has(u, v)) {
        parent[u] = v;
        ++out[v];
        stack.push_back(u);
      }
  }
  return out;
}

std::vector<std::vector<std::vector<int>>> set_partitions(int p) {
  if (p < 0) throw ValidationError("set_partitions: p must be >= 0");
  std::vector<std::vector<std::vector<int>>> out{{}};
  for (int e = 0; e < p; ++e) {
    std::vector<std::vector<std::vector<int>>> next;
    for (const auto& part : out) {
      for (std::size_t b = 0; b < part.size(); ++b) {
        auto q = part;
        q[b].push_back(e);
        next.push_back(std::move(q));
      }
      auto q = part;
      q.push_back({e});
      next.push_back(std::move(q));
    }
    out = std::move(next);
  }
  return out;
}

double mayer_factor(const Path& a, const Path& b, const InteractionParams& params) {
  return std::expm1(-v_ginibre_pair(a, b, params));
}

double self_weight(const Path& a, const InteractionParams& params) {
  return std::exp(-0.5 * v_ginibre_pair(a, a, params));
}

namespace {

void check_expansion_spec(const EnsembleSpec& spec) {
  spec.validate();
  if (spec.kind != EnsembleKind::ginibre) throw ValidationError("cluster expansion: Ginibre ensemble required");
  if (spec.params.regime == Regime::largemass)
    throw ValidationError("cluster expansion: the large-mass interaction is not supported");
  if (!spec.intensity) throw ValidationError("cluster expansion: missing intensity");
}

// One sample of n!/(n-q)! m^{n-q} Π w_i φ_n(fixed, fresh) (or its tree bound), q = fixed.size().
// For q = 0, n = 1 the free contribution m is subtracted.
double order_sample(const EnsembleSpec& spec, const LoopConfig& fixed, int n, bool bound, Rng& rng) {
  const int q = static_cast<int>(fixed.size());
  const double m = spec.intensity->mass();
  LoopConfig all = fixed;
  double w = 1.0;
  for (int i = q; i < n; ++i) {
    all.push_back(spec.intensity->sample(rng));
    w *= self_weight(all.back(), spec.params);
  }
  double prefactor = std::pow(m, n - q);
  for (int k = n - q + 1; k <= n; ++k) prefactor *= k;  // n!/(n-q)!
  if (n == 1 && q == 0) return bound ? 0.0 : m * (w - 1.0);
  Eigen::MatrixXd zeta = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) zeta(i, j) = zeta(j, i) = mayer_factor(all[i], all[j], spec.params);
  if (!bound) return prefactor * w * ursell(zeta);
  return prefactor * w * std::abs(tree_bound_check(zeta).bound);
}

struct XSample {
  double value = 0.0;
  double bound = 0.0;
};

XSample x_sample(const EnsembleSpec& spec, const LoopConfig& fixed, int n_max, Rng& rng) {
  const int q = static_cast<int>(fixed.size());
  XSample s;
  for (int n = std::max(q, 1); n <= n_max; ++n) s.value += order_sample(spec, fixed, n, false, rng);
  s.bound = order_sample(spec, fixed, n_max + 1, true, rng);
  return s;
}

}  // namespace

XEstimate estimate_X(const EnsembleSpec& spec, const LoopConfig& fixed, int n_max, std::size_t n_samples,
                     std::uint64_t seed, unsigned workers) {
  check_expansion_spec(spec);
  if (n_max > 4) throw BudgetError("estimate_X: n_max must be <= 4");
  const int q = static_cast<int>(fixed.size());
  if (n_max < std::max(q, 1)) throw ValidationError("estimate_X: n_max below the number of fixed paths");
  XEstimate out;
  out.mass = spec.intensity->mass();
  double var = 0.0;
  for (int n = std::max(q, 1); n <= n_max; ++n) {
    ExpansionTerm term;
    term.order = n;
    term.estimate = run_scalar(n_samples, seed, kTagOrder + n, workers,
                               [&](Rng& rng) { return order_sample(spec, fixed, n, false, rng); });
    out.sum += term.estimate.mean;
    var += term.estimate.std_error * term.estimate.std_error;
    out.terms.push_back(std::move(term));
  }
  out.std_error = std::sqrt(var);
  out.next_order_bound = run_scalar(n_samples, seed, kTagBound, workers,
                                    [&](Rng& rng) { return order_sample(spec, fixed, n_max + 1, true, rng); });
  return out;
}

McEstimate gamma_via_expansion(const EnsembleSpec& spec, int p, const std::vector<Site>& xs,
                               const std::vector<Site>& ys, int n_max, std::size_t n_samples, std::uint64_t seed,
                               unsigned workers) {
  check_expansion_spec(spec);
  if (p < 1 || p > 2) throw ValidationError("gamma_via_expansion: p must be 1 or 2");
  if (xs.size() != static_cast<std::size_t>(p) || ys.size() != static_cast<std::size_t>(p))
    throw ValidationError("gamma_via_expansion: tuple length differs from p");
  for (Site s : xs)
    if (s >= spec.torus.volume()) throw ValidationError("gamma_via_expansion: site out of range");
  for (Site s : ys)
    if (s >= spec.torus.volume()) throw ValidationError("gamma_via_expansion: site out of range");
  if (n_max < p || n_max > 4) throw ValidationError("gamma_via_expansion: need p <= n_max <= 4");
  const DurationLaw law = spec.open_law();
  const double norm = std::pow(law.normalization(), p);
  const auto partitions = set_partitions(p);
  std::vector<std::vector<int>> perms;
  std::vector<int> pi(p);
  std::iota(pi.begin(), pi.end(), 0);
  do perms.push_back(pi);
  while (std::next_permutation(pi.begin(), pi.end()));

  auto acc = run_samples(n_samples, 2, seed, kTagGamma, workers, [&](Rng& rng, std::vector<double>& out) {
    LoopConfig open(p);
    for (int i = 0; i < p; ++i) open[i] = sample_free_walk(spec.torus, xs[i], law.sample(rng), rng);
    double matches = 0.0;
    for (const auto& perm : perms) {
      bool ok = true;
      for (int i = 0; i < p && ok; ++i) ok = open[i].end() == ys[perm[i]];
      if (ok) matches += 1.0;
    }
    if (matches == 0.0) return;
    double w = 1.0;
    for (const Path& o : open) w *= self_weight(o, spec.params);
    double f = 0.0, rem = 0.0;
    for (const auto& part : partitions) {
      std::vector<XSample> xsamp;
      for (const auto& block : part) {
        LoopConfig fixed;
        for (int i : block) fixed.push_back(open[i]);
        xsamp.push_back(x_sample(spec, fixed, n_max, rng));
      }
      double prod = 1.0;
      for (const auto& s : xsamp) prod *= s.value;
      f += prod;
      for (std::size_t b = 0; b < xsamp.size(); ++b) {
        double r = xsamp[b].bound;
        for (std::size_t c = 0; c < xsamp.size(); ++c)
          if (c != b) r *= std::abs(xsamp[c].value);
        rem += r;
      }
    }
    out[0] = norm * matches * w * f;
    out[1] = norm * matches * w * rem;
  });
  McEstimate e = to_estimate(acc[0], seed);
  e.meta["remainder"] = acc[1].mean;
  e.meta["remainder_std_error"] = acc[1].std_error();
  return e;
}

RiemannReport riemann_sum_bound_check(const std::vector<double>& kappas, const std::vector<double>& nu_factors,
                                      const std::vector<int>& qs) {
  RiemannReport rep;
  for (double kappa : kappas) {
    if (!(kappa > 0.0)) throw ValidationError("riemann_sum_bound_check: κ must be positive");
    for (double f : nu_factors) {
      if (!(f > 0.0 && f <= 1.0)) throw ValidationError("riemann_sum_bound_check: need ν = f/κ with 0 < f <= 1");
      const double nu = f / kappa;
      for (int q : qs) {
        if (q < 0) throw ValidationError("riemann_sum_bound_check: q must be >= 0");
        RiemannRow row{kappa, nu, q, 0.0, factorial(q) / std::pow(kappa, q + 1)};
        // terms rise until T ≈ q/κ and then decay geometrically
        for (std::size_t k = 1;; ++k) {
          const double T = nu * static_cast<double>(k);
          const double term = nu * std::exp(-kappa * T) * std::pow(T, q);
          row.lhs += term;
          if (kappa * T > q + 1.0 && term < 1e-17 * row.lhs) break;
        }
        rep.constant = std::max(rep.constant, row.lhs / row.rhs);
        rep.rows.push_back(row);
      }
    }
  }
  return rep;
}

IntegrationReport integration_bound_check(const EnsembleSpec& spec, const Path& reference, Site x,
                                          const std::vector<int>& qs, std::size_t n_samples, std::uint64_t seed,
                                          unsigned workers) {
  check_expansion_spec(spec);
  if (x >= spec.torus.volume()) throw ValidationError("integration_bound_check: site out of range");
  const InteractionParams& params = spec.params;
  const double kappa = spec.kappa, nu = params.nu;
  const double m = spec.intensity->mass();
  const DurationLaw law = spec.open_law();
  const double norm = law.normalization();
  const double vnorm = params.lambda / (nu * nu) * params.potential->l1_finite();
  const double volume = static_cast<double>(spec.torus.volume());
  IntegrationReport rep;
  for (std::size_t iq = 0; iq < qs.size(); ++iq) {
    const int q = qs[iq];
    if (q < 0) throw ValidationError("integration_bound_check: q must be >= 0");
    auto acc = run_samples(n_samples, 4, seed, kTagIntegration + iq, workers, [&](Rng& rng, std::vector<double>& out) {
      const Path loop = spec.intensity->sample(rng);
      const double wl = self_weight(loop, params) * std::pow(loop.T, q);
      out[0] = m * wl * std::abs(mayer_factor(reference, loop, params));
      out[2] = m * wl;
      const Path open = sample_free_walk(spec.torus, x, law.sample(rng), rng);
      const double wo = self_weight(open, params) * std::pow(open.T, q);
      out[1] = nu * norm * wo * std::abs(mayer_factor(reference, open, params));
      out[3] = nu * norm * wo;
    });
    IntegrationRow row;
    row.q = q;
    for (int k = 0; k < 4; ++k) row.lhs[k] = to_estimate(acc[k], seed);
    row.rhs[0] = reference.T * factorial(q) / std::pow(kappa, q + 1) * vnorm;
    row.rhs[1] = reference.T * factorial(q + 1) / std::pow(kappa, q + 2) * vnorm;
    row.rhs[2] = q >= 1 ? factorial(q - 1) / std::pow(kappa, q) * volume : std::nan("");
    row.rhs[3] = factorial(q) / std::pow(kappa, q + 1);
    for (int k = 0; k < 4; ++k) {
      if (!(row.rhs[k] > 0.0)) continue;
      rep.constant[k] = std::max(rep.constant[k], row.lhs[k].mean / row.rhs[k]);
    }
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace looplab
