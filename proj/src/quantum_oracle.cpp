#include "looplab/quantum_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>

namespace looplab {

namespace {

constexpr std::size_t kSectorBudget = 3500;

bool uses_hard_core(const InteractionParams& params) { return params.potential->hard_core(); }

double interaction_energy(const std::vector<int>& occ, const InteractionParams& params) {
  if (params.lambda == 0.0) return 0.0;
  const auto& v = *params.potential;
  const Torus& t = v.torus;
  double acc = 0.0;
  for (Site x = 0; x < occ.size(); ++x) {
    if (occ[x] == 0) continue;
    for (Site y = 0; y < occ.size(); ++y) {
      if (occ[y] == 0) continue;
      if (x == y && v.hard_core()) continue;
      acc += v.at(t.diff(x, y)) * occ[x] * occ[y];
    }
  }
  return 0.5 * params.lambda * acc;
}

// Σ_{m > M} of a sequence whose successive ratios are non-increasing; tabulated up to seq.size()-1
// with a geometric remainder.
double tail_after(const std::vector<double>& seq, std::size_t M) {
  double acc = 0.0;
  for (std::size_t m = M + 1; m < seq.size(); ++m) acc += seq[m];
  const std::size_t n = seq.size();
  if (n >= 2 && seq[n - 2] > 0.0) {
    const double r = seq[n - 1] / seq[n - 2];
    if (r >= 1.0) return kInf;
    acc += seq[n - 1] * r / (1.0 - r);
  }
  return acc;
}

// Upper bounds on the sector traces tr e^{-(H_m + κνm)}: the interaction is a nonnegative operator,
// and for positive-type v (R = 0) it is at least (λ/2) v̂(0) m²/|Λ|.
std::vector<double> sector_bounds(const InteractionParams& params, double kappa) {
  const auto& v = *params.potential;
  const Torus& t = v.torus;
  const std::size_t V = t.volume();
  std::vector<double> q;
  for (double r : laplacian_rates(t)) q.push_back(std::exp(-params.nu * r));
  double c = 0.0;
  if (!v.hard_core() && params.lambda > 0.0 && !v.is_zero()) {
    const auto rep = check_positive_type(v);
    if (rep.positive) c = std::accumulate(v.v.begin(), v.v.end(), 0.0) / static_cast<double>(V);
  }
  for (std::size_t M = 256;; M *= 2) {
    std::vector<double> h(M + 1, 0.0);
    h[0] = 1.0;
    for (double qx : q)
      for (std::size_t m = 1; m <= M; ++m) h[m] += qx * h[m - 1];
    std::vector<double> b(M + 1);
    for (std::size_t m = 0; m <= M; ++m) {
      const double mm = static_cast<double>(m);
      b[m] = h[m] * std::exp(-kappa * params.nu * mm - 0.5 * params.lambda * c * mm * mm);
      if (v.hard_core() && m > V) b[m] = 0.0;
    }
    if (v.hard_core() || b[M] == 0.0) return b;
    const double r = b[M] / b[M - 1];
    const double total = std::accumulate(b.begin(), b.end(), 0.0);
    if (r < 1.0 && b[M] * r / (1.0 - r) < 1e-30 * total) return b;
    if (M > (1u << 22)) throw DivergenceError("grand partition: sector bounds do not decay (κν too small?)");
  }
}

struct Solve {
  GrandCanonicalResult gc;
  Kernel gamma;
};

Solve solve(int p, const InteractionParams& params, double kappa, double tol) {
  params.validate();
  if (!(kappa * params.nu > 0.0)) throw ValidationError("grand partition: κν must be positive");
  if (!(tol > 0.0)) throw ValidationError("grand partition: tol must be positive");
  const Torus& t = params.potential->torus;
  const std::size_t V = t.volume();
  const bool hard = uses_hard_core(params);
  auto bounds = sector_bounds(params, kappa);
  std::vector<double> weighted(bounds.size());
  for (std::size_t m = 0; m < bounds.size(); ++m) weighted[m] = bounds[m] * std::pow(static_cast<double>(m), p);

  Solve out;
  std::size_t Vp = 1;
  for (int i = 0; i < p; ++i) Vp *= V;
  if (p > 0) out.gamma = Kernel::Zero(Vp, Vp);

  // Sector m-p tuples of created sites, kept from the previous iterations.
  std::vector<OccupationSector> sectors;
  double xi = 0.0;
  for (std::size_t m = 0;; ++m) {
    if (hard && m > V) {
      out.gc.tail_bound = 0.0;
      break;
    }
    sectors.push_back(make_sector(t, static_cast<int>(m), hard));
    const OccupationSector& sec = sectors.back();
    if (sec.dim() > kSectorBudget)
      throw BudgetError("grand partition: sector " + std::to_string(m) + " has dimension " +
                        std::to_string(sec.dim()) + " above the budget");
    const bool need_vectors = p > 0 && m >= static_cast<std::size_t>(p);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hamiltonian(sec, params),
                                                      need_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    const Eigen::VectorXd w =
        (-es.eigenvalues().array() - kappa * params.nu * static_cast<double>(m)).exp().matrix();
    const double trace = w.sum();
    out.gc.traces.push_back(trace);
    xi += trace;

    if (need_vectors && trace > 0.0) {
      const Eigen::MatrixXd rho = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
      const OccupationSector& low = sectors[m - p];
      std::vector<std::size_t> s_of(Vp);
      std::vector<double> c_of(Vp);
      for (const auto& base : low.states) {
        for (std::size_t xi_idx = 0; xi_idx < Vp; ++xi_idx) {
          std::vector<int> occ = base;
          double c = 1.0;
          std::size_t rest = xi_idx;
          for (int i = 0; i < p; ++i) {
            const Site x = static_cast<Site>(rest % V);
            rest /= V;
            c *= std::sqrt(static_cast<double>(occ[x] + 1));
            ++occ[x];
          }
          bool ok = true;
          if (hard)
            for (int n : occ) ok = ok && n <= 1;
          c_of[xi_idx] = ok ? c : 0.0;
          s_of[xi_idx] = ok ? sec.index.at(occ) : 0;
        }
        for (std::size_t i = 0; i < Vp; ++i) {
          if (c_of[i] == 0.0) continue;
          for (std::size_t j = 0; j < Vp; ++j) {
            if (c_of[j] == 0.0) continue;
            out.gamma(i, j) += c_of[i] * c_of[j] * rho(s_of[i], s_of[j]);
          }
        }
      }
    }

    const double tail = tail_after(bounds, m);
    const double tail_g = p > 0 ? tail_after(weighted, m) : 0.0;
    if (m + 1 >= bounds.size() || (tail < tol * xi && tail_g < tol * xi)) {
      out.gc.tail_bound = std::max(tail, tail_g) / xi;
      break;
    }
  }
  out.gc.xi = xi;
  out.gc.n_max = static_cast<int>(out.gc.traces.size()) - 1;
  const double log_xi0 = ideal_gas_log_xi(t, params.nu, kappa);
  out.gc.xi0 = std::exp(log_xi0);
  out.gc.log_z = std::log(xi) - log_xi0;
  out.gc.z = std::exp(out.gc.log_z);
  if (p > 0) out.gamma /= xi;
  return out;
}

template <class F>
void for_each_tuple(std::size_t V, int n, F&& f) {
  std::vector<Site> tup(n, 0);
  while (true) {
    f(tup);
    int i = 0;
    while (i < n && tup[i] + 1 == V) tup[i++] = 0;
    if (i == n) return;
    ++tup[i];
  }
}

}  // namespace

ProductSpace make_product_space(const Torus& torus, int n, bool hard_core) {
  if (n < 0) throw ValidationError("product space: negative particle number");
  ProductSpace s;
  s.torus = torus;
  s.n = n;
  s.hard_core = hard_core;
  for_each_tuple(torus.volume(), n, [&](const std::vector<Site>& tup) {
    if (hard_core) {
      std::vector<Site> sorted = tup;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return;
    }
    s.index[tup] = s.states.size();
    s.states.push_back(tup);
  });
  return s;
}

OccupationSector make_sector(const Torus& torus, int n, bool hard_core) {
  if (n < 0) throw ValidationError("occupation sector: negative particle number");
  OccupationSector s;
  s.torus = torus;
  s.n = n;
  s.hard_core = hard_core;
  const std::size_t V = torus.volume();
  std::vector<int> occ(V, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t x, int left) {
    if (x + 1 == V) {
      if (hard_core && left > 1) return;
      occ[x] = left;
      s.index[occ] = s.states.size();
      s.states.push_back(occ);
      occ[x] = 0;
      return;
    }
    const int top = hard_core ? std::min(left, 1) : left;
    for (int k = top; k >= 0; --k) {
      occ[x] = k;
      rec(x + 1, left - k);
    }
    occ[x] = 0;
  };
  rec(0, n);
  return s;
}

Eigen::MatrixXd hamiltonian(const ProductSpace& space, const InteractionParams& params) {
  params.validate();
  if (space.n < 1) throw ValidationError("hamiltonian: n must be positive");
  const auto& v = *params.potential;
  if (!(space.torus == v.torus)) throw ValidationError("hamiltonian: torus mismatch");
  if (v.hard_core() != space.hard_core) throw ValidationError("hamiltonian: hard-core mask does not match potential");
  const Eigen::MatrixXd D = laplacian_matrix(space.torus);
  const std::size_t V = space.torus.volume();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(space.dim(), space.dim());
  for (std::size_t s = 0; s < space.dim(); ++s) {
    const auto& tup = space.states[s];
    for (int i = 0; i < space.n; ++i)
      for (Site y = 0; y < V; ++y) {
        const double d = D(y, tup[i]);
        if (d == 0.0) continue;
        auto target = tup;
        target[i] = y;
        auto it = space.index.find(target);
        if (it == space.index.end()) continue;  // excluded by the hard core
        H(it->second, s) += -0.5 * params.nu * d;
      }
    double e = 0.0;
    for (int i = 0; i < space.n; ++i)
      for (int j = 0; j < space.n; ++j) {
        if (i == j && v.hard_core()) continue;
        const double val = v.at(space.torus.diff(tup[i], tup[j]));
        if (!std::isfinite(val)) throw std::logic_error("hamiltonian: infinite potential on a retained state");
        e += val;
      }
    H(s, s) += 0.5 * params.lambda * e;
  }
  return H;
}

Eigen::MatrixXd hamiltonian(const OccupationSector& sector, const InteractionParams& params) {
  params.validate();
  const auto& v = *params.potential;
  if (!(sector.torus == v.torus)) throw ValidationError("hamiltonian: torus mismatch");
  if (v.hard_core() != sector.hard_core) throw ValidationError("hamiltonian: hard-core mask does not match potential");
  const Eigen::MatrixXd D = laplacian_matrix(sector.torus);
  const std::size_t V = sector.torus.volume();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(sector.dim(), sector.dim());
  for (std::size_t s = 0; s < sector.dim(); ++s) {
    const auto& occ = sector.states[s];
    double diag = interaction_energy(occ, params);
    for (Site y = 0; y < V; ++y) {
      if (occ[y] == 0) continue;
      diag += -0.5 * params.nu * D(y, y) * occ[y];
      for (Site x = 0; x < V; ++x) {
        if (x == y || D(x, y) == 0.0) continue;
        if (sector.hard_core && occ[x] >= 1) continue;
        auto target = occ;
        const double amp = std::sqrt(static_cast<double>(occ[y]) * (occ[x] + 1));
        --target[y];
        ++target[x];
        H(sector.index.at(target), s) += -0.5 * params.nu * D(x, y) * amp;
      }
    }
    H(s, s) += diag;
  }
  return H;
}

Eigen::MatrixXd symmetrizer(const ProductSpace& space) {
  std::vector<int> perm(space.n);
  std::iota(perm.begin(), perm.end(), 0);
  double count = 0.0;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(space.dim(), space.dim());
  do {
    count += 1.0;
    for (std::size_t s = 0; s < space.dim(); ++s) {
      std::vector<Site> t(space.n);
      for (int i = 0; i < space.n; ++i) t[i] = space.states[s][perm[i]];
      P(space.index.at(t), s) += 1.0;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return P / count;
}

GrandCanonicalResult grand_partition(const InteractionParams& params, double kappa, double tol) {
  return solve(0, params, kappa, tol).gc;
}

Kernel reduced_density_matrix(int p, const InteractionParams& params, double kappa, double tol) {
  if (p < 1) throw ValidationError("reduced_density_matrix: p must be positive");
  return solve(p, params, kappa, tol).gamma;
}

namespace {

// Weighted symmetric Gibbs operators e^{-(H_m + κνm)} P⁺ for m = 0..n_max on the product basis.
std::vector<std::pair<ProductSpace, Eigen::MatrixXd>> product_gibbs(const InteractionParams& params, double kappa,
                                                                    int n_max) {
  params.validate();
  const Torus& t = params.potential->torus;
  const bool hard = uses_hard_core(params);
  std::vector<std::pair<ProductSpace, Eigen::MatrixXd>> out;
  for (int m = 0; m <= n_max; ++m) {
    ProductSpace sp = make_product_space(t, m, hard);
    if (sp.dim() > 6000) throw BudgetError("product basis too large");
    Eigen::MatrixXd G;
    if (m == 0) {
      G = Eigen::MatrixXd::Ones(1, 1);
    } else if (sp.dim() == 0) {
      G = Eigen::MatrixXd::Zero(0, 0);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hamiltonian(sp, params));
      const Eigen::VectorXd w = (-es.eigenvalues().array() - kappa * params.nu * m).exp().matrix();
      G = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose() * symmetrizer(sp);
    }
    out.emplace_back(std::move(sp), std::move(G));
  }
  return out;
}

}  // namespace

GrandCanonicalResult grand_partition_product(const InteractionParams& params, double kappa, int n_max) {
  GrandCanonicalResult r;
  double xi = 0.0;
  for (const auto& [sp, G] : product_gibbs(params, kappa, n_max)) {
    r.traces.push_back(G.trace());
    xi += G.trace();
  }
  r.xi = xi;
  r.n_max = n_max;
  const double log_xi0 = ideal_gas_log_xi(params.potential->torus, params.nu, kappa);
  r.xi0 = std::exp(log_xi0);
  r.log_z = std::log(xi) - log_xi0;
  r.z = std::exp(r.log_z);
  r.tail_bound = std::nan("");
  return r;
}

Kernel reduced_density_matrix_product(int p, const InteractionParams& params, double kappa, int n_max) {
  if (p < 1 || p > n_max) throw ValidationError("reduced_density_matrix_product: need 1 <= p <= n_max");
  const auto gibbs = product_gibbs(params, kappa, n_max);
  double xi = 0.0;
  for (const auto& g : gibbs) xi += g.second.trace();
  const std::size_t V = params.potential->torus.volume();
  std::size_t Vp = 1;
  for (int i = 0; i < p; ++i) Vp *= V;
  Kernel K = Kernel::Zero(Vp, Vp);
  for (int m = p; m <= n_max; ++m) {
    const auto& [sp, G] = gibbs[m];
    const int n = m - p;
    double factor = 1.0;  // (p+n)!/n!
    for (int k = n + 1; k <= m; ++k) factor *= k;
    for (std::size_t i = 0; i < Vp; ++i)
      for (std::size_t j = 0; j < Vp; ++j) {
        const auto xs = tuple_sites(i, p, V), ys = tuple_sites(j, p, V);
        double acc = 0.0;
        for_each_tuple(V, n, [&](const std::vector<Site>& u) {
          auto a = xs, b = ys;
          a.insert(a.end(), u.begin(), u.end());
          b.insert(b.end(), u.begin(), u.end());
          auto ia = sp.index.find(a), ib = sp.index.find(b);
          if (ia == sp.index.end() || ib == sp.index.end()) return;
          acc += G(ia->second, ib->second);
        });
        K(i, j) += factor * acc;
      }
  }
  return K / xi;
}

double ideal_gas_log_xi(const Torus& torus, double nu, double kappa) {
  double acc = 0.0;
  for (double r : laplacian_rates(torus)) acc -= std::log1p(-std::exp(-nu * r - kappa * nu));
  return acc;
}

double gibbs_potential(const InteractionParams& params, double kappa, double tol) {
  return grand_partition(params, kappa, tol).log_z / static_cast<double>(params.potential->torus.volume());
}

std::vector<Site> centered_box(const Torus& torus, int L0) {
  if (L0 < 1 || L0 > torus.side()) throw ValidationError("centered_box: need 1 <= L0 <= L");
  const int lo = -(L0 / 2), hi = L0 - L0 / 2;  // [lo, hi)
  std::vector<Site> out;
  for (Site s = 0; s < torus.volume(); ++s) {
    bool in = true;
    for (int c : torus.coords(s)) in = in && c >= lo && c < hi;
    if (in) out.push_back(s);
  }
  return out;
}

double kernel_norm(const Kernel& K, int p, const Torus& torus, int L0) {
  const auto box = centered_box(torus, L0);
  const std::size_t V = torus.volume(), B = box.size();
  std::size_t Bp = 1;
  for (int i = 0; i < p; ++i) Bp *= B;
  auto full_index = [&](std::size_t idx) {
    std::vector<Site> sites(p);
    for (int i = 0; i < p; ++i) {
      sites[i] = box[idx % B];
      idx /= B;
    }
    return tuple_index(sites, V);
  };
  double best = 0.0;
  for (std::size_t i = 0; i < Bp; ++i) {
    const std::size_t row = full_index(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < Bp; ++j) acc += std::abs(K(row, full_index(j)));
    best = std::max(best, acc);
  }
  return best;
}

FeynmanKacReport feynman_kac_check(const Torus& torus, const std::vector<double>& v_site, double t,
                                   std::size_t n_samples, std::uint64_t seed, unsigned workers) {
  if (!(t > 0.0)) throw ValidationError("feynman_kac_check: t must be positive");
  const std::size_t V = torus.volume();
  if (v_site.size() != V) throw ValidationError("feynman_kac_check: potential size mismatch");
  Eigen::MatrixXd A = 0.5 * laplacian_matrix(torus);
  for (std::size_t x = 0; x < V; ++x) A(x, x) -= v_site[x];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  const Eigen::VectorXd e = (t * es.eigenvalues().array()).exp().matrix();
  const Eigen::MatrixXd E = es.eigenvectors() * e.asDiagonal() * es.eigenvectors().transpose();

  FeynmanKacReport rep;
  rep.exact = E.transpose();
  rep.mc = Eigen::MatrixXd::Zero(V, V);
  rep.std_error = Eigen::MatrixXd::Zero(V, V);
  bool pass = true;
  for (Site x = 0; x < V; ++x) {
    auto acc = run_samples(n_samples, V, seed, 200 + x, workers, [&](Rng& rng, std::vector<double>& out) {
      const Path p = sample_free_walk(torus, x, t, rng);
      double integral = 0.0, t0 = 0.0;
      Site cur = p.start;
      for (const auto& j : p.jumps) {
        integral += (j.t - t0) * v_site[cur];
        t0 = j.t;
        cur = j.site;
      }
      integral += (t - t0) * v_site[cur];
      out[cur] = std::exp(-integral);
    });
    for (Site y = 0; y < V; ++y) {
      rep.mc(x, y) = acc[y].mean;
      rep.std_error(x, y) = acc[y].std_error();
      const double diff = std::abs(rep.mc(x, y) - rep.exact(x, y));
      const double se = rep.std_error(x, y);
      if (se > 0.0) {
        rep.max_z = std::max(rep.max_z, diff / se);
        pass = pass && diff <= 3.0 * se;
      } else {
        pass = pass && diff <= 1e-12;
      }
    }
  }
  rep.pass = pass;
  return rep;
}

void write_kernel_csv(std::ostream& out, const Kernel& K, int p, std::size_t volume) {
  for (int i = 0; i < p; ++i) out << "x" << i + 1 << ",";
  for (int i = 0; i < p; ++i) out << "y" << i + 1 << ",";
  out << "value\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < K.rows(); ++i)
    for (Eigen::Index j = 0; j < K.cols(); ++j) {
      for (Site s : tuple_sites(i, p, volume)) out << s << ",";
      for (Site s : tuple_sites(j, p, volume)) out << s << ",";
      out << K(i, j) << "\n";
    }
}

}  // namespace looplab
