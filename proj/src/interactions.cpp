#include "looplab/interactions.hpp"

#include <algorithm>
#include <cmath>

namespace looplab {

InteractionParams InteractionParams::meanfield(double nu, std::shared_ptr<const PeriodizedPotential> v) {
  InteractionParams p{nu, nu * nu, 0.0, Regime::meanfield, std::move(v)};
  p.validate();
  return p;
}

InteractionParams InteractionParams::generic(double nu, double lambda, std::shared_ptr<const PeriodizedPotential> v) {
  InteractionParams p{nu, lambda, 0.0, Regime::generic, std::move(v)};
  p.validate();
  return p;
}

InteractionParams InteractionParams::largemass(double nu, double kappa0, std::shared_ptr<const PeriodizedPotential> v) {
  InteractionParams p{nu, 1.0, kappa0, Regime::largemass, std::move(v)};
  p.validate();
  return p;
}

void InteractionParams::validate() const {
  if (!(nu > 0.0)) throw ValidationError("interaction: ν must be positive");
  if (!(lambda >= 0.0)) throw ValidationError("interaction: λ must be nonnegative");
  if (!potential) throw ValidationError("interaction: missing potential");
  switch (regime) {
    case Regime::meanfield:
      if (std::abs(lambda - nu * nu) > 1e-14 * nu * nu) throw ValidationError("interaction: mean-field needs λ = ν²");
      [[fallthrough]];
    case Regime::generic:
      if (potential->hard_core()) throw ValidationError("interaction: hard core is only supported in large-mass mode");
      break;
    case Regime::largemass:
      if (lambda != 1.0) throw ValidationError("interaction: large-mass mode needs λ = 1");
      if (!(kappa0 > 0.0)) throw ValidationError("interaction: large-mass mode needs κ0 > 0");
      break;
  }
}

namespace {

struct Segment {
  double len;
  Site site;
};

std::vector<Segment> segments(const Path& p) {
  std::vector<Segment> out;
  double t0 = 0.0;
  Site cur = p.start;
  for (const auto& j : p.jumps) {
    out.push_back({j.t - t0, cur});
    t0 = j.t;
    cur = j.site;
  }
  out.push_back({p.T - t0, cur});
  return out;
}

// Breakpoints (offset in [0,ν), site) of window r.
std::vector<std::pair<double, Site>> window_points(const Path& p, std::size_t r, double nu) {
  const double lo = nu * static_cast<double>(r), hi = lo + nu;
  std::vector<std::pair<double, Site>> out{{0.0, position(p, lo)}};
  auto it = std::upper_bound(p.jumps.begin(), p.jumps.end(), lo, [](double v, const Jump& j) { return v < j.t; });
  for (; it != p.jumps.end() && it->t < hi; ++it) out.emplace_back(it->t - lo, it->site);
  return out;
}

double pair_value(double len, double v) {
  if (len <= 0.0) return 0.0;
  return v == kInf ? kInf : len * v;
}

}  // namespace

double v_cl_pair(const Path& a, const Path& b, const PeriodizedPotential& vL) {
  const auto sa = segments(a), sb = segments(b);
  const Torus& t = vL.torus;
  double acc = 0.0;
  for (const auto& x : sa)
    for (const auto& y : sb) {
      const double v = vL.at(t.diff(x.site, y.site));
      if (v == 0.0) continue;
      acc += pair_value(x.len * y.len, v);
      if (acc == kInf) return kInf;
    }
  return acc;
}

std::size_t window_count(const Path& p, double nu) {
  const double k = std::round(p.T / nu);
  if (k < 1.0 || std::abs(p.T - k * nu) > 1e-9 * std::max(1.0, p.T))
    throw ValidationError("path duration is not on the ν grid");
  return static_cast<std::size_t>(k);
}

double window_overlap(const Path& a, std::size_t r, const Path& b, std::size_t s, double nu,
                      const PeriodizedPotential& vL) {
  const auto pa = window_points(a, r, nu), pb = window_points(b, s, nu);
  const Torus& t = vL.torus;
  std::size_t i = 0, j = 0;
  double cur = 0.0, acc = 0.0;
  while (true) {
    const double na = i + 1 < pa.size() ? pa[i + 1].first : nu;
    const double nb = j + 1 < pb.size() ? pb[j + 1].first : nu;
    const double next = std::min(na, nb);
    const double v = vL.at(t.diff(pa[i].second, pb[j].second));
    if (v != 0.0) acc += pair_value(next - cur, v);
    if (acc == kInf) return kInf;
    cur = next;
    if (next >= nu) break;
    if (na <= next) ++i;
    if (nb <= next) ++j;
  }
  return acc;
}

double v_ginibre_pair(const Path& a, const Path& b, const InteractionParams& params) {
  const std::size_t ka = window_count(a, params.nu), kb = window_count(b, params.nu);
  if (params.lambda == 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t r = 0; r < ka; ++r)
    for (std::size_t s = 0; s < kb; ++s) {
      acc += window_overlap(a, r, b, s, params.nu, *params.potential);
      if (acc == kInf) return kInf;
    }
  return params.lambda / params.nu * acc;
}

double v_ginibre_self_offdiag(const Path& a, const InteractionParams& params) {
  const std::size_t k = window_count(a, params.nu);
  double acc = 0.0;
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t s = 0; s < k; ++s) {
      if (r == s) continue;
      acc += window_overlap(a, r, a, s, params.nu, *params.potential);
      if (acc == kInf) return kInf;
    }
  return acc / params.nu;
}

double v_total(const LoopConfig& config, const PairFn& pair) {
  double acc = 0.0;
  for (std::size_t i = 0; i < config.size(); ++i) {
    acc += 0.5 * pair(config[i], config[i]);
    for (std::size_t j = i + 1; j < config.size(); ++j) acc += pair(config[i], config[j]);
    if (acc == kInf) return kInf;
  }
  return acc;
}

double v_total_largemass(const LoopConfig& config, const InteractionParams& params) {
  if (params.regime != Regime::largemass) throw ValidationError("v_total_largemass needs large-mass parameters");
  const auto& v = *params.potential;
  double acc = 0.0, total_T = 0.0;
  for (std::size_t i = 0; i < config.size(); ++i) {
    total_T += config[i].T;
    acc += 0.5 * v_ginibre_self_offdiag(config[i], params);
    for (std::size_t j = i + 1; j < config.size(); ++j) acc += v_ginibre_pair(config[i], config[j], params);
    if (acc == kInf) return kInf;
  }
  if (!v.hard_core()) acc += v.at(0) * total_T / (2.0 * params.nu);
  return acc;
}

double v_lm(const std::vector<int>& k, const std::vector<Site>& x, const PeriodizedPotential& vL) {
  if (k.size() != x.size()) throw ValidationError("v_lm: |k| != |x|");
  const Torus& t = vL.torus;
  const std::size_t n = k.size();
  double acc = 0.0;
  if (vL.hard_core()) {
    for (int ki : k)
      if (ki != 1) return kInf;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        if (x[i] == x[j]) return kInf;
        acc += vL.at(t.diff(x[i], x[j]));
      }
    return acc;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) acc += 0.5 * k[i] * k[j] * vL.at(t.diff(x[i], x[j]));
  return acc;
}

double energy_cl(const LoopConfig& config, const PeriodizedPotential& vL) {
  if (vL.hard_core()) throw ValidationError("energy_cl: hard core not supported");
  const Torus& t = vL.torus;
  std::vector<double> tau(t.volume(), 0.0);
  for (const auto& p : config) add_local_times(p, tau);
  const auto off = vL.off_origin();
  const double v0 = vL.at(0);
  double acc = 0.0;
  for (Site x = 0; x < t.volume(); ++x) {
    if (tau[x] == 0.0) continue;
    double w = v0 * tau[x];
    for (const auto& [o, val] : off) w += val * tau[t.diff(x, o)];
    acc += tau[x] * w;
  }
  return 0.5 * acc;
}

double energy_ginibre(const LoopConfig& config, const InteractionParams& params) {
  const auto& v = *params.potential;
  const Torus& t = v.torus;
  const double nu = params.nu;
  if (params.lambda == 0.0 || config.empty()) return 0.0;
  const bool hard = v.hard_core();
  if (hard && params.regime != Regime::largemass) throw ValidationError("energy_ginibre: hard core needs large-mass mode");
  const std::size_t N = t.volume();

  struct Event {
    double tau;
    Site from, to;
  };
  std::vector<int> occ(N, 0);
  std::vector<Event> events;
  for (const auto& p : config) {
    const std::size_t K = window_count(p, nu);
    for (std::size_t r = 0; r < K; ++r) ++occ[position(p, nu * static_cast<double>(r))];
    Site prev = p.start;
    for (const auto& j : p.jumps) {
      const double tau = j.t - nu * std::floor(j.t / nu);
      if (tau > 0.0 && tau < nu && prev != j.site) events.push_back({tau, prev, j.site});
      prev = j.site;
    }
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.tau < b.tau; });

  // neighbor lists of the off-origin part: y with v(x-y) != 0
  const auto off = v.off_origin();
  std::vector<double> W(N, 0.0);  // W_x = Σ_{y≠x} v(x-y) occ_y
  double e_off = 0.0, s2 = 0.0;
  int collisions = 0;
  for (Site x = 0; x < N; ++x) {
    for (const auto& [o, val] : off) W[x] += val * occ[t.diff(x, o)];
    e_off += occ[x] * W[x];
    s2 += static_cast<double>(occ[x]) * occ[x];
    if (occ[x] >= 2) ++collisions;
  }
  const double v0 = v.v0_finite();
  auto density = [&]() -> double {
    if (hard) return collisions > 0 ? kInf : e_off;
    return e_off + v0 * s2;
  };
  auto remove = [&](Site a) {
    e_off -= 2.0 * W[a];
    s2 -= 2.0 * occ[a] - 1.0;
    if (occ[a] == 2) --collisions;
    --occ[a];
    for (const auto& [o, val] : off) W[t.diff(a, t.neg(o))] -= val;  // y = a + o
  };
  auto add = [&](Site b) {
    e_off += 2.0 * W[b];
    s2 += 2.0 * occ[b] + 1.0;
    if (occ[b] == 1) ++collisions;
    ++occ[b];
    for (const auto& [o, val] : off) W[t.diff(b, t.neg(o))] += val;
  };

  double acc = 0.0, prev = 0.0;
  for (const auto& ev : events) {
    const double len = ev.tau - prev;
    if (len > 0.0) {
      const double e = density();
      if (e == kInf) return kInf;
      acc += len * e;
    }
    remove(ev.from);
    add(ev.to);
    prev = ev.tau;
  }
  const double e = density();
  if (e == kInf) return kInf;
  acc += (nu - prev) * e;
  return params.lambda / (2.0 * nu) * acc;
}

LoopConfig join(const LoopConfig& a, const LoopConfig& b) {
  LoopConfig out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace looplab
