#include "looplab/lattice.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <numbers>
#include <sstream>

namespace looplab {

namespace {
int wrap(long long a, int L) {
  long long r = a % L;
  return static_cast<int>(r < 0 ? r + L : r);
}
int centered(int u, int L) { return 2 * u >= L ? u - L : u; }
}  // namespace

Torus::Torus(int d, int L) : d_(d), L_(L) {
  if (d < 1 || L < 1) throw ValidationError("torus needs d >= 1 and L >= 1");
  volume_ = 1;
  for (int j = 0; j < d; ++j) volume_ *= static_cast<std::size_t>(L);
  if (volume_ > 4096) throw ValidationError("torus too large (volume > 4096)");
  steps_.resize(volume_ * 2 * d);
  diff_.resize(volume_ * volume_);
  std::vector<Coord> raw(volume_);
  for (Site s = 0; s < volume_; ++s) {
    Coord x(d);
    std::size_t r = s;
    for (int j = 0; j < d; ++j) {
      x[j] = static_cast<int>(r % L);
      r /= L;
    }
    raw[s] = x;
  }
  for (Site s = 0; s < volume_; ++s) {
    for (int dir = 0; dir < 2 * d; ++dir) {
      Coord y = raw[s];
      y[dir / 2] += (dir % 2 == 0) ? 1 : -1;
      steps_[s * 2 * d + dir] = index(y);
    }
    for (Site t = 0; t < volume_; ++t) {
      Coord z(d);
      for (int j = 0; j < d; ++j) z[j] = raw[s][j] - raw[t][j];
      diff_[s * volume_ + t] = index(z);
    }
  }
}

Coord Torus::coords(Site s) const {
  Coord x(d_);
  std::size_t r = s;
  for (int j = 0; j < d_; ++j) {
    x[j] = centered(static_cast<int>(r % L_), L_);
    r /= L_;
  }
  return x;
}

Site Torus::index(const Coord& x) const {
  Site s = 0, mult = 1;
  for (int j = 0; j < d_; ++j) {
    s += static_cast<Site>(wrap(x[j], L_)) * mult;
    mult *= static_cast<Site>(L_);
  }
  return s;
}

double Torus::norm(Site s) const {
  double acc = 0.0;
  for (int c : coords(s)) {
    // centered representative already minimizes |x_j + k L| per axis
    int m = std::min(std::abs(c), L_ - std::abs(c));
    acc += static_cast<double>(m) * m;
  }
  return std::sqrt(acc);
}

Eigen::MatrixXd laplacian_matrix(const Torus& torus) {
  const auto n = static_cast<Eigen::Index>(torus.volume());
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (Site s = 0; s < torus.volume(); ++s)
    for (int dir = 0; dir < torus.num_steps(); ++dir) {
      D(s, torus.step(s, dir)) += 1.0;
      D(s, s) -= 1.0;
    }
  return D;
}

std::vector<double> laplacian_rates(const Torus& torus) {
  std::vector<double> rates(torus.volume());
  const double w = 2.0 * std::numbers::pi / torus.side();
  for (Site k = 0; k < torus.volume(); ++k) {
    double r = torus.dim();
    std::size_t rem = k;
    for (int j = 0; j < torus.dim(); ++j) {
      r -= std::cos(w * static_cast<double>(rem % torus.side()));
      rem /= torus.side();
    }
    rates[k] = r;
  }
  return rates;
}

double heat_kernel_1d(int L, double t, int u) {
  const double w = 2.0 * std::numbers::pi / L;
  double acc = 0.0;
  for (int k = 0; k < L; ++k) acc += std::exp(-t * (1.0 - std::cos(w * k))) * std::cos(w * k * u);
  return acc / L;
}

std::vector<double> HeatKernel::table(double t) const {
  if (t < 0.0) throw ValidationError("heat kernel needs t >= 0");
  const int L = torus_.side();
  std::vector<double> one(L);
  for (int u = 0; u < L; ++u) one[u] = heat_kernel_1d(L, t, u);
  std::vector<double> out(torus_.volume());
  for (Site s = 0; s < torus_.volume(); ++s) {
    double v = 1.0;
    std::size_t r = s;
    for (int j = 0; j < torus_.dim(); ++j) {
      v *= one[r % L];
      r /= L;
    }
    out[s] = v;
  }
  return out;
}

double HeatKernel::value(double t, Site x) const {
  const int L = torus_.side();
  double v = 1.0;
  std::size_t r = x;
  for (int j = 0; j < torus_.dim(); ++j) {
    v *= heat_kernel_1d(L, t, static_cast<int>(r % L));
    r /= L;
  }
  return v;
}

double HeatKernel::at_origin(double t) const { return std::pow(heat_kernel_1d(torus_.side(), t, 0), torus_.dim()); }

double heat_kernel_infinite(int d, double t, const Coord& x, double tail_tol) {
  if (t < 0.0 || tail_tol <= 0.0) throw ValidationError("heat_kernel_infinite: bad arguments");
  double result = 1.0;
  for (int j = 0; j < d; ++j) {
    const int u = std::abs(x[j]);
    auto f = [t, u](double th) { return std::exp(-t * (1.0 - std::cos(th))) * std::cos(u * th); };
    double err = 0.0;
    const double I =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, std::numbers::pi, 15, 1e-12, &err);
    if (err / std::numbers::pi > tail_tol / d)
      throw PrecisionError("infinite heat kernel quadrature did not converge");
    result *= I / std::numbers::pi;
  }
  return result;
}

double heat_kernel_infinite_bessel(int d, double t, const Coord& x) {
  double result = 1.0;
  for (int j = 0; j < d; ++j) {
    const double i = t == 0.0 ? (x[j] == 0 ? 1.0 : 0.0) : std::exp(-t) * std::cyl_bessel_i(std::abs(x[j]), t);
    result *= i;
  }
  return result;
}

double periodized_infinite_kernel(const Torus& torus, double t, Site x, int K, bool use_bessel) {
  const int d = torus.dim(), L = torus.side();
  const Coord base = torus.coords(x);
  Coord shift(d, -K);
  double acc = 0.0;
  while (true) {
    Coord y(d);
    for (int j = 0; j < d; ++j) y[j] = base[j] + shift[j] * L;
    acc += use_bessel ? heat_kernel_infinite_bessel(d, t, y) : heat_kernel_infinite(d, t, y);
    int j = 0;
    while (j < d && shift[j] == K) shift[j++] = -K;
    if (j == d) break;
    ++shift[j];
  }
  return acc;
}

double PotentialSpec::operator()(const Coord& x) const {
  bool origin = true;
  for (int c : x) origin = origin && c == 0;
  if (R == 1 && origin) return kInf;
  if (profile) return profile(x);
  auto it = entries.find(x);
  return it == entries.end() ? 0.0 : it->second;
}

std::size_t tuple_index(const std::vector<Site>& xs, std::size_t volume) {
  std::size_t idx = 0, mult = 1;
  for (Site x : xs) {
    if (x >= volume) throw ValidationError("tuple_index: site out of range");
    idx += x * mult;
    mult *= volume;
  }
  return idx;
}

std::vector<Site> tuple_sites(std::size_t index, int p, std::size_t volume) {
  std::vector<Site> out(p);
  for (int i = 0; i < p; ++i) {
    out[i] = static_cast<Site>(index % volume);
    index /= volume;
  }
  return out;
}

PotentialSpec PotentialSpec::on_site(int d, double w) {
  PotentialSpec s;
  s.d = d;
  s.entries[Coord(d, 0)] = w;
  return s;
}

PotentialSpec load_potential_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ValidationError(std::string("potential: invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("d") || !j.contains("entries"))
    throw ValidationError("potential: expected {\"d\", \"R\", \"entries\"}");
  PotentialSpec spec;
  if (!j["d"].is_number_integer()) throw ValidationError("potential: d must be an integer");
  spec.d = j["d"].get<int>();
  spec.R = j.value("R", 0);
  if (spec.d < 1) throw ValidationError("potential: d must be positive");
  if (spec.R != 0 && spec.R != 1) throw ValidationError("potential: R must be 0 or 1");
  if (!j["entries"].is_array()) throw ValidationError("potential: entries must be an array");
  std::map<Coord, double> given;
  for (const auto& e : j["entries"]) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_array() || !e[1].is_number())
      throw ValidationError("potential: each entry must be [[x...], value]");
    Coord x = e[0].get<Coord>();
    if (static_cast<int>(x.size()) != spec.d) throw ValidationError("potential: site dimension mismatch");
    const double val = e[1].get<double>();
    if (!(val >= 0.0) || !std::isfinite(val)) throw ValidationError("potential: values must be finite and >= 0");
    if (!given.emplace(x, val).second) throw ValidationError("potential: duplicate site");
  }
  for (const auto& [x, val] : given) {
    Coord mx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) mx[i] = -x[i];
    auto it = given.find(mx);
    if (it != given.end() && it->second != val) throw ValidationError("potential: v(x) != v(-x)");
    bool origin = true;
    for (int c : x) origin = origin && c == 0;
    if (origin && spec.R == 1) throw ValidationError("potential: origin lies inside the hard core");
    spec.entries[x] = val;
    spec.entries[mx] = val;
  }
  return spec;
}

PotentialSpec load_potential_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("potential: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_potential_json(ss.str());
}

namespace {
constexpr double kTailTol = 1e-14;
}

namespace {

// Visits k ∈ Z^d with max_j |k_j| = K exactly once: j0 is the first index with |k_j0| = K.
template <class F>
void for_each_shell_point(int d, int K, F&& f) {
  Coord k(d, 0);
  if (K == 0) {
    f(k);
    return;
  }
  for (int j0 = 0; j0 < d; ++j0)
    for (int sign : {-1, 1}) {
      // coordinates before j0 range over (-K, K), after j0 over [-K, K]
      std::function<void(int)> rec = [&](int j) {
        if (j == d) {
          f(k);
          return;
        }
        if (j == j0) {
          k[j] = sign * K;
          rec(j + 1);
          return;
        }
        const int lo = j < j0 ? -K + 1 : -K, hi = j < j0 ? K - 1 : K;
        for (int c = lo; c <= hi; ++c) {
          k[j] = c;
          rec(j + 1);
        }
      };
      rec(0);
    }
}

}  // namespace

PeriodizedPotential periodize_potential(const PotentialSpec& spec, const Torus& torus) {
  if (spec.d != torus.dim()) throw ValidationError("potential dimension does not match torus");
  PeriodizedPotential out{torus, spec.R, std::vector<double>(torus.volume(), 0.0)};
  const int d = torus.dim(), L = torus.side();
  if (!spec.profile) {
    for (const auto& [x, val] : spec.entries) out.v[torus.index(x)] += val;
  } else {
    // Sum over growing shells max_j |k_j| = K until a shell adds < kTailTol per site.
    const int max_shell = d == 1 ? 1000000 : (d == 2 ? 2000 : 150);
    for (Site s = 0; s < torus.volume(); ++s) {
      const Coord base = torus.coords(s);
      double acc = 0.0;
      bool converged = false;
      for (int K = 0; K <= max_shell; ++K) {
        double shell = 0.0;
        for_each_shell_point(d, K, [&](const Coord& k) {
          Coord y(d);
          bool origin = true;
          for (int j = 0; j < d; ++j) {
            y[j] = base[j] + k[j] * L;
            origin = origin && y[j] == 0;
          }
          if (spec.R == 1 && origin) return;
          const double val = spec.profile(y);
          if (!(val >= 0.0)) throw ValidationError("potential profile must be nonnegative");
          shell += val;
        });
        acc += shell;
        if (K > 0 && shell < kTailTol) {
          converged = true;
          break;
        }
      }
      if (!converged) throw ValidationError("potential profile is not summable within the tail budget");
      out.v[s] = acc;
    }
  }
  if (spec.R == 1) out.v[0] = kInf;
  return out;
}

double PeriodizedPotential::l1_finite() const {
  double acc = 0.0;
  for (Site s = 0; s < v.size(); ++s)
    if (!(R == 1 && s == 0)) acc += std::abs(v[s]);
  return acc;
}

bool PeriodizedPotential::is_zero() const {
  for (double x : v)
    if (x != 0.0) return false;
  return true;
}

std::vector<std::pair<Site, double>> PeriodizedPotential::off_origin() const {
  std::vector<std::pair<Site, double>> out;
  for (Site s = 1; s < v.size(); ++s)
    if (v[s] != 0.0) out.emplace_back(s, v[s]);
  return out;
}

PeriodizedPotential scaled(const PeriodizedPotential& p, double factor) {
  PeriodizedPotential q = p;
  for (Site s = 0; s < q.v.size(); ++s)
    if (!(q.R == 1 && s == 0)) q.v[s] *= factor;
  return q;
}

PeriodizedPotential v_tilde(const PeriodizedPotential& p) {
  PeriodizedPotential q = p;
  if (q.R == 1) q.v[0] = 0.0;
  q.R = 0;
  return q;
}

PositiveTypeReport check_positive_type(const PeriodizedPotential& vL) {
  if (vL.hard_core()) throw ValidationError("positive type is undefined for a hard-core potential");
  const Torus& t = vL.torus;
  const double w = 2.0 * std::numbers::pi / t.side();
  PositiveTypeReport rep;
  rep.min_coefficient = kInf;
  for (Site k = 0; k < t.volume(); ++k) {
    const Coord kk = t.coords(k);
    double acc = 0.0;
    for (Site x = 0; x < t.volume(); ++x) {
      const Coord xx = t.coords(x);
      double phase = 0.0;
      for (int j = 0; j < t.dim(); ++j) phase += w * kk[j] * xx[j];
      acc += vL.v[x] * std::cos(phase);
    }
    rep.min_coefficient = std::min(rep.min_coefficient, acc);
  }
  rep.positive = rep.min_coefficient >= -1e-10;
  return rep;
}

}  // namespace looplab
