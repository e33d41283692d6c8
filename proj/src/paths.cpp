#include "looplab/paths.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

namespace looplab {

thread_local std::size_t LoopIntensity::attempts = 0;
thread_local std::size_t LoopIntensity::accepted = 0;

Path constant_path(Site x, double T) { return Path{x, T, {}}; }

Site position(const Path& path, double t) {
  if (t < 0.0 || t > path.T) throw std::out_of_range("position: t outside [0, T]");
  auto it = std::upper_bound(path.jumps.begin(), path.jumps.end(), t,
                             [](double v, const Jump& j) { return v < j.t; });
  return it == path.jumps.begin() ? path.start : std::prev(it)->site;
}

double local_time(const Path& path, Site site) {
  double acc = 0.0, t0 = 0.0;
  Site cur = path.start;
  for (const auto& j : path.jumps) {
    if (cur == site) acc += j.t - t0;
    t0 = j.t;
    cur = j.site;
  }
  if (cur == site) acc += path.T - t0;
  return acc;
}

void add_local_times(const Path& path, std::vector<double>& acc) {
  double t0 = 0.0;
  Site cur = path.start;
  for (const auto& j : path.jumps) {
    acc[cur] += j.t - t0;
    t0 = j.t;
    cur = j.site;
  }
  acc[cur] += path.T - t0;
}

Path sample_free_walk(const Torus& torus, Site x, double T, Rng& rng) {
  if (!(T > 0.0)) throw ValidationError("sample_free_walk needs T > 0");
  Path p{x, T, {}};
  const double rate = torus.dim();
  const int nsteps = torus.num_steps();
  double t = -std::log(uniform_pos(rng)) / rate;
  Site cur = x;
  while (t < T) {
    cur = torus.step(cur, static_cast<int>(uniform_index(rng, nsteps)));
    p.jumps.push_back({t, cur});
    t += -std::log(uniform_pos(rng)) / rate;
  }
  return p;
}

std::string to_line(const Path& path) {
  std::ostringstream os;
  os << std::setprecision(17) << path.start << ' ' << path.T;
  for (const auto& j : path.jumps) os << ' ' << j.t << ':' << j.site;
  return os.str();
}

Path from_line(const std::string& line) {
  std::istringstream is(line);
  Path p;
  if (!(is >> p.start >> p.T)) throw ValidationError("path line: expected 'x0 T ...'");
  std::string tok;
  double last = 0.0;
  while (is >> tok) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos) throw ValidationError("path line: bad jump token " + tok);
    Jump j{std::stod(tok.substr(0, colon)), static_cast<Site>(std::stoul(tok.substr(colon + 1)))};
    if (!(j.t > last) || !(j.t < p.T)) throw ValidationError("path line: jump times must increase inside (0,T)");
    last = j.t;
    p.jumps.push_back(j);
  }
  return p;
}

DurationLaw DurationLaw::ginibre(double nu, double kappa) {
  if (!(nu > 0.0) || !(kappa > 0.0)) throw ValidationError("duration law needs ν > 0 and κ > 0");
  return {Kind::grid, nu, kappa};
}

DurationLaw DurationLaw::symanzik(double kappa) {
  if (!(kappa > 0.0)) throw ValidationError("duration law needs κ > 0");
  return {Kind::exponential, 0.0, kappa};
}

double DurationLaw::normalization() const {
  if (kind == Kind::grid) {
    const double a = std::exp(-kappa * nu);
    return a / (1.0 - a);
  }
  return 1.0 / kappa;
}

double DurationLaw::sample(Rng& rng) const {
  if (kind == Kind::grid) {
    // geometric on {1,2,...} with ratio a = e^{-κν}
    const double k = 1.0 + std::floor(std::log(uniform_pos(rng)) / (-kappa * nu));
    return k * nu;
  }
  return -std::log(uniform_pos(rng)) / kappa;
}

WeightedSample open_path_weighted_sample(const Torus& torus, Site x, Site y, const DurationLaw& law, Rng& rng,
                                         const std::function<double(const Path&)>& f) {
  WeightedSample s;
  s.normalization = law.normalization();
  s.path = sample_free_walk(torus, x, law.sample(rng), rng);
  if (s.path.end() == y) s.value = f ? f(s.path) : 1.0;
  return s;
}

namespace {
constexpr double kTailRel = 1e-12;
constexpr double kCellRatio = 1.02;
}  // namespace

std::shared_ptr<LoopIntensity> LoopIntensity::ginibre(const Torus& torus, double nu, double kappa, std::size_t max_k) {
  if (!(nu > 0.0) || !(kappa > 0.0)) throw ValidationError("ginibre intensity needs ν > 0 and κ > 0");
  std::shared_ptr<LoopIntensity> li(new LoopIntensity(torus));
  li->kind_ = Kind::ginibre;
  li->nu_ = nu;
  li->kappa_ = kappa;
  const double a = std::exp(-kappa * nu);
  const double vol = static_cast<double>(torus.volume());
  double mass = 0.0;
  for (std::size_t k = 1;; ++k) {
    const double w = std::pow(a, static_cast<double>(k)) * li->hk_.at_origin(nu * k) * vol / k;
    li->weights_.push_back(w);
    mass += w;
    const double tail = vol * std::pow(a, k + 1.0) / ((k + 1.0) * (1.0 - a));
    if (tail < kTailRel * mass || k == max_k) {
      li->tail_ = tail;
      break;
    }
    if (k > 50000000) throw DivergenceError("ginibre intensity: duration law does not truncate");
  }
  li->mass_ = mass;
  double acc = 0.0;
  for (double w : li->weights_) li->cdf_.push_back(acc += w / mass);
  return li;
}

std::shared_ptr<LoopIntensity> LoopIntensity::symanzik(const Torus& torus, double kappa, double eps) {
  if (!(kappa > 0.0) || !(eps > 0.0)) throw ValidationError("symanzik intensity needs κ > 0 and ε > 0");
  std::shared_ptr<LoopIntensity> li(new LoopIntensity(torus));
  li->kind_ = Kind::symanzik;
  li->kappa_ = kappa;
  li->eps_ = eps;
  const double vol = static_cast<double>(torus.volume());
  double mass = 0.0;
  double lo = eps;
  li->edges_.push_back(lo);
  while (true) {
    const double hi = lo * kCellRatio + 1e-3 * std::min(1.0, 1.0 / kappa);
    const double m = boost::math::quadrature::gauss<double, 30>::integrate(
        [&](double T) { return li->density(T); }, lo, hi);
    li->weights_.push_back(m);
    li->edges_.push_back(hi);
    mass += m;
    lo = hi;
    const double tail = vol * std::exp(-kappa * lo) / (kappa * lo);
    if (tail < kTailRel * mass) {
      li->tail_ = tail;
      break;
    }
    if (li->weights_.size() > 1000000) throw DivergenceError("symanzik intensity: duration law does not truncate");
  }
  li->mass_ = mass;
  double acc = 0.0;
  for (double w : li->weights_) li->cdf_.push_back(acc += w / mass);
  return li;
}

double LoopIntensity::density(double T) const {
  return std::exp(-kappa_ * T) * hk_.at_origin(T) * static_cast<double>(torus_.volume()) / T;
}

double LoopIntensity::sample_duration(Rng& rng) const {
  const double u = uniform01(rng);
  std::size_t i = static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
  if (i >= cdf_.size()) i = cdf_.size() - 1;
  if (kind_ == Kind::ginibre) return nu_ * static_cast<double>(i + 1);
  // Within the cell the density is decreasing: rejection against its left value.
  const double lo = edges_[i], hi = edges_[i + 1];
  const double fmax = density(lo);
  for (;;) {
    const double T = lo + (hi - lo) * uniform01(rng);
    if (uniform01(rng) * fmax <= density(T)) return T;
  }
}

Path sample_bridge(const Torus& torus, Site x, double T, Rng& rng, std::size_t max_attempts) {
  for (std::size_t n = 0; n < max_attempts; ++n) {
    ++LoopIntensity::attempts;
    Path p = sample_free_walk(torus, x, T, rng);
    if (p.end() == x) {
      ++LoopIntensity::accepted;
      return p;
    }
  }
  throw SamplingError("bridge rejection budget exceeded (T = " + std::to_string(T) + ")");
}

Path LoopIntensity::sample(Rng& rng) const {
  const double T = sample_duration(rng);
  const Site x = static_cast<Site>(uniform_index(rng, torus_.volume()));
  return sample_bridge(torus_, x, T, rng);
}

LoopConfig sample_poisson_config(const LoopIntensity& intensity, Rng& rng) {
  std::poisson_distribution<long> pois(intensity.mass());
  const long n = intensity.mass() > 0.0 ? pois(rng) : 0;
  LoopConfig cfg;
  cfg.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) cfg.push_back(intensity.sample(rng));
  return cfg;
}

}  // namespace looplab
