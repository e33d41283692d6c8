#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace looplab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PrecisionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SamplingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

// Independent stream for (seed, tag, worker).
Rng make_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t worker);

// Uniform on (0,1], never returns 0.
inline double uniform_pos(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

// e^{-x} with e^{-inf} = 0.
inline double boltzmann(double energy) { return energy == kInf ? 0.0 : std::exp(-energy); }

struct Welford {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x);
  void merge(const Welford& o);
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double std_error() const;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  std::map<std::string, double> meta;
};

McEstimate to_estimate(const Welford& w, std::uint64_t seed);

// Ratio a/b of independent estimates, errors in quadrature.
McEstimate ratio(const McEstimate& a, const McEstimate& b);

// Runs n samples split into `workers` contiguous blocks; block w uses
// make_stream(seed, tag, w). fn fills `out` (size dim) for one sample.
// Per-component Welford accumulators are merged in worker order.
using SampleFn = std::function<void(Rng&, std::vector<double>& out)>;
std::vector<Welford> run_samples(std::size_t n, std::size_t dim, std::uint64_t seed, std::uint64_t tag,
                                 unsigned workers, const SampleFn& fn);

// Scalar convenience wrapper.
McEstimate run_scalar(std::size_t n, std::uint64_t seed, std::uint64_t tag, unsigned workers,
                      const std::function<double(Rng&)>& fn);

}  // namespace looplab
