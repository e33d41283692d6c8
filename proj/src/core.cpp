#include "looplab/core.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace looplab {

Rng make_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t worker) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
                    static_cast<std::uint32_t>(worker), 0x5eedu};
  return Rng(seq);
}

void Welford::add(double x) {
  ++n;
  const double delta = x - mean;
  mean += delta / static_cast<double>(n);
  m2 += delta * (x - mean);
}

void Welford::merge(const Welford& o) {
  if (o.n == 0) return;
  if (n == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
  const double delta = o.mean - mean;
  const double tot = na + nb;
  mean += delta * nb / tot;
  m2 += o.m2 + delta * delta * na * nb / tot;
  n += o.n;
}

double Welford::std_error() const {
  return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
}

McEstimate to_estimate(const Welford& w, std::uint64_t seed) {
  McEstimate e;
  e.mean = w.mean;
  e.std_error = w.std_error();
  e.n_samples = w.n;
  e.seed = seed;
  return e;
}

McEstimate ratio(const McEstimate& a, const McEstimate& b) {
  McEstimate r;
  r.mean = a.mean / b.mean;
  const double ra = a.mean != 0.0 ? a.std_error / a.mean : 0.0;
  const double rb = b.std_error / b.mean;
  r.std_error = std::abs(r.mean) * std::sqrt(ra * ra + rb * rb);
  if (a.mean == 0.0) r.std_error = a.std_error / std::abs(b.mean);
  r.n_samples = a.n_samples;
  r.seed = a.seed;
  return r;
}

std::vector<Welford> run_samples(std::size_t n, std::size_t dim, std::uint64_t seed, std::uint64_t tag,
                                 unsigned workers, const SampleFn& fn) {
  if (workers == 0) workers = 1;
  std::vector<std::vector<Welford>> acc(workers, std::vector<Welford>(dim));
  std::vector<std::exception_ptr> errors(workers);
  auto body = [&](unsigned w) {
    try {
      const std::size_t lo = n * w / workers, hi = n * (w + 1) / workers;
      Rng rng = make_stream(seed, tag, w);
      std::vector<double> out(dim);
      for (std::size_t i = lo; i < hi; ++i) {
        std::fill(out.begin(), out.end(), 0.0);
        fn(rng, out);
        for (std::size_t k = 0; k < dim; ++k) acc[w][k].add(out[k]);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<Welford> total(dim);
  for (unsigned w = 0; w < workers; ++w)
    for (std::size_t k = 0; k < dim; ++k) total[k].merge(acc[w][k]);
  return total;
}

McEstimate run_scalar(std::size_t n, std::uint64_t seed, std::uint64_t tag, unsigned workers,
                      const std::function<double(Rng&)>& fn) {
  auto w = run_samples(n, 1, seed, tag, workers, [&](Rng& rng, std::vector<double>& out) { out[0] = fn(rng); });
  return to_estimate(w[0], seed);
}

}  // namespace looplab
