#include <doctest.h>

#include <cmath>
#include <random>

#include "looplab/paths.hpp"
#include "test_util.hpp"

using namespace looplab;

TEST_CASE("position and local time") {
  Path p{0, 1.0, {{0.5, 1}}};
  CHECK(position(p, 0.5) == 1);
  CHECK(position(p, 0.49) == 0);
  CHECK(position(p, 0.0) == 0);
  CHECK(position(p, 1.0) == 1);
  CHECK_THROWS_AS(position(p, 1.5), std::out_of_range);

  Path q{0, 1.0, {{0.2, 1}, {0.7, 2}}};
  CHECK(position(q, 0.69) == 1);
  CHECK(local_time(q, 0) == doctest::Approx(0.2));

  Path c = constant_path(3, 2.0);
  CHECK(local_time(c, 3) == 2.0);
  CHECK(local_time(c, 0) == 0.0);

  Path r{0, 1.5, {{0.2, 1}}};
  CHECK(local_time(r, 0) == doctest::Approx(0.2));
  CHECK(local_time(r, 1) == doctest::Approx(1.3));

  Torus t(2, 4);
  Rng rng = make_stream(1, 0, 0);
  for (int i = 0; i < 50; ++i) {
    Path w = sample_free_walk(t, 5, 3.7, rng);
    double sum = 0.0;
    for (Site s = 0; s < t.volume(); ++s) sum += local_time(w, s);
    CHECK(std::abs(sum - 3.7) < 1e-12);
    Site prev = w.start;
    double last = 0.0;
    for (const auto& j : w.jumps) {
      CHECK(j.t > last);
      CHECK(j.t < w.T);
      bool neighbor = false;
      for (int dir = 0; dir < t.num_steps(); ++dir) neighbor = neighbor || t.step(prev, dir) == j.site;
      CHECK(neighbor);
      prev = j.site;
      last = j.t;
    }
  }
}

TEST_CASE("path line format round trip") {
  Torus t(1, 5);
  Rng rng = make_stream(2, 0, 0);
  Path w = sample_free_walk(t, 2, 2.5, rng);
  Path back = from_line(to_line(w));
  CHECK(back.start == w.start);
  CHECK(back.T == w.T);
  REQUIRE(back.jumps.size() == w.jumps.size());
  for (std::size_t i = 0; i < w.jumps.size(); ++i) {
    CHECK(back.jumps[i].t == w.jumps[i].t);
    CHECK(back.jumps[i].site == w.jumps[i].site);
  }
  CHECK(to_line(Path{1, 1.0, {{0.25, 2}}}) == "1 1 0.25:2");
  CHECK_THROWS_AS(from_line("1 1 0.5:2 0.25:3"), ValidationError);
}

TEST_CASE("free walk on L=1 stays put") {
  Torus t(1, 1);
  Rng rng = make_stream(3, 0, 0);
  Path w = sample_free_walk(t, 0, 5.0, rng);
  for (const auto& j : w.jumps) CHECK(j.site == 0);
  CHECK(w.end() == 0);
}

TEST_CASE("jump count is Poisson(dT)") {
  Torus t(2, 5);
  Rng rng = make_stream(4, 0, 0);
  const int n = 100000;
  std::vector<double> counts(16, 0.0), probs(16, 0.0);
  for (int i = 0; i < n; ++i) {
    auto w = sample_free_walk(t, 0, 1.5, rng);
    counts[std::min<std::size_t>(w.jumps.size(), 15)] += 1.0;
  }
  double acc = 0.0;
  for (int k = 0; k < 15; ++k) {
    probs[k] = std::exp(-3.0 + k * std::log(3.0) - std::lgamma(k + 1.0));
    acc += probs[k];
  }
  probs[15] = 1.0 - acc;
  CHECK(chi2_pvalue(counts, probs) > 0.001);
}

TEST_CASE("endpoint law matches heat kernel") {
  Torus t(1, 5);
  HeatKernel hk(t);
  Rng rng = make_stream(5, 0, 0);
  for (double T : {0.3, 1.0, 2.2}) {
    std::vector<double> counts(5, 0.0);
    for (int i = 0; i < 100000; ++i) counts[sample_free_walk(t, 2, T, rng).end()] += 1.0;
    auto tab = hk.table(T);
    std::vector<double> probs(5);
    for (Site y = 0; y < 5; ++y) probs[y] = tab[t.diff(y, 2)];
    CHECK(chi2_pvalue(counts, probs) > 0.001);
  }
}

TEST_CASE("open path weighted sample") {
  Torus t(1, 4);
  const double nu = 0.5, kappa = 1.0;
  auto law = DurationLaw::ginibre(nu, kappa);
  HeatKernel hk(t);
  double exact = 0.0;
  for (int k = 1; k < 200; ++k) exact += std::exp(-kappa * nu * k) * hk.value(nu * k, 1);
  Rng rng = make_stream(6, 0, 0);
  Welford w;
  for (int i = 0; i < 200000; ++i) {
    auto s = open_path_weighted_sample(t, 0, 1, law, rng);
    w.add(s.value * s.normalization);
  }
  CHECK(std::abs(w.mean - exact) < 3.0 * w.std_error());

  // Symanzik law: resolvent of -Δ/2 + κ
  Eigen::MatrixXd A = -0.5 * laplacian_matrix(t) + kappa * Eigen::MatrixXd::Identity(4, 4);
  Eigen::MatrixXd G = A.inverse();
  auto slaw = DurationLaw::symanzik(kappa);
  for (Site y : {0u, 2u}) {
    Welford ws;
    for (int i = 0; i < 200000; ++i) {
      auto s = open_path_weighted_sample(t, 0, y, slaw, rng);
      ws.add(s.value * s.normalization);
    }
    CHECK(std::abs(ws.mean - G(y, 0)) < 3.0 * ws.std_error());
  }
  Torus t1(1, 1);
  auto s1 = open_path_weighted_sample(t1, 0, 0, law, rng);
  CHECK(s1.value == 1.0);
  CHECK_THROWS_AS(DurationLaw::ginibre(0.5, 0.0), ValidationError);
}

TEST_CASE("loop intensity masses") {
  Torus t1(1, 1);
  for (double nu : {0.1, 0.5}) {
    auto li = LoopIntensity::ginibre(t1, nu, 1.0);
    CHECK(std::abs(li->mass() + std::log(1.0 - std::exp(-nu))) < 1e-10);
  }
  // L = 1 Symanzik mass is the exponential integral E1(κε)
  for (double eps : {0.1, 0.02}) {
    auto li = LoopIntensity::symanzik(t1, 1.3, eps);
    CHECK(std::abs(li->mass() + std::expint(-1.3 * eps)) < 1e-8);
  }
  // Grid mass against direct summation with the heat kernel
  Torus t(2, 3);
  HeatKernel hk(t);
  auto li = LoopIntensity::ginibre(t, 0.25, 1.0);
  double direct = 0.0;
  for (int k = 1; k < 400; ++k) direct += std::exp(-0.25 * k) * hk.at_origin(0.25 * k) * 9.0 / k;
  CHECK(std::abs(li->mass() - direct) < 1e-8 * direct);
}

TEST_CASE("loop sampling: durations, closure, acceptance") {
  Torus t(1, 3);
  auto li = LoopIntensity::ginibre(t, 0.5, 0.5);
  Rng rng = make_stream(7, 0, 0);
  const std::size_t K = 12;
  std::vector<double> counts(K + 1, 0.0), probs(K + 1, 0.0);
  LoopIntensity::attempts = LoopIntensity::accepted = 0;
  double expected_acc = 0.0;
  HeatKernel hk(t);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    Path p = li->sample(rng);
    CHECK(p.closed());
    const auto k = static_cast<std::size_t>(std::round(p.T / 0.5));
    counts[std::min(k - 1, K)] += 1.0;
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    probs[k] = li->weights()[k] / li->mass();
    acc += probs[k];
  }
  probs[K] = 1.0 - acc;
  CHECK(chi2_pvalue(counts, probs) > 0.001);
  // mean bridge attempts per loop = E[1/ψ^T(0)]
  for (std::size_t k = 0; k < li->weights().size(); ++k)
    expected_acc += li->weights()[k] / li->mass() / hk.at_origin(0.5 * (k + 1));
  const double mean_attempts = static_cast<double>(LoopIntensity::attempts) / n;
  CHECK(std::abs(mean_attempts - expected_acc) < 0.02 * expected_acc);

  // Bridge acceptance probability at fixed T equals ψ^T(0)
  LoopIntensity::attempts = LoopIntensity::accepted = 0;
  for (int i = 0; i < 20000; ++i) sample_bridge(t, 1, 1.7, rng);
  const double rate = 20000.0 / static_cast<double>(LoopIntensity::attempts);
  const double p0 = hk.at_origin(1.7);
  const double se = std::sqrt(p0 * (1 - p0) / LoopIntensity::attempts);
  CHECK(std::abs(rate - p0) < 3.0 * se);
}

TEST_CASE("symanzik duration sampler matches tabulated law") {
  Torus t(1, 3);
  auto li = LoopIntensity::symanzik(t, 1.0, 0.05);
  Rng rng = make_stream(8, 0, 0);
  // bins in T: [ε,0.1),[0.1,0.3),[0.3,1),[1,3),[3,∞)
  std::vector<double> cuts{0.05, 0.1, 0.3, 1.0, 3.0, 1e9};
  std::vector<double> counts(5, 0.0);
  for (int i = 0; i < 100000; ++i) {
    const double T = li->sample_duration(rng);
    CHECK(T >= 0.05);
    for (int b = 0; b < 5; ++b)
      if (T < cuts[b + 1]) {
        counts[b] += 1.0;
        break;
      }
  }
  std::vector<double> probs(5, 0.0);
  // quadrature of the density on each bin
  for (int b = 0; b < 5; ++b) {
    const double lo = cuts[b], hi = std::min(cuts[b + 1], 60.0);
    const int m = 20000;
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
      const double T = lo + (hi - lo) * (i + 0.5) / m;
      acc += li->density(T) * (hi - lo) / m;
    }
    probs[b] = acc / li->mass();
  }
  CHECK(chi2_pvalue(counts, probs) > 0.001);
}
