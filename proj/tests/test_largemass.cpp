#include <doctest.h>

#include <cmath>

#include "looplab/largemass.hpp"

using namespace looplab;

namespace {

std::shared_ptr<const PeriodizedPotential> pot(const Torus& t, int R, std::map<Coord, double> entries) {
  PotentialSpec s;
  s.d = t.dim();
  s.R = R;
  s.entries = std::move(entries);
  return std::make_shared<const PeriodizedPotential>(periodize_potential(s, t));
}

LmParams params(double kappa0, std::shared_ptr<const PeriodizedPotential> v) {
  LmParams p;
  p.kappa0 = kappa0;
  p.potential = std::move(v);
  return p;
}

const double a1 = std::exp(-1.0);

}  // namespace

TEST_CASE("free large-mass gas") {
  Torus t(1, 3);
  auto p = params(1.0, pot(t, 0, {}));
  const auto z = z_lm(p);
  CHECK(z.relative == doctest::Approx(1.0).epsilon(1e-11));
  CHECK(z.tail <= 1e-12);
  CHECK(gibbs_potential_lm(p) == doctest::Approx(0.0).epsilon(1e-11));
  // free occupation is geometric: E[K] = a/(1-a)
  CHECK(gamma_lm(p, 1, {1}, {1}) == doctest::Approx(a1 / (1 - a1)).epsilon(1e-11));
  // E[C(K,2)] = a²/(1-a)²
  CHECK(gamma_lm(p, 2, {0, 0}, {0, 0}) == doctest::Approx(2 * a1 * a1 / ((1 - a1) * (1 - a1))).epsilon(1e-11));

  // labeled sums grow fast in k_max and n_max: use heavier particles there
  auto pl = params(3.0, nullptr);
  pl.tol = 1e-9;
  Torus t2(1, 2);
  pl.potential = pot(t2, 0, {});
  CHECK(z_lm_labeled(pl).relative == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("hard core on three sites") {
  Torus t(1, 3);
  auto p = params(1.0, pot(t, 1, {}));
  const double zc = std::pow(1 - std::exp(-2.0), 3);
  const auto z = z_lm(p);
  CHECK(std::abs(z.relative - zc) < 1e-10);
  CHECK(z.tail == 0.0);
  CHECK(std::abs(z_lm_labeled(p).relative - zc) < 1e-10);
  CHECK(std::abs(gibbs_potential_lm(p) - std::log(1 - std::exp(-2.0))) < 1e-10);
  for (Site x = 0; x < 3; ++x) {
    CHECK(std::abs(gamma_lm(p, 1, {x}, {x}) - a1 / (1 + a1)) < 1e-10);
    CHECK(std::abs(gamma_lm_labeled(p, 1, {x}, {x}) - a1 / (1 + a1)) < 1e-10);
  }
  // two distinct sites occupied: a²/(1+a)², double occupation impossible
  CHECK(std::abs(gamma_lm(p, 2, {0, 1}, {1, 0}) - a1 * a1 / ((1 + a1) * (1 + a1))) < 1e-10);
  CHECK(gamma_lm(p, 2, {0, 0}, {0, 0}) == 0.0);
  CHECK(std::abs(gamma_lm_labeled(p, 2, {0, 1}, {0, 1}) - gamma_lm(p, 2, {0, 1}, {0, 1})) < 1e-10);

  const Kernel K = gamma_lm_kernel(p, 1);
  CHECK((K - (a1 / (1 + a1)) * Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-10);
}

TEST_CASE("occupation and labeled routes agree") {
  Torus t(1, 2);
  auto p = params(3.0, pot(t, 0, {{{0}, 0.3}, {{1}, 0.2}}));
  p.tol = 1e-10;
  const auto zo = z_lm(p);
  const auto zl = z_lm_labeled(p);
  CHECK(zo.relative == doctest::Approx(zl.relative).epsilon(1e-8));
  CHECK(gamma_lm(p, 1, {0}, {0}) == doctest::Approx(gamma_lm_labeled(p, 1, {0}, {0})).epsilon(1e-7));
  CHECK(gamma_lm(p, 2, {0, 1}, {1, 0}) == doctest::Approx(gamma_lm_labeled(p, 2, {0, 1}, {1, 0})).epsilon(1e-7));
  CHECK(gamma_lm(p, 2, {1, 1}, {1, 1}) == doctest::Approx(gamma_lm_labeled(p, 2, {1, 1}, {1, 1})).epsilon(1e-7));

  // hard core with a neighbour repulsion on L=4
  Torus t4(1, 4);
  auto h = params(0.7, pot(t4, 1, {{{1}, 0.4}, {{-1}, 0.4}}));
  CHECK(z_lm(h).relative == doctest::Approx(z_lm_labeled(h).relative).epsilon(1e-12));
  CHECK(gamma_lm(h, 2, {0, 2}, {2, 0}) == doctest::Approx(gamma_lm_labeled(h, 2, {0, 2}, {2, 0})).epsilon(1e-12));
}

TEST_CASE("kernel structure and monotonicity") {
  Torus t(1, 3);
  auto p = params(1.0, pot(t, 0, {{{0}, 0.3}}));
  CHECK(gamma_lm(p, 1, {0}, {1}) == 0.0);
  CHECK(gamma_lm(p, 2, {0, 1}, {0, 2}) == 0.0);
  const Kernel K = gamma_lm_kernel(p, 2);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 9; ++j) {
      auto xs = tuple_sites(i, 2, 3), ys = tuple_sites(j, 2, 3);
      std::sort(xs.begin(), xs.end());
      std::sort(ys.begin(), ys.end());
      if (xs != ys) CHECK(K(i, j) == 0.0);
      else CHECK(K(i, j) > 0.0);
    }
  CHECK(K(tuple_index({0, 1}, 3), tuple_index({1, 0}, 3)) ==
        doctest::Approx(gamma_lm(p, 2, {0, 1}, {1, 0})).epsilon(1e-12));
  // repeated site: two permutations match
  CHECK(K(tuple_index({2, 2}, 3), tuple_index({2, 2}, 3)) ==
        doctest::Approx(gamma_lm(p, 2, {2, 2}, {2, 2})).epsilon(1e-12));

  double prev = 1.0;
  for (double w : {0.0, 0.1, 0.3, 1.0}) {
    const auto z = z_lm(params(1.0, pot(t, 0, {{{0}, w}, {{1}, w / 2}, {{-1}, w / 2}})));
    CHECK(z.relative <= prev + 1e-14);
    CHECK(z.relative > 0.0);
    CHECK(std::log(z.relative) <= 1e-14);
    prev = z.relative;
  }
}

TEST_CASE("truncation tails") {
  Torus t(1, 2);
  auto p = params(2.0, pot(t, 0, {{{0}, 0.1}}));
  double prev = 1.0;
  for (int k : {2, 4, 8}) {
    p.k_max = k;
    p.n_max = 6;
    const auto z = z_lm_labeled(p);
    CHECK(z.tail < prev);
    prev = z.tail;
  }
  p.k_max = 8;
  prev = 1.0;
  for (int n : {2, 4, 8}) {
    p.n_max = n;
    const auto z = z_lm_labeled(p);
    CHECK(z.tail < prev);
    prev = z.tail;
  }
}

TEST_CASE("weighted particle view") {
  Torus t(1, 4);
  auto v = pot(t, 0, {{{0}, 0.5}, {{1}, 0.25}, {{-1}, 0.25}});
  const double nu = 0.1;
  const std::vector<WeightedParticle> ps{{1, 0}, {3, 1}, {2, 3}};
  const LoopConfig loops = loops_from_particles(ps, nu);
  CHECK(weighted_particle_view(loops, nu) == ps);
  const auto ip = InteractionParams::largemass(nu, 1.0, v);
  for (const auto& a : ps)
    for (const auto& b : ps) {
      const auto la = loops_from_particles({a}, nu)[0], lb = loops_from_particles({b}, nu)[0];
      CHECK(lm_pair_energy(a, b, *v) == doctest::Approx(v_ginibre_pair(la, lb, ip)).epsilon(1e-12));
    }
  CHECK_THROWS_AS(weighted_particle_view({constant_path(0, 0.15)}, nu), ValidationError);

  auto hard = pot(t, 1, {});
  const auto hp = InteractionParams::largemass(nu, 1.0, hard);
  CHECK(v_total_largemass(loops_from_particles({{2, 0}}, nu), hp) == kInf);
  CHECK(v_total_largemass(loops_from_particles({{1, 0}}, nu), hp) == 0.0);
  CHECK(v_lm({2}, {0}, *hard) == kInf);
}

TEST_CASE("large-mass validation") {
  Torus t(1, 3);
  CHECK_THROWS_AS(z_lm(params(0.0, pot(t, 0, {}))), ValidationError);
  CHECK_THROWS_AS(z_lm(params(1.0, pot(t, 0, {{{0}, -0.1}}))), ValidationError);
  CHECK_THROWS_AS(z_lm(LmParams{}), ValidationError);
  auto p = params(1.0, pot(t, 0, {}));
  CHECK_THROWS_AS(gamma_lm(p, 1, {0, 1}, {0}), ValidationError);
  CHECK_THROWS_AS(gamma_lm(p, 1, {5}, {5}), ValidationError);
}
