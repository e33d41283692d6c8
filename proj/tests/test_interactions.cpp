#include <doctest.h>

#include <cmath>

#include "looplab/interactions.hpp"

using namespace looplab;

namespace {

std::shared_ptr<const PeriodizedPotential> make_pot(const Torus& t, std::map<Coord, double> entries, int R = 0) {
  PotentialSpec s;
  s.d = t.dim();
  s.R = R;
  s.entries = std::move(entries);
  return std::make_shared<PeriodizedPotential>(periodize_potential(s, t));
}

double riemann_cl(const Path& a, const Path& b, const PeriodizedPotential& v, double dt) {
  double acc = 0.0;
  for (double s = dt / 2; s < a.T; s += dt)
    for (double u = dt / 2; u < b.T; u += dt) acc += v.at(v.torus.diff(position(a, s), position(b, u)));
  return acc * dt * dt;
}

double riemann_ginibre(const Path& a, const Path& b, const InteractionParams& p, double dt) {
  const std::size_t ka = window_count(a, p.nu), kb = window_count(b, p.nu);
  const auto& v = *p.potential;
  double acc = 0.0;
  for (double t = dt / 2; t < p.nu; t += dt)
    for (std::size_t r = 0; r < ka; ++r)
      for (std::size_t s = 0; s < kb; ++s)
        acc += v.at(v.torus.diff(position(a, r * p.nu + t), position(b, s * p.nu + t)));
  return p.lambda / p.nu * acc * dt;
}

Path random_path_with_jumps(const Torus& t, Site x, double T, std::size_t jumps, Rng& rng) {
  for (;;) {
    Path p = sample_free_walk(t, x, T, rng);
    if (p.jumps.size() == jumps) return p;
  }
}

}  // namespace

TEST_CASE("classical pair examples") {
  Torus t(1, 5);
  auto v = make_pot(t, {{{0}, 0.5}, {{1}, 0.2}, {{-1}, 0.2}});
  CHECK(v_cl_pair(constant_path(0, 2.0), constant_path(1, 3.0), *v) == doctest::Approx(6.0 * 0.2));
  CHECK(v_cl_pair(constant_path(2, 1.5), constant_path(2, 1.5), *v) == doctest::Approx(1.5 * 1.5 * 0.5));
  Rng rng = make_stream(11, 0, 0);
  for (int rep = 0; rep < 3; ++rep) {
    Path a = random_path_with_jumps(t, 0, 2.0, 3, rng), b = random_path_with_jumps(t, 1, 1.7, 3, rng);
    const double exact = v_cl_pair(a, b, *v);
    CHECK(std::abs(exact - riemann_cl(a, b, *v, 1e-3)) < 5e-3 * exact);
    CHECK(v_cl_pair(a, b, *v) == doctest::Approx(v_cl_pair(b, a, *v)).epsilon(1e-14));
  }
}

TEST_CASE("ginibre pair examples") {
  Torus t(1, 5);
  auto v = make_pot(t, {{{0}, 0.5}, {{1}, 0.2}, {{-1}, 0.2}});
  const double nu = 0.25;
  auto p = InteractionParams::generic(nu, 0.7, v);
  CHECK(v_ginibre_pair(constant_path(0, 0.75), constant_path(1, 0.5), p) ==
        doctest::Approx(0.7 / (nu * nu) * 0.75 * 0.5 * 0.2));
  auto p0 = InteractionParams::generic(nu, 0.0, v);
  CHECK(v_ginibre_pair(constant_path(0, 0.75), constant_path(0, 0.5), p0) == 0.0);
  CHECK_THROWS_AS(v_ginibre_pair(constant_path(0, 0.3), constant_path(0, 0.5), p), ValidationError);

  Rng rng = make_stream(12, 0, 0);
  for (int rep = 0; rep < 4; ++rep) {
    Path a = sample_free_walk(t, 0, 1.0, rng), b = sample_free_walk(t, 2, 0.75, rng);
    const double exact = v_ginibre_pair(a, b, p);
    const double approx = riemann_ginibre(a, b, p, 1e-5);
    CHECK(std::abs(exact - approx) <= 1e-3 * std::max(exact, 1e-3));
    CHECK(exact == doctest::Approx(v_ginibre_pair(b, a, p)).epsilon(1e-13));
  }
  // constant-path collapse with λ = 1
  auto p1 = InteractionParams::generic(nu, 1.0, v);
  CHECK(v_ginibre_pair(constant_path(3, 1.0), constant_path(4, 0.5), p1) ==
        doctest::Approx(1.0 * 0.5 * 0.2 / (nu * nu)).epsilon(1e-14));
}

TEST_CASE("total interaction") {
  Torus t(1, 5);
  auto v = make_pot(t, {{{0}, 0.5}, {{2}, 0.1}, {{-2}, 0.1}});
  auto cl = [&](const Path& a, const Path& b) { return v_cl_pair(a, b, *v); };
  CHECK(v_total({}, cl) == 0.0);
  CHECK(v_total({constant_path(1, 2.0)}, cl) == doctest::Approx(0.5 * 4.0 * 0.5));
  CHECK(v_total({constant_path(1, 2.0), constant_path(3, 1.0)}, cl) ==
        doctest::Approx(0.5 * (4.0 + 1.0) * 0.5 + 2.0 * 0.1));

  Rng rng = make_stream(13, 0, 0);
  auto p = InteractionParams::generic(0.5, 0.3, v);
  auto gp = [&](const Path& a, const Path& b) { return v_ginibre_pair(a, b, p); };
  for (int rep = 0; rep < 20; ++rep) {
    LoopConfig A, B;
    for (int i = 0; i < 3; ++i) A.push_back(sample_free_walk(t, i, 0.5 * (1 + i), rng));
    for (int i = 0; i < 2; ++i) B.push_back(sample_free_walk(t, 2 * i, 1.0, rng));
    const LoopConfig AB = join(A, B);
    // fast evaluators agree with the pairwise definitions
    CHECK(energy_cl(AB, *v) == doctest::Approx(v_total(AB, cl)).epsilon(1e-12));
    CHECK(energy_ginibre(AB, p) == doctest::Approx(v_total(AB, gp)).epsilon(1e-12));
    // superadditivity: cross terms are nonnegative
    CHECK(v_total(AB, gp) - v_total(A, gp) - v_total(B, gp) >= -1e-12);
    CHECK(v_total(AB, cl) - v_total(A, cl) - v_total(B, cl) >= -1e-12);
  }
}

TEST_CASE("large-mass interaction") {
  Torus t(1, 4);
  const double nu = 0.2;
  auto hc = make_pot(t, {{{1}, 0.3}, {{-1}, 0.3}}, 1);
  auto p = InteractionParams::largemass(nu, 1.0, hc);
  CHECK(v_total_largemass({constant_path(0, nu)}, p) == 0.0);
  CHECK(v_total_largemass({constant_path(0, 2 * nu)}, p) == kInf);
  CHECK(v_total_largemass({constant_path(0, nu), constant_path(0, nu)}, p) == kInf);
  CHECK(v_total_largemass({constant_path(0, nu), constant_path(1, 2 * nu)}, p) == kInf);
  CHECK(v_total_largemass({constant_path(0, nu), constant_path(1, nu)}, p) == doctest::Approx(0.3));
  CHECK(energy_ginibre({constant_path(0, nu), constant_path(1, nu)}, p) == doctest::Approx(0.3));
  CHECK(energy_ginibre({constant_path(0, 2 * nu)}, p) == kInf);
  CHECK(energy_ginibre({constant_path(0, nu)}, p) == 0.0);

  // R = 0: ½ (v(0)/ν²)(T² - Tν) + v(0)T/(2ν) against direct window sums
  auto soft = make_pot(t, {{{0}, 0.4}});
  auto q = InteractionParams::largemass(nu, 1.0, soft);
  for (int k = 1; k <= 5; ++k) {
    const double T = k * nu;
    double direct = 0.0;
    for (int r = 0; r < k; ++r)
      for (int s = 0; s < k; ++s)
        if (r != s) direct += nu * 0.4;
    direct = 0.5 * direct / nu + 0.4 * T / (2 * nu);
    const double formula = 0.5 * (0.4 / (nu * nu)) * (T * T - T * nu) + 0.4 * T / (2 * nu);
    CHECK(v_total_largemass({constant_path(2, T)}, q) == doctest::Approx(direct).epsilon(1e-12));
    CHECK(formula == doctest::Approx(direct).epsilon(1e-12));
  }

  // R = 0 large mass equals the standard Ginibre total at λ = 1; R = 1 sweep equals the pair form
  Rng rng = make_stream(14, 0, 0);
  auto g = InteractionParams::generic(nu, 1.0, soft);
  auto gp = [&](const Path& a, const Path& b) { return v_ginibre_pair(a, b, g); };
  std::size_t finite = 0;
  for (int rep = 0; rep < 200; ++rep) {
    LoopConfig cfg;
    for (int i = 0; i < 3; ++i) cfg.push_back(sample_free_walk(t, (i * 3) % 4, nu * (1 + rep % 3), rng));
    CHECK(v_total_largemass(cfg, q) == doctest::Approx(v_total(cfg, gp)).epsilon(1e-12));
    CHECK(energy_ginibre(cfg, q) == doctest::Approx(v_total(cfg, gp)).epsilon(1e-12));
    const double a = v_total_largemass(cfg, p), b = energy_ginibre(cfg, p);
    if (a == kInf) {
      CHECK(b == kInf);
    } else {
      ++finite;
      CHECK(b == doctest::Approx(a).epsilon(1e-12));
    }
  }
  CHECK(finite > 0);
}

TEST_CASE("v_lm") {
  Torus t(1, 3);
  auto soft = make_pot(t, {{{0}, 0.6}});
  CHECK(v_lm({3}, {0}, *soft) == doctest::Approx(9 * 0.6 / 2));
  auto hc = make_pot(t, {}, 1);
  CHECK(v_lm({2}, {0}, *hc) == kInf);
  CHECK(v_lm({1, 1}, {0, 0}, *hc) == kInf);
  CHECK(v_lm({1, 1, 1}, {0, 1, 2}, *hc) == 0.0);
}
