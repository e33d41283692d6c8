#include <doctest.h>

#include <cmath>

#include "looplab/loop_mc.hpp"
#include "looplab/quantum_oracle.hpp"

using namespace looplab;

namespace {

std::shared_ptr<const PeriodizedPotential> pot(const Torus& t, std::map<Coord, double> entries, int R = 0) {
  PotentialSpec s;
  s.d = t.dim();
  s.R = R;
  s.entries = std::move(entries);
  return std::make_shared<PeriodizedPotential>(periodize_potential(s, t));
}

bool within(const McEstimate& e, double exact, double k = 3.0) { return std::abs(e.mean - exact) <= k * e.std_error; }

}  // namespace

TEST_CASE("relative partition: trivial and monotone") {
  Torus t(1, 3);
  auto zero = EnsembleSpec::ginibre(InteractionParams::generic(0.5, 0.0, pot(t, {})), 1.0);
  auto e = estimate_rel_partition(zero, 1000, 1);
  CHECK(e.mean == 1.0);
  CHECK(e.std_error == 0.0);

  auto v = pot(t, {{{0}, 0.5}});
  double prev = 1.0;
  for (double lam : {0.1, 0.4, 1.6}) {
    auto est = estimate_rel_partition(EnsembleSpec::ginibre(InteractionParams::generic(0.5, lam, v), 1.0), 20000, 2);
    CHECK(est.mean < prev - 3.0 * est.std_error);
    prev = est.mean;
  }
}

TEST_CASE("relative partition against exact diagonalization") {
  Torus t(1, 3);
  auto params = InteractionParams::generic(0.5, 0.2, pot(t, {{{0}, 0.5}}));
  auto est = estimate_rel_partition(EnsembleSpec::ginibre(params, 1.0), 200000, 3);
  const double exact = grand_partition(params, 1.0).z;
  CHECK(within(est, exact));
  CHECK(est.meta.at("bridge_acceptance") > 0.0);
  CHECK(est.meta.at("tail") < 1e-10 * est.meta.at("mass"));

  // hard-core large-mass interaction at fixed ν
  auto vh = pot(t, {{{1}, 0.3}, {{-1}, 0.3}}, 1);
  auto lm = InteractionParams::largemass(0.25, 1.0, vh);
  auto est_lm = estimate_rel_partition(EnsembleSpec::largemass(lm), 100000, 4);
  CHECK(within(est_lm, grand_partition(lm, 4.0).z));
}

TEST_CASE("Poissonization on a truncated single-site intensity") {
  Torus t(1, 1);
  const double nu = 0.5, kappa = 1.0, lam = 0.6, w = 0.4;
  auto params = InteractionParams::generic(nu, lam, pot(t, {{{0}, w}}));
  EnsembleSpec spec = EnsembleSpec::ginibre(params, kappa);
  spec.intensity = LoopIntensity::ginibre(t, nu, kappa, 2);
  REQUIRE(spec.intensity->weights().size() == 2);
  const double m1 = std::exp(-kappa * nu), m2 = std::exp(-2 * kappa * nu) / 2;
  CHECK(spec.intensity->weights()[0] == doctest::Approx(m1));
  CHECK(spec.intensity->weights()[1] == doctest::Approx(m2));
  // Exhaustive series over (n1, n2) loops, n1 + n2 <= 6: constant loops at one site carry
  // W = n1 + 2 n2 windows and V = λ w W²/2.
  double series = 0.0;
  for (int n1 = 0; n1 <= 6; ++n1)
    for (int n2 = 0; n1 + n2 <= 6; ++n2) {
      const double W = n1 + 2.0 * n2;
      series += std::pow(m1, n1) / std::tgamma(n1 + 1.0) * std::pow(m2, n2) / std::tgamma(n2 + 1.0) *
                std::exp(-lam * w * W * W / 2);
    }
  series *= std::exp(-(m1 + m2));
  auto est = estimate_rel_partition(spec, 200000, 5);
  CHECK(within(est, series));
}

TEST_CASE("free kernels") {
  Torus t1(1, 1);
  const double a = std::exp(-0.7 * 0.5);
  CHECK(free_gas_gamma1(0.5, 0.7, t1)(0, 0) == doctest::Approx(a / (1 - a)).epsilon(1e-14));
  Torus t(1, 4);
  CHECK(free_gas_gamma1(0.5, 80.0, t).cwiseAbs().maxCoeff() < 1e-15);
  auto params = InteractionParams::generic(0.5, 0.0, pot(t, {}));
  auto gc = grand_partition(params, 3.0, 1e-13);
  double mean_n = 0.0;
  for (std::size_t n = 0; n < gc.traces.size(); ++n) mean_n += n * gc.traces[n] / gc.xi;
  CHECK(std::abs(free_gas_gamma1(0.5, 3.0, t).trace() - mean_n) < 1e-10);
  CHECK_THROWS_AS(free_gas_gamma1(0.5, 0.0, t), ValidationError);
  Eigen::MatrixXd C = free_field_gamma1(1.0, t);
  Eigen::MatrixXd A = -0.5 * laplacian_matrix(t) + Eigen::MatrixXd::Identity(4, 4);
  CHECK((A * C - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-13);
}

TEST_CASE("gamma_1 estimates") {
  Torus t(1, 3);
  const double nu = 0.5, kappa = 1.0;
  auto free_spec = EnsembleSpec::ginibre(InteractionParams::generic(nu, 0.0, pot(t, {})), kappa);
  auto G0 = free_gas_gamma1(nu, kappa, t);
  for (Site y = 0; y < 3; ++y) CHECK(within(estimate_gamma_p(free_spec, 1, {0}, {y}, 50000, 6), G0(0, y)));

  Torus t1(1, 1);
  auto p1 = InteractionParams::generic(nu, 0.3, pot(t1, {{{0}, 0.8}}));
  auto spec1 = EnsembleSpec::ginibre(p1, kappa);
  auto est = estimate_gamma_p(spec1, 1, {0}, {0}, 100000, 7);
  CHECK(within(est, reduced_density_matrix(1, p1, kappa)(0, 0)));

  auto p3 = InteractionParams::generic(nu, 0.2, pot(t, {{{0}, 0.5}}));
  auto spec3 = EnsembleSpec::ginibre(p3, kappa);
  auto G = reduced_density_matrix(1, p3, kappa);
  auto row = estimate_gamma1_row(spec3, 0, 100000, 8);
  for (Site y = 0; y < 3; ++y) CHECK(within(row[y], G(0, y)));

  // Symanzik free kernel
  Torus t4(1, 4);
  auto sym = EnsembleSpec::symanzik(pot(t4, {}), 1.0, 0.05);
  auto C = free_field_gamma1(1.0, t4);
  for (Site y : {0u, 1u, 2u}) CHECK(within(estimate_gamma_p(sym, 1, {0}, {y}, 50000, 9), C(0, y)));
}

TEST_CASE("gamma_2: permutation symmetry and exact value") {
  Torus t(1, 3);
  auto params = InteractionParams::generic(0.5, 0.2, pot(t, {{{0}, 0.5}}));
  auto spec = EnsembleSpec::ginibre(params, 1.0);
  auto a = estimate_gamma_p(spec, 2, {0, 1}, {1, 2}, 100000, 10);
  auto b = estimate_gamma_p(spec, 2, {1, 0}, {2, 1}, 100000, 11);
  CHECK(std::abs(a.mean - b.mean) <= 3.0 * std::hypot(a.std_error, b.std_error));
  auto G2 = reduced_density_matrix(2, params, 1.0, 1e-12);
  CHECK(within(a, G2(tuple_index({0, 1}, 3), tuple_index({1, 2}, 3))));
  auto d = estimate_gamma_p(spec, 2, {0, 0}, {0, 0}, 100000, 12);
  CHECK(within(d, G2(tuple_index({0, 0}, 3), tuple_index({0, 0}, 3))));
  CHECK_THROWS_AS(estimate_gamma_p(spec, 5, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}, 10, 1), ValidationError);
}

TEST_CASE("symanzik epsilon stability") {
  Torus t(1, 3);
  // weak coupling and small ε: the O(ε) regularization bias stays below the noise at this sample size
  auto v = pot(t, {{{0}, 0.01}});
  auto a = estimate_rel_partition(EnsembleSpec::symanzik(v, 1.0, 0.01), 20000, 13);
  auto b = estimate_rel_partition(EnsembleSpec::symanzik(v, 1.0, 0.005), 20000, 14);
  CHECK(std::abs(a.mean - b.mean) <= 3.0 * std::hypot(a.std_error, b.std_error));
}

TEST_CASE("determinism") {
  Torus t(1, 3);
  auto spec = EnsembleSpec::ginibre(InteractionParams::generic(0.5, 0.2, pot(t, {{{0}, 0.5}})), 1.0);
  for (unsigned workers : {1u, 3u}) {
    auto a = estimate_rel_partition(spec, 3000, 99, workers);
    auto b = estimate_rel_partition(spec, 3000, 99, workers);
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
    auto g1 = estimate_gamma_p(spec, 1, {0}, {1}, 3000, 98, workers);
    auto g2 = estimate_gamma_p(spec, 1, {0}, {1}, 3000, 98, workers);
    CHECK(g1.mean == g2.mean);
  }
}

TEST_CASE("ensemble validation") {
  Torus t(1, 3);
  auto v = pot(t, {{{0}, 0.5}});
  auto spec = EnsembleSpec::ginibre(InteractionParams::generic(0.5, 0.2, v), 1.0);
  spec.intensity = LoopIntensity::symanzik(t, 1.0, 0.1);
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  CHECK_THROWS_AS(EnsembleSpec::ginibre(InteractionParams::generic(0.5, 0.2, v), 0.0), ValidationError);
  auto hc = pot(t, {{{1}, 0.3}, {{-1}, 0.3}}, 1);
  CHECK_THROWS_AS(EnsembleSpec::symanzik(hc, 1.0, 0.1), ValidationError);
}
