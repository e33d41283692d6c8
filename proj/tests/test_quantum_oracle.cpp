#include <doctest.h>

#include <cmath>
#include <sstream>

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

}  // namespace

TEST_CASE("many-body spaces") {
  Torus t(1, 3);
  CHECK(make_product_space(t, 2, true).dim() == 6);
  CHECK(make_product_space(t, 2, false).dim() == 9);
  CHECK(make_sector(t, 2, false).dim() == 6);
  CHECK(make_sector(t, 2, true).dim() == 3);
  CHECK(make_sector(t, 4, true).dim() == 0);
  CHECK(make_sector(Torus(1, 4), 3, false).dim() == 20);

  auto sp = make_product_space(t, 3, false);
  auto P = symmetrizer(sp);
  CHECK((P * P - P).norm() < 1e-13);
  CHECK((P - P.transpose()).norm() < 1e-13);
  CHECK(P.trace() == doctest::Approx(10.0));  // dimension of the symmetric subspace
  auto sh = make_product_space(t, 2, true);
  auto Ph = symmetrizer(sh);
  CHECK((Ph * Ph - Ph).norm() < 1e-13);
  CHECK(Ph.trace() == doctest::Approx(3.0));
}

TEST_CASE("hamiltonian examples") {
  Torus t(1, 4);
  auto v = pot(t, {{{0}, 0.4}, {{1}, 0.1}, {{-1}, 0.1}});
  auto params = InteractionParams::generic(0.3, 0.7, v);
  auto H1 = hamiltonian(make_product_space(t, 1, false), params);
  Eigen::MatrixXd expect = -0.15 * laplacian_matrix(t) + 0.7 * 0.4 / 2 * Eigen::MatrixXd::Identity(4, 4);
  CHECK((H1 - expect).norm() < 1e-14);
  CHECK((hamiltonian(make_sector(t, 1, false), params) - expect).norm() < 1e-14);

  Torus t1(1, 1);
  auto v1 = pot(t1, {{{0}, 0.9}});
  auto p1 = InteractionParams::generic(0.5, 0.3, v1);
  for (int n = 1; n <= 4; ++n) {
    auto H = hamiltonian(make_product_space(t1, n, false), p1);
    CHECK(H(0, 0) == doctest::Approx(0.5 * 0.3 * n * n * 0.9));
    auto Ho = hamiltonian(make_sector(t1, n, false), p1);
    CHECK(Ho(0, 0) == doctest::Approx(0.5 * 0.3 * n * n * 0.9));
  }

  // spectra of product (restricted to P⁺) and occupation Hamiltonians coincide
  for (bool hard : {false, true}) {
    Torus t3(1, 3);
    auto vv = hard ? pot(t3, {{{1}, 0.2}, {{-1}, 0.2}}, 1) : pot(t3, {{{0}, 0.5}, {{1}, 0.2}, {{-1}, 0.2}});
    auto pp = hard ? InteractionParams::largemass(0.4, 1.0, vv) : InteractionParams::generic(0.4, 0.6, vv);
    for (int n = 1; n <= 3; ++n) {
      auto sp = make_product_space(t3, n, hard);
      auto H = hamiltonian(sp, pp);
      auto P = symmetrizer(sp);
      CHECK((H * P - P * H).norm() < 1e-12);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
      const Eigen::MatrixXd G = es.eigenvectors() * (-es.eigenvalues()).array().exp().matrix().asDiagonal() *
                                es.eigenvectors().transpose();
      CHECK(G.minCoeff() > -1e-13);  // path-integral kernel
      auto Ho = hamiltonian(make_sector(t3, n, hard), pp);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eo(Ho);
      CHECK((G * P).trace() == doctest::Approx((-eo.eigenvalues()).array().exp().sum()).epsilon(1e-12));
    }
  }
}

TEST_CASE("grand partition examples") {
  Torus t1(1, 1);
  const double nu = 0.5, kappa = 1.0;
  auto zero1 = pot(t1, {});
  auto gc = grand_partition(InteractionParams::generic(nu, 0.0, zero1), kappa);
  CHECK(gc.xi == doctest::Approx(1.0 / (1.0 - std::exp(-kappa * nu))).epsilon(1e-10));
  CHECK(gc.z == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(gc.xi >= 1.0);

  Torus t3(1, 3);
  auto free3 = grand_partition(InteractionParams::generic(nu, 0.0, pot(t3, {})), 2.0);
  CHECK(free3.z == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(free3.tail_bound < 1e-10);

  for (double nn : {0.2, 0.05}) {
    const double w = 0.8;
    auto params = InteractionParams::meanfield(nn, pot(t1, {{{0}, w}}));
    auto r = grand_partition(params, 1.0, 1e-14);
    double direct = 0.0;
    for (int n = 0; n < 5000; ++n) direct += std::exp(-(nn * nn * w * n * n / 2 + nn * n));
    CHECK(r.xi == doctest::Approx(direct).epsilon(1e-12));
  }

  // an extra chemical shift δ per particle acts on both Ξ and its sectors identically
  auto p3 = InteractionParams::generic(nu, 0.2, pot(t3, {{{0}, 0.5}}));
  auto base = grand_partition(p3, kappa, 1e-13);
  auto shifted = grand_partition(p3, kappa + 0.4, 1e-13);
  double resum = 0.0;
  for (std::size_t n = 0; n < base.traces.size(); ++n) resum += base.traces[n] * std::exp(-0.4 * nu * n);
  CHECK(shifted.xi == doctest::Approx(resum).epsilon(1e-10));

  CHECK_THROWS_AS(grand_partition(InteractionParams::generic(nu, 0.2, pot(t3, {{{0}, 0.5}})), 0.0), ValidationError);
}

TEST_CASE("reduced density matrices") {
  Torus t3(1, 3);
  const double nu = 0.5, kappa = 1.0;
  SUBCASE("free gas") {
    auto params = InteractionParams::generic(nu, 0.0, pot(t3, {}));
    auto G = reduced_density_matrix(1, params, 2.0, 1e-12);
    CHECK((G - free_gas_gamma1(nu, 2.0, t3)).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("trace identity and structure") {
    auto params = InteractionParams::generic(nu, 0.2, pot(t3, {{{0}, 0.5}, {{1}, 0.1}, {{-1}, 0.1}}));
    auto gc = grand_partition(params, kappa, 1e-12);
    double mean_n = 0.0;
    for (std::size_t n = 0; n < gc.traces.size(); ++n) mean_n += n * gc.traces[n] / gc.xi;
    auto G = reduced_density_matrix(1, params, kappa, 1e-12);
    CHECK(G.trace() == doctest::Approx(mean_n).epsilon(1e-10));
    CHECK((G - G.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    for (Site x = 0; x < 3; ++x)
      for (Site y = 0; y < 3; ++y) CHECK(std::abs(G(x, y) - G(t3.diff(x, y), 0)) < 1e-12);
    auto G2 = reduced_density_matrix(2, params, kappa, 1e-12);
    CHECK((G2 - G2.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G2);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
    CHECK(G2.diagonal().minCoeff() >= -1e-14);
    // tr Γ_2 = E[N(N-1)]
    double fact2 = 0.0;
    for (std::size_t n = 0; n < gc.traces.size(); ++n) fact2 += n * (n - 1.0) * gc.traces[n] / gc.xi;
    CHECK(G2.trace() == doctest::Approx(fact2).epsilon(1e-9));
  }
  SUBCASE("single site series") {
    Torus t1(1, 1);
    const double lam = 0.3, w = 0.7;
    auto params = InteractionParams::generic(nu, lam, pot(t1, {{{0}, w}}));
    auto G = reduced_density_matrix(1, params, kappa, 1e-14);
    double num = 0.0, den = 0.0;
    for (int n = 0; n < 400; ++n) {
      const double e = std::exp(-(lam * n * n * w / 2 + kappa * nu * n));
      num += n * e;
      den += e;
    }
    CHECK(G(0, 0) == doctest::Approx(num / den).epsilon(1e-12));
  }
  SUBCASE("occupation route agrees with the product route") {
    const double big_kappa = 8.0;  // sectors above 6 particles are negligible
    auto params = InteractionParams::generic(nu, 0.4, pot(t3, {{{0}, 0.5}, {{1}, 0.2}, {{-1}, 0.2}}));
    auto a = grand_partition(params, big_kappa, 1e-15);
    auto b = grand_partition_product(params, big_kappa, 6);
    CHECK(a.xi == doctest::Approx(b.xi).epsilon(1e-9));
    auto Ga = reduced_density_matrix(1, params, big_kappa, 1e-15);
    auto Gb = reduced_density_matrix_product(1, params, big_kappa, 6);
    CHECK((Ga - Gb).cwiseAbs().maxCoeff() < 1e-9);
    auto Ga2 = reduced_density_matrix(2, params, big_kappa, 1e-15);
    auto Gb2 = reduced_density_matrix_product(2, params, big_kappa, 6);
    CHECK((Ga2 - Gb2).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("hard core") {
    auto vh = pot(t3, {{{1}, 0.3}, {{-1}, 0.3}}, 1);
    const double nu_h = 0.2;
    auto params = InteractionParams::largemass(nu_h, 1.0, vh);
    const double kappa_h = 1.0 / nu_h;
    auto a = grand_partition(params, kappa_h);
    auto b = grand_partition_product(params, kappa_h, 3);
    CHECK(a.xi == doctest::Approx(b.xi).epsilon(1e-12));
    CHECK(a.n_max == 3);
    auto Ga = reduced_density_matrix(2, params, kappa_h);
    auto Gb = reduced_density_matrix_product(2, params, kappa_h, 3);
    CHECK((Ga - Gb).cwiseAbs().maxCoeff() < 1e-12);
    for (Site x = 0; x < 3; ++x)
      for (std::size_t j = 0; j < 9; ++j) CHECK(Ga(tuple_index({x, x}, 3), j) == 0.0);
    auto G1 = reduced_density_matrix(1, params, kappa_h);
    auto G1b = reduced_density_matrix_product(1, params, kappa_h, 3);
    CHECK((G1 - G1b).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("gibbs potential") {
  Torus t3(1, 3);
  CHECK(gibbs_potential(InteractionParams::generic(0.5, 0.0, pot(t3, {})), 2.0) == doctest::Approx(0.0).epsilon(1e-10));
  for (double lam : {0.1, 0.5, 2.0}) {
    const double g = gibbs_potential(InteractionParams::generic(0.5, lam, pot(t3, {{{0}, 0.5}})), 1.0);
    CHECK(g < 0.0);
  }
  // |g| grows at most linearly with the coupling at small ‖v‖₁ (fitted constant bounded)
  double prev = 0.0;
  for (double w : {0.01, 0.02, 0.04}) {
    const double g = gibbs_potential(InteractionParams::generic(0.5, 1.0, pot(t3, {{{0}, w}})), 2.0);
    CHECK(std::abs(g) / w < 5.0);
    CHECK(std::abs(g) > prev);
    prev = std::abs(g);
  }
}

TEST_CASE("kernel norm") {
  Torus t(1, 6);
  CHECK(kernel_norm(Kernel::Identity(6, 6), 1, t, 4) == doctest::Approx(1.0));
  CHECK(centered_box(t, 4).size() == 4);
  Rng rng = make_stream(31, 0, 0);
  for (int rep = 0; rep < 20; ++rep) {
    Kernel K(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j <= i; ++j) K(i, j) = K(j, i) = uniform01(rng) - 0.5;
    const double plain = K.cwiseAbs().rowwise().sum().maxCoeff();
    CHECK(kernel_norm(K, 1, t, 6) == doctest::Approx(plain));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    CHECK(kernel_norm(K, 1, t, 6) >= es.eigenvalues().cwiseAbs().maxCoeff() - 1e-12);
  }
  Torus t2(1, 3);
  CHECK(kernel_norm(Kernel::Identity(9, 9), 2, t2, 2) == doctest::Approx(1.0));
}

TEST_CASE("feynman-kac") {
  Torus t(1, 4);
  auto zero = feynman_kac_check(t, {0, 0, 0, 0}, 1.0, 20000, 41);
  HeatKernel hk(t);
  for (Site y = 0; y < 4; ++y) CHECK(zero.exact(0, y) == doctest::Approx(hk.value(1.0, y)).epsilon(1e-12));
  CHECK(zero.pass);
  auto c = feynman_kac_check(t, {0.3, 0.3, 0.3, 0.3}, 1.0, 20000, 41);
  for (Site y = 0; y < 4; ++y) {
    CHECK(c.exact(0, y) == doctest::Approx(std::exp(-0.3) * zero.exact(0, y)).epsilon(1e-12));
    CHECK(c.mc(0, y) == doctest::Approx(std::exp(-0.3) * zero.mc(0, y)).epsilon(1e-12));
  }
  auto r = feynman_kac_check(t, {0.1, 0.9, 0.4, 1.3}, 1.0, 40000, 43);
  CHECK(r.pass);
}

TEST_CASE("kernel csv") {
  std::ostringstream out;
  Kernel K = Kernel::Identity(2, 2);
  write_kernel_csv(out, K, 1, 2);
  CHECK(out.str() == "x1,y1,value\n0,0,1\n0,1,0\n1,0,0\n1,1,1\n");
}
