#include <catch2/catch_amalgamated.hpp>

#include "dzo/kernel.hpp"
#include "dzo/rng.hpp"

using namespace dzo;

TEST_CASE("gauss-legendre quadrature integrates polynomials exactly") {
  const Quadrature q = gauss_legendre(64);
  double sum_w = 0.0, int_x2 = 0.0, int_x10 = 0.0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    sum_w += q.weights[i];
    int_x2 += q.weights[i] * q.nodes[i] * q.nodes[i];
    int_x10 += q.weights[i] * std::pow(q.nodes[i], 10);
  }
  REQUIRE(sum_w == Catch::Approx(2.0).margin(1e-13));
  REQUIRE(int_x2 == Catch::Approx(2.0 / 3.0).margin(1e-13));
  REQUIRE(int_x10 == Catch::Approx(2.0 / 11.0).margin(1e-13));
}

TEST_CASE("companion-matrix rootfinding") {
  // u (u^2 - 0.25) = -0.25 u + u^3
  const std::vector<double> coeffs{0.0, -0.25, 0.0, 1.0};
  const std::vector<double> roots = poly_real_roots(coeffs, -1.0, 1.0);
  REQUIRE(roots.size() == 3);
  REQUIRE(roots[0] == Catch::Approx(-0.5).margin(1e-10));
  REQUIRE(roots[1] == Catch::Approx(0.0).margin(1e-10));
  REQUIRE(roots[2] == Catch::Approx(0.5).margin(1e-10));
}

TEST_CASE("kernel for beta=2 is 3u") {
  const Kernel k = legendre_kernel(2.0);
  REQUIRE(k.ell == 2);
  REQUIRE(k.coeffs.size() == 3);
  REQUIRE(k.coeffs[0] == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(k.coeffs[1] == Catch::Approx(3.0).margin(1e-12));
  REQUIRE(k.coeffs[2] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("kernel for beta=3 is (75/4)u - (105/4)u^3") {
  const Kernel k = legendre_kernel(3.0);
  REQUIRE(k.coeffs[1] == Catch::Approx(18.75).margin(1e-10));
  REQUIRE(k.coeffs[3] == Catch::Approx(-26.25).margin(1e-10));
  REQUIRE(std::abs(k.coeffs[0]) < 1e-12);
  REQUIRE(std::abs(k.coeffs[2]) < 1e-12);
}

TEST_CASE("non-integer order uses the floor") {
  const Kernel k25 = legendre_kernel(2.5);
  const Kernel k2 = legendre_kernel(2.0);
  REQUIRE(k25.ell == 2);
  REQUIRE(k25.coeffs == k2.coeffs);
}

TEST_CASE("moments of the beta=2 kernel have closed forms") {
  const Kernel k = legendre_kernel(2.0);
  const KernelMoments m = kernel_moments(k);
  REQUIRE(std::abs(m.mu[0]) < 1e-10);
  REQUIRE(m.mu[1] == Catch::Approx(1.0).margin(1e-10));   // E[3r^2]
  REQUIRE(std::abs(m.mu[2]) < 1e-10);
  REQUIRE(m.kappa == Catch::Approx(3.0).margin(1e-10));   // E[9r^2]
  REQUIRE(m.kappa_beta == Catch::Approx(0.75).margin(1e-10));  // E[|r|^2 3|r|]
  REQUIRE(m.kappa_beta <= 2.0 * std::sqrt(2.0) * 2.0);
}

TEST_CASE("kappa_beta at a different order than the kernel's own") {
  const Kernel k = legendre_kernel(2.0);
  // E[|r|^3 * 3|r|] = 3 E[r^4] = 3/5
  REQUIRE(kappa_beta_for(k, 3.0) == Catch::Approx(0.6).margin(1e-10));
}

TEST_CASE("moment conditions hold for orders 2 through 6") {
  for (double beta : {2.0, 3.0, 4.0, 5.0, 6.0}) {
    const Kernel k = legendre_kernel(beta);
    REQUIRE(kernel_moment_residual(k) <= 1e-10);
    REQUIRE(k.moments.kappa_beta <= 2.0 * std::sqrt(2.0) * beta);
    for (std::size_t j = 0; j < k.coeffs.size(); j += 2)  // K is odd
      REQUIRE(std::abs(k.coeffs[j]) < 1e-9);
  }
}

TEST_CASE("kernel reproduces derivatives of low-degree polynomials") {
  const Kernel k = legendre_kernel(4.0);
  const Quadrature q = gauss_legendre(64);
  RngStream stream(17);
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> f(k.ell + 1);
    for (double& c : f) c = stream.uniform(-2.0, 2.0);
    double efk = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i)
      efk += 0.5 * q.weights[i] * poly_eval(f, q.nodes[i]) * k(q.nodes[i]);
    REQUIRE(std::abs(efk - f[1]) <= 1e-9);  // f'(0) is the linear coefficient
  }
}

TEST_CASE("zero kernel fails the moment conditions") {
  Kernel zero{{0.0, 0.0}, 2, 2.0, {}};
  REQUIRE(kernel_moment_residual(zero) == Catch::Approx(1.0));  // mu_1 = 0, needs 1
}

TEST_CASE("orders below 2 are rejected") {
  REQUIRE_THROWS_AS(legendre_kernel(1.5), std::invalid_argument);
}
