#include <catch2/catch_amalgamated.hpp>

#include "dzo/consensus.hpp"
#include "dzo/rng.hpp"

using namespace dzo;

TEST_CASE("metropolis weights on path-3") {
  const ConsensusMatrix cm = metropolis_weights(make_graph(GraphKind::path, 3), 1.0);
  Eigen::MatrixXd expected(3, 3);
  expected << 0.5, 0.5, 0.0, 0.5, 0.0, 0.5, 0.0, 0.5, 0.5;
  REQUIRE(cm.W.isApprox(expected, 1e-14));
  // eigenvalues of W are {1, 1/2, -1/2}
  REQUIRE(cm.rho == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(validate(cm).pass());
}

TEST_CASE("metropolis weights on complete-3 equal (J - I)/2") {
  const ConsensusMatrix cm = metropolis_weights(make_graph(GraphKind::complete, 3), 1.0);
  const Eigen::MatrixXd expected =
      (Eigen::MatrixXd::Ones(3, 3) - Eigen::MatrixXd::Identity(3, 3)) / 2.0;
  REQUIRE(cm.W.isApprox(expected, 1e-14));
  REQUIRE(cm.rho == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("single node gives the trivial matrix") {
  const ConsensusMatrix cm = metropolis_weights(make_graph(GraphKind::complete, 1), 2.0);
  REQUIRE(cm.W(0, 0) == 1.0);
  REQUIRE(cm.rho == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("complete mixing") {
  const ConsensusMatrix cm2 = complete_mixing(2);
  REQUIRE(cm2.W.isApprox(Eigen::MatrixXd::Constant(2, 2, 0.5)));
  REQUIRE(cm2.rho == 0.0);
  REQUIRE(complete_mixing(1).W(0, 0) == 1.0);
  const ConsensusMatrix cm4 = complete_mixing(4);
  REQUIRE(cm4.W.minCoeff() == 0.25);
  REQUIRE(cm4.W.maxCoeff() == 0.25);
  REQUIRE((cm4.W.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-15);
  REQUIRE(validate(cm4).pass());
}

TEST_CASE("spectral gap reference values") {
  REQUIRE(spectral_gap(Eigen::MatrixXd::Identity(2, 2)) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(spectral_gap(Eigen::MatrixXd::Constant(5, 5, 0.2)) == Catch::Approx(0.0).margin(1e-12));
  Eigen::MatrixXd bad(2, 3);
  bad.setZero();
  REQUIRE_THROWS_AS(spectral_gap(bad), std::invalid_argument);
  Eigen::MatrixXd asym(2, 2);
  asym << 0.0, 1.0, 0.0, 0.0;
  REQUIRE_THROWS_AS(spectral_gap(asym), std::invalid_argument);
}

TEST_CASE("spectral gap is invariant under simultaneous permutation") {
  RngStream stream(404);
  const ConsensusMatrix cm = metropolis_weights(make_graph(GraphKind::erdos_renyi, 8, 0.5, 11), 1.0);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(8);
  perm.setIdentity();
  for (int i = 7; i > 0; --i) {
    const int j = static_cast<int>(stream.next_bits() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm.indices()[i], perm.indices()[j]);
  }
  const Eigen::MatrixXd permuted = perm * cm.W * perm.transpose();
  REQUIRE(spectral_gap(permuted) == Catch::Approx(cm.rho).margin(1e-12));
}

TEST_CASE("validate flags identity and disconnected graphs") {
  const ValidationReport identity = validate({Eigen::MatrixXd::Identity(2, 2), 1.0});
  REQUIRE(identity.symmetric);
  REQUIRE(identity.doubly_stochastic);
  REQUIRE_FALSE(identity.contractive);
  REQUIRE(identity.rho == Catch::Approx(1.0).margin(1e-12));

  // two disjoint edges: block-diagonal W keeps per-component constants
  const Graph g = graph_from_edges(4, {{0, 1}, {2, 3}});
  const ValidationReport disconnected = validate(metropolis_weights(g, 1.0));
  REQUIRE(disconnected.rho == Catch::Approx(1.0).margin(1e-12));
  REQUIRE_FALSE(disconnected.pass());
}

TEST_CASE("gamma below one is rejected") {
  REQUIRE_THROWS_AS(metropolis_weights(make_graph(GraphKind::path, 3), 0.5), std::invalid_argument);
}

TEST_CASE("metropolis matrices contract on connected topologies up to n=100") {
  // gamma = 2 keeps at least half the mass on the diagonal, so every
  // connected topology contracts. gamma = 1 contracts too unless the induced
  // walk is periodic (even cycles, the 2x2 grid, the 2-path), where the
  // spectrum contains exactly -1 and rho = 1.
  for (int n : {2, 10, 50, 100}) {
    for (GraphKind kind : {GraphKind::complete, GraphKind::path, GraphKind::star}) {
      if (kind != GraphKind::complete && n < 2) continue;
      REQUIRE(metropolis_weights(make_graph(kind, n), 2.0).rho < 1.0);
    }
  }
  for (int n : {3, 10, 50, 100}) REQUIRE(metropolis_weights(make_graph(GraphKind::cycle, n), 2.0).rho < 1.0);
  for (int side : {2, 5, 10})
    REQUIRE(metropolis_weights(make_graph(GraphKind::grid2d, side * side), 2.0).rho < 1.0);

  for (int n : {3, 10, 51, 99}) {
    REQUIRE(metropolis_weights(make_graph(GraphKind::complete, n), 1.0).rho < 1.0);
    REQUIRE(metropolis_weights(make_graph(GraphKind::path, n), 1.0).rho < 1.0);
    REQUIRE(metropolis_weights(make_graph(GraphKind::star, n), 1.0).rho < 1.0);
  }
  for (int n : {3, 51, 99})  // odd cycles are aperiodic
    REQUIRE(metropolis_weights(make_graph(GraphKind::cycle, n), 1.0).rho < 1.0);
  for (int side : {3, 5, 10})  // side >= 3 has degree-2/degree-3 contact, hence self-mass
    REQUIRE(metropolis_weights(make_graph(GraphKind::grid2d, side * side), 1.0).rho < 1.0);

  // the periodic gamma = 1 cases sit exactly at rho = 1 and fail validation
  REQUIRE(validate(metropolis_weights(make_graph(GraphKind::cycle, 4), 1.0)).contractive == false);
  REQUIRE(validate(metropolis_weights(make_graph(GraphKind::path, 2), 1.0)).contractive == false);
}

TEST_CASE("mixing contracts the spread for random matrices and vectors") {
  RngStream stream(2024);
  int checked = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + static_cast<int>(stream.next_bits() % 9);
    const int d = 1 + static_cast<int>(stream.next_bits() % 8);
    const double p = 0.2 + 0.8 * stream.u01();
    const double gamma = 1.0 + stream.u01();
    const ConsensusMatrix cm =
        metropolis_weights(make_graph(GraphKind::erdos_renyi, n, p, stream.next_bits()), gamma);

    Eigen::MatrixXd U(d, n);
    for (int i = 0; i < n; ++i) U.col(i) = 3.0 * stream.gaussian_vector(d);
    const Eigen::MatrixXd X = U * cm.W.transpose();
    const Eigen::VectorXd ubar = U.rowwise().mean();
    const Eigen::VectorXd xbar = X.rowwise().mean();
    double spread_u = 0.0, spread_x = 0.0;
    for (int i = 0; i < n; ++i) {
      spread_u += (U.col(i) - ubar).squaredNorm();
      spread_x += (X.col(i) - xbar).squaredNorm();
    }
    REQUIRE(spread_x <= cm.rho * cm.rho * spread_u * (1.0 + 1e-12) + 1e-15);
    ++checked;
  }
  REQUIRE(checked == 200);
}
