#include <catch2/catch_amalgamated.hpp>

#include "dzo/engine.hpp"
#include "support/test_objectives.hpp"

using namespace dzo;

namespace {

ProblemInstance unit_quadratic(int d, double alpha, double radius = 1.0,
                               Eigen::VectorXd shift = Eigen::VectorXd()) {
  return make_problem({quadratic_objective(Eigen::MatrixXd::Identity(d, d), alpha, shift)}, alpha,
                      FeasibleSet::ball(d, radius));
}

ProblemInstance replicated_quadratic(int n, int d, double alpha, double shift_radius,
                                     std::uint64_t seed) {
  RngStream stream(seed);
  std::vector<Objective> locals;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd dir = stream.gaussian_vector(d);
    dir *= shift_radius / dir.norm();
    locals.push_back(quadratic_objective(Eigen::MatrixXd::Identity(d, d), alpha, dir));
  }
  return make_problem(std::move(locals), alpha, FeasibleSet::ball(d, 1.0));
}

}  // namespace

TEST_CASE("schedule formulas") {
  const Schedule s1 = Schedule::theorem1(2.0, 2.0);
  REQUIRE(s1.eta(4) == Catch::Approx(0.25));
  REQUIRE(s1.h(4) == Catch::Approx(std::pow(4.0, -0.25)));

  const Schedule sc = Schedule::corollary_local(2.0, 3.0);
  REQUIRE(sc.eta(3) == Catch::Approx(0.5));
  REQUIRE(sc.h(8) == Catch::Approx(std::pow(8.0, -1.0 / 6.0)));

  const Schedule s2 = Schedule::theorem2_beta2(2.0, 2.0, 1.5, 3);
  REQUIRE(s2.eta(10) == Catch::Approx(0.05));
  // (3 * 9 * 2.25 / (2*2*2*10 + 9*4*9))^(1/4)
  REQUIRE(s2.h(10) == Catch::Approx(std::pow(60.75 / 404.0, 0.25)).margin(1e-12));
  REQUIRE_THROWS_AS(Schedule::theorem2_beta2(2.0, 2.0, 0.0, 3), std::invalid_argument);
}

TEST_CASE("mean discrepancy") {
  Eigen::VectorXd plus = Eigen::VectorXd::Constant(1, 1.0);
  Eigen::VectorXd minus = Eigen::VectorXd::Constant(1, -1.0);
  REQUIRE(mean_discrepancy({plus, minus}) == Catch::Approx(1.0));
  REQUIRE(mean_discrepancy({plus, plus, plus}) == 0.0);
  REQUIRE_THROWS_AS(mean_discrepancy(std::vector<Eigen::VectorXd>{}), std::invalid_argument);

  // averaging through J/n collapses the spread entirely
  const ConsensusMatrix cm = complete_mixing(3);
  Eigen::MatrixXd U(2, 3);
  U << 1.0, -2.0, 4.0, 0.5, 0.25, -1.0;
  const Eigen::MatrixXd X = U * cm.W.transpose();
  REQUIRE(mean_discrepancy(X, X.rowwise().mean()) == 0.0);
}

TEST_CASE("budget conversion") {
  const EstimatorSpec kernel = EstimatorSpec::kernel_2d(legendre_kernel(2.0));
  const EstimatorSpec twop = EstimatorSpec::two_point();
  REQUIRE(budget_to_iterations(2000, kernel, 10) == 100);
  REQUIRE(budget_to_iterations(2000, twop, 10) == 1000);
  REQUIRE(budget_to_iterations(20, kernel, 10) == 1);
  REQUIRE_THROWS_AS(budget_to_iterations(19, kernel, 10), std::invalid_argument);
  REQUIRE_THROWS_AS(budget_to_iterations(100, EstimatorSpec::oracle(), 10), std::invalid_argument);
}

TEST_CASE("diagnostic oracle run converges to the constrained minimizer") {
  ProblemInstance p = unit_quadratic(3, 2.0, 1.0, Eigen::VectorXd::Constant(3, 0.3));
  REQUIRE(solve_reference_minimizer(p));
  RunOptions opts;
  opts.T0 = 10000;
  opts.seed = 5;
  opts.x_init = Eigen::VectorXd::Constant(3, -0.5);
  opts.record_at = {opts.T0};
  const RunTrace trace = run(p, complete_mixing(1), EstimatorSpec::oracle(),
                             Schedule::theorem1(2.0, 2.0), NoiseModel::none(), opts);
  REQUIRE((trace.final_est.xbar - *p.x_star).norm() <= 1e-6);
  REQUIRE(trace.records.back().queries_per_agent == 0);
}

TEST_CASE("full mixing makes agents identical from the second iterate") {
  ProblemInstance p = replicated_quadratic(4, 3, 2.0, 0.4, 99);
  solve_reference_minimizer(p);
  RunOptions opts;
  opts.T0 = 40;
  opts.seed = 17;
  const RunTrace trace =
      run(p, complete_mixing(4), EstimatorSpec::kernel_2d(legendre_kernel(2.0)),
          Schedule::theorem1(2.0, 2.0), NoiseModel::gaussian(0.5), opts);
  REQUIRE(trace.records[0].discrepancy == 0.0);  // common initialization
  for (std::size_t i = 1; i < trace.records.size(); ++i)
    REQUIRE(trace.records[i].discrepancy == 0.0);  // identical convex combinations
}

TEST_CASE("runs are bitwise reproducible") {
  ProblemInstance p = replicated_quadratic(3, 2, 2.0, 0.3, 7);
  solve_reference_minimizer(p);
  const ConsensusMatrix cm = metropolis_weights(make_graph(GraphKind::cycle, 3), 1.0);
  RunOptions opts;
  opts.T0 = 60;
  opts.seed = 1234;
  auto once = [&] {
    return run(p, cm, EstimatorSpec::kernel_2d(legendre_kernel(2.0)),
               Schedule::theorem1(2.0, 2.0), NoiseModel::uniform(-1.0, 1.0), opts);
  };
  const RunTrace a = once();
  const RunTrace b = once();
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    REQUIRE(a.records[i].f_xbar == b.records[i].f_xbar);
    REQUIRE(a.records[i].discrepancy == b.records[i].discrepancy);
  }
  REQUIRE(a.final_est.xhat == b.final_est.xhat);
  REQUIRE(a.final_est.xtilde == b.final_est.xtilde);
}

TEST_CASE("per-iteration invariants hold on a noisy distributed run") {
  ProblemInstance p = replicated_quadratic(5, 3, 2.0, 0.4, 11);
  solve_reference_minimizer(p);
  const ConsensusMatrix cm = metropolis_weights(make_graph(GraphKind::cycle, 5), 1.0);
  RunOptions opts;
  opts.T0 = 200;
  opts.seed = 21;
  opts.check_invariants = true;  // throws on any violation
  const RunTrace trace = run(p, cm, EstimatorSpec::kernel_2d(legendre_kernel(2.0)),
                             Schedule::theorem1(2.0, 2.0), NoiseModel::gaussian(1.0), opts);
  REQUIRE(trace.records.size() == 200);
  // query accounting: 2d per iteration per agent
  for (const auto& rec : trace.records)
    REQUIRE(rec.queries_per_agent == (rec.t - 1) * 2 * 3);
}

TEST_CASE("schedule and estimator compatibility is enforced") {
  ProblemInstance p = unit_quadratic(2, 2.0);
  solve_reference_minimizer(p);
  RunOptions opts;
  opts.T0 = 10;
  REQUIRE_THROWS_AS(run(p, complete_mixing(1), EstimatorSpec::kernel_2d(legendre_kernel(2.0)),
                        Schedule::theorem2_beta2(2.0, 1.0, 1.0, 2), NoiseModel::none(), opts),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(run(p, complete_mixing(1), EstimatorSpec::two_point(),
                        Schedule::theorem1(2.0, 2.0), NoiseModel::none(), opts),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(run(p, {Eigen::MatrixXd::Identity(1, 1) * 2.0, 0.0},
                        EstimatorSpec::oracle(), Schedule::theorem1(2.0, 2.0), NoiseModel::none(),
                        opts),
                    std::invalid_argument);  // invalid consensus matrix
  opts.T0 = 1;
  REQUIRE_THROWS_AS(run(p, complete_mixing(1), EstimatorSpec::oracle(),
                        Schedule::theorem1(2.0, 2.0), NoiseModel::none(), opts),
                    std::invalid_argument);
}

TEST_CASE("output estimators match directly computed averages") {
  // one agent on a linear objective inside a box: f(xbar(t)) = xbar(t), so the
  // whole trajectory is recoverable from the trace and every output estimator
  // can be cross-checked against its definition.
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(1, -10.0);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(1, 10.0);
  ProblemInstance p = make_problem({testing::linear_objective(Eigen::VectorXd::Constant(1, 1.0))},
                                   1.0, FeasibleSet::box(lo, hi));
  RunOptions opts;
  opts.T0 = 9;
  opts.seed = 3;
  opts.x_init = Eigen::VectorXd::Constant(1, 5.0);
  opts.checkpoints = {2, 5, 9};
  const RunTrace trace = run(p, complete_mixing(1), EstimatorSpec::oracle(),
                             Schedule::theorem1(1.0, 2.0), NoiseModel::none(), opts);

  std::vector<double> xbar(static_cast<std::size_t>(opts.T0) + 1, 0.0);
  for (const auto& rec : trace.records) xbar[static_cast<std::size_t>(rec.t)] = rec.f_xbar;

  auto check_snapshot = [&](long t, const OutputEstimators& est) {
    double sum = 0.0, weighted = 0.0, tail = 0.0;
    for (long s = 1; s <= t; ++s) {
      sum += xbar[static_cast<std::size_t>(s)];
      weighted += static_cast<double>(s) * xbar[static_cast<std::size_t>(s)];
      if (s > t / 2) tail += xbar[static_cast<std::size_t>(s)];
    }
    REQUIRE(est.xbar[0] == Catch::Approx(xbar[static_cast<std::size_t>(t)]).margin(1e-12));
    REQUIRE(est.xhat[0] == Catch::Approx(sum / t).margin(1e-12));
    REQUIRE(est.xtilde[0] == Catch::Approx(tail / (t - t / 2)).margin(1e-12));
    REQUIRE(est.xhat_local[0][0] ==
            Catch::Approx(2.0 * weighted / (static_cast<double>(t) * (t + 1))).margin(1e-12));
  };

  REQUIRE(trace.checkpoints.size() == 3);
  for (const auto& snap : trace.checkpoints) check_snapshot(snap.t, snap.est);
  check_snapshot(opts.T0, trace.final_est);
}

TEST_CASE("two-iteration edge case for the tail average") {
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(1, -10.0);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(1, 10.0);
  ProblemInstance p = make_problem({testing::linear_objective(Eigen::VectorXd::Constant(1, 1.0))},
                                   1.0, FeasibleSet::box(lo, hi));
  RunOptions opts;
  opts.T0 = 2;
  opts.seed = 0;
  opts.x_init = Eigen::VectorXd::Zero(1);
  const RunTrace trace = run(p, complete_mixing(1), EstimatorSpec::oracle(),
                             Schedule::theorem1(1.0, 2.0), NoiseModel::none(), opts);
  // eta_1 = 2, gradient 1: x(2) = 0 - 2 = -2
  REQUIRE(trace.records[1].f_xbar == Catch::Approx(-2.0));
  REQUIRE(trace.final_est.xhat[0] == Catch::Approx(-1.0));   // mean of {0, -2}
  REQUIRE(trace.final_est.xtilde[0] == Catch::Approx(-2.0)); // single tail term
}

TEST_CASE("sparse record grids keep only the requested rows") {
  ProblemInstance p = unit_quadratic(2, 2.0);
  solve_reference_minimizer(p);
  RunOptions opts;
  opts.T0 = 100;
  opts.seed = 8;
  opts.record_at = {1, 10, 100};
  const RunTrace trace =
      run(p, complete_mixing(1), EstimatorSpec::kernel_2d(legendre_kernel(2.0)),
          Schedule::theorem1(2.0, 2.0), NoiseModel::gaussian(1.0), opts);
  REQUIRE(trace.records.size() == 3);
  REQUIRE(trace.records[0].t == 1);
  REQUIRE(trace.records[1].t == 10);
  REQUIRE(trace.records[2].t == 100);
  REQUIRE(trace.records[2].queries_per_agent == 99 * 4);
}
