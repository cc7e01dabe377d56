// The synchronous distributed zero-order loop: per agent, estimate the local
// gradient from noisy queries, take a projected step, then mix all agents'
// outputs through the consensus matrix. States x^i(t) are produced for
// t = 1..T0 (updates run for t = 1..T0-1 from a common initial point).
//
// Determinism contract: all randomness is addressed by (seed, purpose, agent,
// iteration), the mixing step is a fixed matrix product, and the trace is
// appended by a single writer, so identical (config, seed) runs are bitwise
// identical regardless of thread count.

#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dzo/consensus.hpp"
#include "dzo/estimators.hpp"
#include "dzo/problems.hpp"

namespace dzo {

struct Schedule {
  enum class Kind { theorem1, corollary_local, theorem2_beta2 };

  Kind kind = Kind::theorem1;
  double alpha = 1.0;
  double beta = 2.0;
  double L = 0.0;      // theorem2_beta2 only
  double sigma = 0.0;  // theorem2_beta2 only
  int d = 0;           // theorem2_beta2 only

  static Schedule theorem1(double alpha, double beta) {
    if (alpha <= 0.0 || beta < 2.0) throw std::invalid_argument("schedule: alpha > 0, beta >= 2");
    return {Kind::theorem1, alpha, beta, 0.0, 0.0, 0};
  }
  static Schedule corollary_local(double alpha, double beta) {
    if (alpha <= 0.0 || beta < 2.0) throw std::invalid_argument("schedule: alpha > 0, beta >= 2");
    return {Kind::corollary_local, alpha, beta, 0.0, 0.0, 0};
  }
  static Schedule theorem2_beta2(double alpha, double L, double sigma, int d) {
    if (alpha <= 0.0 || L <= 0.0 || sigma <= 0.0 || d < 1)
      throw std::invalid_argument("theorem2_beta2 schedule: alpha, L, sigma > 0, d >= 1");
    return {Kind::theorem2_beta2, alpha, 2.0, L, sigma, d};
  }

  double eta(long t) const {
    switch (kind) {
      case Kind::theorem1: return 2.0 / (alpha * static_cast<double>(t));
      case Kind::corollary_local: return 4.0 / (alpha * static_cast<double>(t + 1));
      case Kind::theorem2_beta2: return 1.0 / (alpha * static_cast<double>(t));
    }
    return 0.0;
  }

  double h(long t) const {
    switch (kind) {
      case Kind::theorem1:
      case Kind::corollary_local:
        return std::pow(static_cast<double>(t), -1.0 / (2.0 * beta));
      case Kind::theorem2_beta2: {
        const double dd = static_cast<double>(d);
        return std::pow(3.0 * dd * dd * sigma * sigma /
                            (2.0 * L * alpha * static_cast<double>(t) + 9.0 * L * L * dd * dd),
                        0.25);
      }
    }
    return 0.0;
  }
};

// (1/n) sum_i ||x^i - xbar||^2.
inline double mean_discrepancy(const std::vector<Eigen::VectorXd>& states) {
  if (states.empty()) throw std::invalid_argument("mean_discrepancy: empty input");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(states.front().size());
  for (const auto& x : states) {
    if (x.size() != mean.size()) throw std::invalid_argument("mean_discrepancy: dimension mismatch");
    mean += x;
  }
  mean /= static_cast<double>(states.size());
  double acc = 0.0;
  for (const auto& x : states) acc += (x - mean).squaredNorm();
  return acc / static_cast<double>(states.size());
}

inline double mean_discrepancy(const Eigen::MatrixXd& states_cols, const Eigen::VectorXd& xbar) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < states_cols.cols(); ++i)
    acc += (states_cols.col(i) - xbar).squaredNorm();
  return acc / static_cast<double>(states_cols.cols());
}

// Iterations affordable under a per-agent query budget T.
inline long budget_to_iterations(long T, const EstimatorSpec& est, int d) {
  const long qpc = est.queries_per_call(d);
  if (qpc <= 0) throw std::invalid_argument("budget_to_iterations: estimator has no query budget");
  if (T < qpc) throw std::invalid_argument("budget_to_iterations: budget below one estimator call");
  return T / qpc;
}

struct IterationRecord {
  long t = 0;
  long queries_per_agent = 0;  // consumed to reach x(t)
  double f_xbar = 0.0;
  double f_error = 0.0;  // f(xbar) - f_star (NaN when no reference minimizer)
  double discrepancy = 0.0;
  double dist_to_xstar = 0.0;
};

struct OutputEstimators {
  Eigen::VectorXd xbar;                  // x_bar(t)
  Eigen::VectorXd xhat;                  // (1/t) sum_{s<=t} x_bar(s)
  Eigen::VectorXd xtilde;                // mean of x_bar(s), s in (floor(t/2), t]
  std::vector<Eigen::VectorXd> xhat_local;  // (2/(t(t+1))) sum s * x^i(s)
};

struct EstimatorSnapshot {
  long t = 0;
  OutputEstimators est;
};

struct RunTrace {
  long T0 = 0;
  std::uint64_t seed = 0;
  int n = 0, d = 0;
  long queries_per_call = 0;
  double sum_f_xbar = 0.0;  // sum over all t = 1..T0 of f(x_bar(t))
  std::vector<IterationRecord> records;
  OutputEstimators final_est;
  std::vector<EstimatorSnapshot> checkpoints;
};

struct RunOptions {
  long T0 = 2;
  std::uint64_t seed = 0;
  Eigen::VectorXd x_init;         // empty -> Proj(0)
  std::vector<long> record_at;    // empty -> every t
  std::vector<long> checkpoints;  // output-estimator snapshots at these t
  bool check_invariants = false;
};

namespace detail {

inline void check_schedule_estimator(const Schedule& sched, const EstimatorSpec& est) {
  const bool two_point = est.kind == EstimatorSpec::Kind::two_point;
  const bool kernel = est.kind == EstimatorSpec::Kind::kernel_2d;
  if (sched.kind == Schedule::Kind::theorem2_beta2 && !two_point)
    throw std::invalid_argument("theorem2_beta2 schedule requires the two_point estimator");
  if (sched.kind != Schedule::Kind::theorem2_beta2 && two_point)
    throw std::invalid_argument("two_point estimator requires the theorem2_beta2 schedule");
  if (kernel && est.kernel.coeffs.empty())
    throw std::invalid_argument("kernel_2d estimator needs a kernel");
}

}  // namespace detail

inline RunTrace run(const ProblemInstance& p, const ConsensusMatrix& cm, const EstimatorSpec& est,
                    const Schedule& sched, const NoiseModel& noise, const RunOptions& opts) {
  const int n = p.n_agents();
  const int d = p.dim();
  if (cm.n() != n) throw std::invalid_argument("run: consensus matrix size != number of agents");
  if (opts.T0 < 2) throw std::invalid_argument("run: T0 >= 2 required");
  {
    const ValidationReport vr = validate(cm);
    if (!vr.pass()) throw std::invalid_argument("run: consensus matrix fails validation (rho=" +
                                                std::to_string(vr.rho) + ")");
  }
  detail::check_schedule_estimator(sched, est);

  const long T0 = opts.T0;
  const long qpc = est.queries_per_call(d);

  RngStream root(opts.seed);
  const RngStream est_root = root.fork(0xE5711ACEULL);
  const RngStream noise_root = root.fork(0x10155E00ULL);

  Eigen::VectorXd x0 = opts.x_init.size() ? p.theta.project(opts.x_init)
                                          : p.theta.project(Eigen::VectorXd::Zero(d));
  Eigen::MatrixXd X(d, n);
  for (int i = 0; i < n; ++i) X.col(i) = x0;

  std::set<long> record_set(opts.record_at.begin(), opts.record_at.end());
  const bool record_all = opts.record_at.empty();
  std::set<long> checkpoint_set(opts.checkpoints.begin(), opts.checkpoints.end());

  // Prefix sums of x_bar needed for tail averages at checkpoints and at T0.
  std::set<long> prefix_needed;
  for (long c : checkpoint_set) prefix_needed.insert(c / 2);
  prefix_needed.insert(T0 / 2);
  std::map<long, Eigen::VectorXd> prefix_at;
  prefix_at[0] = Eigen::VectorXd::Zero(d);

  Eigen::VectorXd sum_xbar = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd weighted_local = Eigen::MatrixXd::Zero(d, n);  // sum_t t * x^i(t)

  RunTrace trace;
  trace.T0 = T0;
  trace.seed = opts.seed;
  trace.n = n;
  trace.d = d;
  trace.queries_per_call = qpc;
  if (record_all) trace.records.reserve(static_cast<std::size_t>(T0));

  auto snapshot = [&](long t) {
    OutputEstimators oe;
    oe.xbar = X.rowwise().mean();
    oe.xhat = sum_xbar / static_cast<double>(t);
    const long half = t / 2;
    oe.xtilde = (sum_xbar - prefix_at.at(half)) / static_cast<double>(t - half);
    oe.xhat_local.reserve(n);
    const double w = 2.0 / (static_cast<double>(t) * static_cast<double>(t + 1));
    for (int i = 0; i < n; ++i) oe.xhat_local.push_back(w * weighted_local.col(i));
    return oe;
  };

  Eigen::MatrixXd U(d, n);
  Eigen::MatrixXd G(d, n);
  for (long t = 1; t <= T0; ++t) {
    const Eigen::VectorXd xbar = X.rowwise().mean();
    sum_xbar += xbar;
    for (int i = 0; i < n; ++i) weighted_local.col(i) += static_cast<double>(t) * X.col(i);
    if (prefix_needed.count(t)) prefix_at[t] = sum_xbar;

    const double f_xbar = p.f(xbar);
    trace.sum_f_xbar += f_xbar;
    if (record_all || record_set.count(t)) {
      IterationRecord rec;
      rec.t = t;
      rec.queries_per_agent = (t - 1) * qpc;
      rec.f_xbar = f_xbar;
      rec.f_error = p.f_star ? f_xbar - *p.f_star : std::numeric_limits<double>::quiet_NaN();
      rec.discrepancy = mean_discrepancy(X, xbar);
      rec.dist_to_xstar =
          p.x_star ? (xbar - *p.x_star).norm() : std::numeric_limits<double>::quiet_NaN();
      trace.records.push_back(rec);
    }
    if (checkpoint_set.count(t)) trace.checkpoints.push_back({t, snapshot(t)});

    if (t == T0) break;

    const double eta = sched.eta(t);
    const double h = sched.h(t);
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd g;
      switch (est.kind) {
        case EstimatorSpec::Kind::kernel_2d: {
          RngStream s = est_root.fork(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(t));
          const QueryFn oracle = make_noisy_oracle(p.locals[i].evaluate, noise, noise_root, i, t);
          g = kernel_2d_estimate(oracle, X.col(i), h, est.kernel, s).g;
          break;
        }
        case EstimatorSpec::Kind::two_point: {
          RngStream s = est_root.fork(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(t));
          const QueryFn oracle = make_noisy_oracle(p.locals[i].evaluate, noise, noise_root, i, t);
          g = two_point_estimate(oracle, X.col(i), h, s).g;
          break;
        }
        case EstimatorSpec::Kind::oracle:
          g = p.locals[i].true_gradient(X.col(i));
          break;
      }
      G.col(i) = g;
      U.col(i) = p.theta.project(X.col(i) - eta * g);
    }

    Eigen::MatrixXd X_next = U * cm.W.transpose();

    if (opts.check_invariants) {
      const Eigen::VectorXd ubar = U.rowwise().mean();
      const Eigen::VectorXd xbar_next = X_next.rowwise().mean();
      // z^i = Proj(x^i - eta g^i) - (x^i - eta g^i); ||z^i|| <= eta ||g^i||
      double scale = 1.0;
      Eigen::VectorXd zbar = Eigen::VectorXd::Zero(d);
      for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd step = X.col(i) - eta * G.col(i);
        const Eigen::VectorXd z = U.col(i) - step;
        zbar += z;
        scale = std::max({scale, X.col(i).cwiseAbs().maxCoeff(), eta * G.col(i).cwiseAbs().maxCoeff()});
        if (z.norm() > eta * G.col(i).norm() * (1.0 + 1e-12) + 1e-15)
          throw std::logic_error("invariant: projection residual exceeds eta*||g||");
        if (!p.theta.contains(U.col(i)))
          throw std::logic_error("invariant: projected point left the feasible set");
      }
      zbar /= static_cast<double>(n);
      const Eigen::VectorXd predicted = xbar - eta * (G.rowwise().mean()) + zbar;
      if ((xbar_next - predicted).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::logic_error("invariant: average-dynamics identity violated");
      double spread_next = 0.0, spread_u = 0.0;
      for (int i = 0; i < n; ++i) {
        spread_next += (X_next.col(i) - xbar_next).squaredNorm();
        spread_u += (U.col(i) - ubar).squaredNorm();
      }
      if (spread_next > cm.rho * cm.rho * spread_u * (1.0 + 1e-9) + 1e-15)
        throw std::logic_error("invariant: consensus contraction violated");
      for (int i = 0; i < n; ++i)
        if (!p.theta.contains(X_next.col(i)))
          throw std::logic_error("invariant: mixed state left the feasible set");
    }

    X = std::move(X_next);
  }

  trace.final_est = snapshot(T0);
  return trace;
}

// Output estimators recomputed at the end of a trace (streaming results are
// already stored in final_est; this is the public accessor form).
inline OutputEstimators output_estimators(const RunTrace& trace) { return trace.final_est; }

}  // namespace dzo
