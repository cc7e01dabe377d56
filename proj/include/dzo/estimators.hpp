// Zero-order gradient estimators.
//
// kernel_2d_estimate probes x +- h r e_j for every coordinate j with a single
// shared r ~ U[-1,1] and multiplies the difference quotients by K(r): 2d
// queries, one scalar random draw per call.
//
// two_point_estimate probes x +- h zeta along one random unit direction:
// 2 queries per call, unbiased for the gradient of the ball-smoothed
// surrogate E[F(x + h u)], u uniform on the unit ball.
//
// Probe points may leave the feasible set; query oracles must accept them.

#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dzo/kernel.hpp"
#include "dzo/noise.hpp"
#include "dzo/problems.hpp"
#include "dzo/rng.hpp"

namespace dzo {

// Noisy query oracle: (probe point, query index, side) -> observed value.
using QueryFn = std::function<double(const Eigen::VectorXd&, int, int)>;

struct EstimatorSpec {
  enum class Kind { kernel_2d, two_point, oracle };

  Kind kind = Kind::kernel_2d;
  Kernel kernel;  // used by kernel_2d only

  int queries_per_call(int d) const {
    switch (kind) {
      case Kind::kernel_2d: return 2 * d;
      case Kind::two_point: return 2;
      case Kind::oracle: return 0;  // diagnostic, exact gradients, no queries
    }
    return 0;
  }

  static EstimatorSpec kernel_2d(Kernel k) {
    EstimatorSpec s;
    s.kind = Kind::kernel_2d;
    s.kernel = std::move(k);
    return s;
  }
  static EstimatorSpec two_point() {
    EstimatorSpec s;
    s.kind = Kind::two_point;
    return s;
  }
  static EstimatorSpec oracle() {
    EstimatorSpec s;
    s.kind = Kind::oracle;
    return s;
  }
};

struct GradientSample {
  Eigen::VectorXd g;
  int queries_used = 0;
  std::vector<std::pair<Eigen::VectorXd, double>> raw;  // (probe, value) when recorded
};

struct EstimateOptions {
  const double* forced_r = nullptr;                  // kernel_2d unit tests
  const Eigen::VectorXd* forced_direction = nullptr; // two_point unit tests
  bool record_raw = false;
};

// Wraps a clean evaluation into a noisy counting oracle for one
// (agent, iteration) slot; noise addressing is per (query index, side).
inline QueryFn make_noisy_oracle(std::function<double(const Eigen::VectorXd&)> eval,
                                 const NoiseModel& noise, const RngStream& noise_root,
                                 int agent, long iteration, long* query_counter = nullptr) {
  return [eval = std::move(eval), noise, noise_root, agent, iteration, query_counter](
             const Eigen::VectorXd& probe, int query_index, int side) {
    if (query_counter) ++*query_counter;
    return eval(probe) + draw_noise(noise, {agent, iteration, query_index, side}, noise_root);
  };
}

inline Eigen::VectorXd sample_unit_sphere(int d, RngStream& stream) {
  if (d < 1) throw std::invalid_argument("sample_unit_sphere: d >= 1");
  for (;;) {
    Eigen::VectorXd v = stream.gaussian_vector(d);
    const double norm = v.norm();
    if (norm > 0.0) return v / norm;
  }
}

inline GradientSample kernel_2d_estimate(const QueryFn& F, const Eigen::VectorXd& x, double h,
                                         const Kernel& k, RngStream& stream,
                                         const EstimateOptions& opts = {}) {
  if (h <= 0.0) throw std::invalid_argument("kernel_2d_estimate: h > 0 required");
  const int d = static_cast<int>(x.size());
  const double r = opts.forced_r ? *opts.forced_r : stream.uniform(-1.0, 1.0);
  const double kr = k(r);
  GradientSample out;
  out.g.resize(d);
  out.queries_used = 2 * d;
  Eigen::VectorXd probe = x;
  for (int j = 0; j < d; ++j) {
    probe[j] = x[j] + h * r;
    const double y_plus = F(probe, j, +1);
    if (opts.record_raw) out.raw.emplace_back(probe, y_plus);
    probe[j] = x[j] - h * r;
    const double y_minus = F(probe, j, -1);
    if (opts.record_raw) out.raw.emplace_back(probe, y_minus);
    probe[j] = x[j];
    out.g[j] = (y_plus - y_minus) * kr / (2.0 * h);
  }
  return out;
}

inline GradientSample two_point_estimate(const QueryFn& F, const Eigen::VectorXd& x, double h,
                                         RngStream& stream, const EstimateOptions& opts = {}) {
  if (h <= 0.0) throw std::invalid_argument("two_point_estimate: h > 0 required");
  const int d = static_cast<int>(x.size());
  const Eigen::VectorXd zeta =
      opts.forced_direction ? *opts.forced_direction : sample_unit_sphere(d, stream);
  const Eigen::VectorXd plus = x + h * zeta;
  const Eigen::VectorXd minus = x - h * zeta;
  const double y = F(plus, 0, +1);
  const double y_prime = F(minus, 0, -1);
  GradientSample out;
  out.g = (static_cast<double>(d) / (2.0 * h)) * (y - y_prime) * zeta;
  out.queries_used = 2;
  if (opts.record_raw) {
    out.raw.emplace_back(plus, y);
    out.raw.emplace_back(minus, y_prime);
  }
  return out;
}

// --- statistical checks ---

struct BiasCheck {
  double bias_norm = 0.0;
  double bound = 0.0;     // L * kappa_beta * sqrt(d) * h^(beta-1)
  double norm_se = 0.0;   // sqrt(sum of per-component squared standard errors)
  bool pass = false;
};

// Monte-Carlo bias of the kernel estimator against the diagnostic gradient,
// noiseless queries. kappa_beta is evaluated at the objective's own order.
inline BiasCheck bias_check(const Objective& F, const Eigen::VectorXd& x, double h,
                            const Kernel& k, int n_mc, RngStream stream) {
  const int d = F.dim;
  QueryFn oracle = [&F](const Eigen::VectorXd& p, int, int) { return F.evaluate(p); };
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(d);
  for (int s = 0; s < n_mc; ++s) {
    const GradientSample gs = kernel_2d_estimate(oracle, x, h, k, stream);
    const Eigen::VectorXd delta = gs.g - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta.cwiseProduct(gs.g - mean);
  }
  BiasCheck out;
  out.bias_norm = (mean - F.true_gradient(x)).norm();
  out.bound = F.holder_L * kappa_beta_for(k, F.holder_beta) *
              std::sqrt(static_cast<double>(d)) * std::pow(h, F.holder_beta - 1.0);
  out.norm_se = std::sqrt((m2 / (static_cast<double>(n_mc) - 1.0)).sum() / n_mc);
  out.pass = out.bias_norm <= out.bound + 3.0 * out.norm_se;
  return out;
}

struct SecondMomentCheck {
  double m2 = 0.0;
  double bound = 0.0;        // expectation-convention kappa
  double bound_loose = 0.0;  // Lebesgue-convention kappa (2x), the larger of the two
  double se = 0.0;
  bool pass = false;
};

// Monte-Carlo E||g||^2 against (3 d kappa / 2)(sigma^2/h^2 + 3 Lbar^2 h^2 / 4)
// + 9 G^2 kappa. grad_bound_G is the sup gradient norm on the feasible set.
inline SecondMomentCheck second_moment_check(const Objective& F, const Eigen::VectorXd& x,
                                             double h, const Kernel& k, const NoiseModel& noise,
                                             double grad_bound_G, int n_mc, RngStream stream) {
  const int d = F.dim;
  RngStream noise_root = stream.fork(1);
  RngStream est_stream = stream.fork(2);
  double mean = 0.0, msq = 0.0;
  for (int s = 0; s < n_mc; ++s) {
    QueryFn oracle = make_noisy_oracle(F.evaluate, noise, noise_root, 0, s);
    const GradientSample gs = kernel_2d_estimate(oracle, x, h, k, est_stream);
    const double v = gs.g.squaredNorm();
    const double delta = v - mean;
    mean += delta / static_cast<double>(s + 1);
    msq += delta * (v - mean);
  }
  const double kappa = k.moments.kappa;
  const double sigma2 = noise.second_moment_bound();
  const double lbar = F.grad_lipschitz;
  SecondMomentCheck out;
  out.m2 = mean;
  out.bound = 1.5 * d * kappa * (sigma2 / (h * h) + 0.75 * lbar * lbar * h * h) +
              9.0 * grad_bound_G * grad_bound_G * kappa;
  out.bound_loose = 2.0 * out.bound;
  out.se = std::sqrt(msq / (static_cast<double>(n_mc) - 1.0) / n_mc);
  out.pass = out.m2 <= out.bound + 3.0 * out.se;
  return out;
}

}  // namespace dzo
