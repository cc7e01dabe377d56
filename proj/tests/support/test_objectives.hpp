// Shared test fixtures: simple closed-form objectives, a Dykstra projection
// oracle, and exact ball-average cubature for low dimensions. Everything here
// is an independent oracle, deliberately kept off the library's code paths.

#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "dzo/kernel.hpp"
#include "dzo/problems.hpp"

namespace dzo::testing {

inline Objective zero_objective(int d) {
  Objective o;
  o.dim = d;
  o.evaluate = [](const Eigen::VectorXd&) { return 0.0; };
  o.true_gradient = [d](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(d); };
  o.holder_L = 0.0;
  o.holder_beta = 2.0;
  o.grad_lipschitz = 0.0;
  return o;
}

inline Objective linear_objective(const Eigen::VectorXd& slope) {
  Objective o;
  o.dim = static_cast<int>(slope.size());
  o.evaluate = [slope](const Eigen::VectorXd& x) { return slope.dot(x); };
  o.true_gradient = [slope](const Eigen::VectorXd&) { return slope; };
  o.holder_L = 0.0;  // exact Taylor expansion at every order
  o.holder_beta = 2.0;
  o.grad_lipschitz = 0.0;
  return o;
}

// f(x) = sum_i x_i^3. The degree-2 Taylor remainder along any direction z is
// sum_i z_i^3 <= ||z||^3, so the order-3 class constant is 1.
inline Objective cubic_sum_objective(int d) {
  Objective o;
  o.dim = d;
  o.evaluate = [](const Eigen::VectorXd& x) { return x.array().cube().sum(); };
  o.true_gradient = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(3.0 * x.array().square());
  };
  o.holder_L = 1.0;
  o.holder_beta = 3.0;
  o.grad_lipschitz = 0.0;  // unbounded globally; unused in these tests
  return o;
}

// Smooth quartic with a mild cross term; gradient in closed form.
inline Objective quartic_objective(int d) {
  Objective o;
  o.dim = d;
  o.evaluate = [d](const Eigen::VectorXd& x) {
    double v = 0.5 * x.squaredNorm() + x.array().pow(4).sum();
    if (d >= 2) v += x[0] * x[1];
    return v;
  };
  o.true_gradient = [d](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = x + Eigen::VectorXd(4.0 * x.array().cube());
    if (d >= 2) {
      g[0] += x[1];
      g[1] += x[0];
    }
    return g;
  };
  o.holder_beta = 2.0;
  o.grad_lipschitz = 0.0;  // set by callers if needed
  return o;
}

// Spectral-norm bound on the quartic's Hessian over {||y||_inf <= r}.
inline double quartic_hessian_bound(int d, double r) {
  // Hessian = diag(1 + 12 y_i^2) + e1 e2' + e2 e1'
  return 1.0 + 12.0 * r * r + (d >= 2 ? 1.0 : 0.0);
}

// Dykstra's alternating projections onto ball(r) and the nonpositive orthant.
inline Eigen::VectorXd dykstra_ball_cap(const Eigen::VectorXd& x0, double r, int iters = 200) {
  Eigen::VectorXd x = x0;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(x0.size());
  Eigen::VectorXd q = Eigen::VectorXd::Zero(x0.size());
  for (int k = 0; k < iters; ++k) {
    const Eigen::VectorXd y = [&] {
      const Eigen::VectorXd w = x + p;
      const double norm = w.norm();
      return norm <= r ? w : Eigen::VectorXd(w * (r / norm));
    }();
    p = x + p - y;
    const Eigen::VectorXd z = (y + q).cwiseMin(0.0);
    q = y + q - z;
    x = z;
  }
  return x;
}

// Mean of a vector-valued function over the solid ball x + h*B_d, exact for
// polynomial integrands of moderate degree; d in {1, 2, 3}.
template <typename Fn>
Eigen::VectorXd ball_mean(Fn&& fn, const Eigen::VectorXd& x, double h, int out_dim) {
  const int d = static_cast<int>(x.size());
  const Quadrature radial = gauss_legendre(16);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(out_dim);
  if (d == 1) {
    const Quadrature q = gauss_legendre(32);
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
      Eigen::VectorXd p(1);
      p[0] = x[0] + h * q.nodes[i];
      acc += 0.5 * q.weights[i] * fn(p);
    }
    return acc;
  }
  if (d == 2) {
    constexpr int M = 32;
    for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
      const double s = 0.5 * (radial.nodes[i] + 1.0);  // map to [0,1]
      const double w = 0.5 * radial.weights[i];
      Eigen::VectorXd sphere = Eigen::VectorXd::Zero(out_dim);
      for (int m = 0; m < M; ++m) {
        const double th = 2.0 * std::numbers::pi * m / M;
        Eigen::VectorXd p(2);
        p[0] = x[0] + h * s * std::cos(th);
        p[1] = x[1] + h * s * std::sin(th);
        sphere += fn(p);
      }
      acc += w * (2.0 * s) * (sphere / M);  // density of radius on the disk: 2s
    }
    return acc;
  }
  if (d == 3) {
    constexpr int M = 24;
    const Quadrature polar = gauss_legendre(12);
    for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
      const double s = 0.5 * (radial.nodes[i] + 1.0);
      const double w = 0.5 * radial.weights[i];
      Eigen::VectorXd sphere = Eigen::VectorXd::Zero(out_dim);
      for (std::size_t a = 0; a < polar.nodes.size(); ++a) {
        const double mu = polar.nodes[a];
        const double ring_w = 0.5 * polar.weights[a];
        const double rho = std::sqrt(std::max(0.0, 1.0 - mu * mu));
        Eigen::VectorXd ring = Eigen::VectorXd::Zero(out_dim);
        for (int m = 0; m < M; ++m) {
          const double th = 2.0 * std::numbers::pi * m / M;
          Eigen::VectorXd p(3);
          p[0] = x[0] + h * s * rho * std::cos(th);
          p[1] = x[1] + h * s * rho * std::sin(th);
          p[2] = x[2] + h * s * mu;
          ring += fn(p);
        }
        sphere += ring_w * (ring / M);
      }
      acc += w * (3.0 * s * s) * sphere;  // density of radius in the ball: 3s^2
    }
    return acc;
  }
  throw std::invalid_argument("ball_mean: d must be 1, 2 or 3");
}

}  // namespace dzo::testing
