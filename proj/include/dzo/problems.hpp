// Objective functions, feasible sets with exact Euclidean projection, and
// problem instances (n local objectives whose average is strongly convex).
//
// true_gradient is a diagnostic oracle: the optimizer's query path never
// touches it; it exists for reference solves, bias measurements and tests.

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dzo/rng.hpp"

namespace dzo {

struct FeasibleSet {
  enum class Kind { ball, box, ball_cap_nonpositive };

  Kind kind = Kind::ball;
  int dim = 0;
  double radius = 1.0;
  Eigen::VectorXd lo, hi;

  static FeasibleSet ball(int d, double r) {
    if (d < 1 || r <= 0.0) throw std::invalid_argument("ball: need d >= 1, r > 0");
    FeasibleSet s;
    s.kind = Kind::ball;
    s.dim = d;
    s.radius = r;
    return s;
  }

  static FeasibleSet box(Eigen::VectorXd lo_, Eigen::VectorXd hi_) {
    if (lo_.size() == 0 || lo_.size() != hi_.size() || (hi_ - lo_).minCoeff() < 0.0)
      throw std::invalid_argument("box: need lo <= hi, matching dims");
    FeasibleSet s;
    s.kind = Kind::box;
    s.dim = static_cast<int>(lo_.size());
    s.lo = std::move(lo_);
    s.hi = std::move(hi_);
    return s;
  }

  static FeasibleSet ball_cap_nonpositive(int d, double r) {
    FeasibleSet s = ball(d, r);
    s.kind = Kind::ball_cap_nonpositive;
    return s;
  }

  Eigen::VectorXd project(const Eigen::VectorXd& x) const {
    if (x.size() != dim) throw std::invalid_argument("project: dimension mismatch");
    switch (kind) {
      case Kind::ball: {
        const double norm = x.norm();
        return norm <= radius ? x : Eigen::VectorXd(x * (radius / norm));
      }
      case Kind::box:
        return x.cwiseMax(lo).cwiseMin(hi);
      case Kind::ball_cap_nonpositive: {
        // The nonpositive orthant is a cone containing 0 and the ball is
        // centered at 0, so clamp-then-scale is the exact projection.
        Eigen::VectorXd y = x.cwiseMin(0.0);
        const double norm = y.norm();
        return norm <= radius ? y : Eigen::VectorXd(y * (radius / norm));
      }
    }
    throw std::logic_error("unreachable");
  }

  bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const {
    if (x.size() != dim) return false;
    switch (kind) {
      case Kind::ball: return x.norm() <= radius + tol;
      case Kind::box: return (x - lo).minCoeff() >= -tol && (hi - x).minCoeff() >= -tol;
      case Kind::ball_cap_nonpositive: return x.norm() <= radius + tol && x.maxCoeff() <= tol;
    }
    return false;
  }

  // Euclidean diameter.
  double diameter() const {
    switch (kind) {
      case Kind::ball: return 2.0 * radius;
      case Kind::box: return (hi - lo).norm();
      case Kind::ball_cap_nonpositive:
        // d >= 2 has antipodal boundary pairs with nonpositive coordinates.
        return dim >= 2 ? 2.0 * radius : radius;
    }
    return 0.0;
  }

  double max_norm() const {
    switch (kind) {
      case Kind::ball:
      case Kind::ball_cap_nonpositive:
        return radius;
      case Kind::box:
        return lo.cwiseAbs().cwiseMax(hi.cwiseAbs()).norm();
    }
    return 0.0;
  }
};

inline Eigen::VectorXd project(const FeasibleSet& s, const Eigen::VectorXd& x) {
  return s.project(x);
}

struct Objective {
  int dim = 0;
  std::function<double(const Eigen::VectorXd&)> evaluate;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> true_gradient;

  double holder_L = 0.0;     // Holder-class constant
  double holder_beta = 2.0;  // Holder order
  double grad_lipschitz = 0.0;
  // sup of ||grad|| over {x : ||x|| <= max_norm}; used to fill G once the
  // feasible set is known.
  std::function<double(double /*max_norm*/)> grad_norm_bound;
};

struct ProblemInstance {
  std::vector<Objective> locals;
  double alpha = 0.0;  // strong convexity of the average objective
  FeasibleSet theta;
  double grad_bound_G = 0.0;  // sup ||grad f_i|| over theta, maximized over i
  std::optional<Eigen::VectorXd> x_star;
  std::optional<double> f_star;

  int dim() const { return locals.empty() ? 0 : locals.front().dim; }
  int n_agents() const { return static_cast<int>(locals.size()); }

  double f(const Eigen::VectorXd& x) const {
    double acc = 0.0;
    for (const auto& o : locals) acc += o.evaluate(x);
    return acc / static_cast<double>(locals.size());
  }

  Eigen::VectorXd grad_f(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    for (const auto& o : locals) g += o.true_gradient(x);
    return g / static_cast<double>(locals.size());
  }

  double mean_grad_lipschitz() const {
    double acc = 0.0;
    for (const auto& o : locals) acc += o.grad_lipschitz;
    return acc / static_cast<double>(locals.size());
  }

  double max_grad_lipschitz() const {
    double m = 0.0;
    for (const auto& o : locals) m = std::max(m, o.grad_lipschitz);
    return m;
  }

  double max_holder_L() const {
    double m = 0.0;
    for (const auto& o : locals) m = std::max(m, o.holder_L);
    return m;
  }
};

inline ProblemInstance make_problem(std::vector<Objective> locals, double alpha, FeasibleSet theta) {
  if (locals.empty()) throw std::invalid_argument("make_problem: need >= 1 local objective");
  for (const auto& o : locals)
    if (o.dim != theta.dim) throw std::invalid_argument("make_problem: dimension mismatch");
  ProblemInstance p;
  p.locals = std::move(locals);
  p.alpha = alpha;
  p.theta = std::move(theta);
  const double r = p.theta.max_norm();
  for (const auto& o : p.locals)
    if (o.grad_norm_bound) p.grad_bound_G = std::max(p.grad_bound_G, o.grad_norm_bound(r));
  return p;
}

// f(x) = (alpha/2) (x-c)' A (x-c), gradient alpha A (x-c). A must be symmetric
// positive definite; constants come from its eigenvalues.
inline Objective quadratic_objective(const Eigen::MatrixXd& A, double alpha,
                                     const Eigen::VectorXd& shift = Eigen::VectorXd()) {
  const int d = static_cast<int>(A.rows());
  if (A.cols() != d || d < 1) throw std::invalid_argument("quadratic_objective: A must be square");
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("quadratic_objective: A must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A, Eigen::EigenvaluesOnly);
  const double lambda_min = eig.eigenvalues().minCoeff();
  const double lambda_max = eig.eigenvalues().maxCoeff();
  if (lambda_min <= 0.0) throw std::invalid_argument("quadratic_objective: A must be positive definite");
  Eigen::VectorXd c = shift.size() ? shift : Eigen::VectorXd::Zero(d);
  if (c.size() != d) throw std::invalid_argument("quadratic_objective: shift dimension mismatch");

  Objective o;
  o.dim = d;
  o.evaluate = [A, alpha, c](const Eigen::VectorXd& x) {
    const Eigen::VectorXd z = x - c;
    return 0.5 * alpha * z.dot(A * z);
  };
  o.true_gradient = [A, alpha, c](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(alpha * (A * (x - c)));
  };
  o.holder_beta = 2.0;
  o.holder_L = 0.5 * alpha * lambda_max;  // first-order Taylor remainder constant
  o.grad_lipschitz = alpha * lambda_max;
  const double shift_norm = c.norm();
  o.grad_norm_bound = [alpha, lambda_max, shift_norm](double max_norm) {
    return alpha * lambda_max * (max_norm + shift_norm);
  };
  return o;
}

// --- piecewise test perturbation ---
//
// psi is the second antiderivative of the tent-shaped phi (slopes +-2/a,
// support [-a, a]); psi' and psi are C^1 with the breakpoints at +-a, +-a/2.

inline double appendix_e_psi(double x, double a) {
  if (x < -a) return 0.0;
  if (x < -0.5 * a) return x * x * x / (3.0 * a) + x * x + a * x + a * a / 3.0;
  if (x <= 0.5 * a) return -x * x * x / (3.0 * a) + 0.5 * a * x + 0.25 * a * a;
  if (x <= a) return x * x * x / (3.0 * a) - x * x + a * x + a * a / 6.0;
  return 0.5 * a * a;
}

inline double appendix_e_psi_prime(double x, double a) {
  if (x < -a) return 0.0;
  if (x < -0.5 * a) return x * x / a + 2.0 * x + a;
  if (x <= 0.5 * a) return 0.5 * a - x * x / a;
  if (x <= a) return x * x / a - 2.0 * x + a;
  return 0.0;
}

// f(x) = (alpha/2) x'Ax + L h^3 sum_i psi(x_i / h). The perturbation has an
// a.e.-bounded third derivative (|psi'''| <= 2/a), so the function sits in
// the order-3 Holder class with constant L/(3a) on top of the quadratic part.
inline Objective appendix_e_objective(double alpha, double L, double h, double a,
                                      const Eigen::MatrixXd& A) {
  if (a <= 0.0 || h <= 0.0 || L < 0.0)
    throw std::invalid_argument("appendix_e_objective: need a > 0, h > 0, L >= 0");
  Objective quad = quadratic_objective(A, alpha);
  const int d = quad.dim;
  const double quad_lip = quad.grad_lipschitz;
  auto quad_eval = quad.evaluate;
  auto quad_grad = quad.true_gradient;

  Objective o;
  o.dim = d;
  o.evaluate = [quad_eval, L, h, a](const Eigen::VectorXd& x) {
    double pert = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) pert += appendix_e_psi(x[i] / h, a);
    return quad_eval(x) + L * h * h * h * pert;
  };
  o.true_gradient = [quad_grad, L, h, a](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = quad_grad(x);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      g[i] += L * h * h * appendix_e_psi_prime(x[i] / h, a);
    return g;
  };
  o.holder_beta = 3.0;
  o.holder_L = L / (3.0 * a);
  o.grad_lipschitz = quad_lip + L * h;  // sup psi'' = sup phi = 1
  const double psi_prime_max = 0.5 * a;
  o.grad_norm_bound = [quad_lip, L, h, a, d, psi_prime_max](double max_norm) {
    (void)a;
    return quad_lip * max_norm + std::sqrt(static_cast<double>(d)) * L * h * h * psi_prime_max;
  };
  return o;
}

// A = B + I with B = S'S, S sparse (given density) with N(0,1)/sqrt(d)
// entries; lambda_min(A) >= 1 by construction.
inline Eigen::MatrixXd random_sparse_pd(int d, double density, std::uint64_t seed) {
  if (d < 1 || density < 0.0 || density > 1.0)
    throw std::invalid_argument("random_sparse_pd: need d >= 1, density in [0,1]");
  RngStream stream(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const double u = stream.u01();
      const double g = stream.gaussian();
      if (u < density) S(i, j) = g * scale;
    }
  Eigen::MatrixXd A = S.transpose() * S;
  A.diagonal().array() += 1.0;
  return A;
}

// Projected gradient descent with exact gradients of the average objective,
// step 1/(alpha + mean grad-Lipschitz), until the fixed-point residual drops
// below 1e-10 or the iteration cap is hit. Returns success.
inline bool solve_reference_minimizer(ProblemInstance& p, long max_iters = 1000000) {
  const double step = 1.0 / (p.alpha + p.mean_grad_lipschitz());
  Eigen::VectorXd x = p.theta.project(Eigen::VectorXd::Zero(p.dim()));
  double residual = std::numeric_limits<double>::infinity();
  for (long it = 0; it < max_iters; ++it) {
    Eigen::VectorXd next = p.theta.project(x - step * p.grad_f(x));
    residual = (next - x).norm();
    x = std::move(next);
    if (residual <= 1e-10) {
      p.x_star = x;
      p.f_star = p.f(x);
      return true;
    }
  }
  return false;
}

// Fixed-point residual at the stored minimizer, with the step size used by
// the instance-validity check.
inline double reference_minimizer_residual(const ProblemInstance& p) {
  if (!p.x_star) throw std::invalid_argument("reference_minimizer_residual: x_star not set");
  const double eta = 1.0 / (p.alpha * p.n_agents() * std::max(1e-12, p.max_grad_lipschitz()));
  const Eigen::VectorXd& x = *p.x_star;
  return (x - p.theta.project(x - eta * p.grad_f(x))).norm();
}

}  // namespace dzo
