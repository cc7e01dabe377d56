// Polynomial smoothing kernels on [-1, 1].
//
// A kernel of order ell satisfies, for r ~ U[-1,1],
//   E[K(r)] = 0,  E[r K(r)] = 1,  E[r^j K(r)] = 0 for j = 2..ell,
// so multiplying a symmetric difference quotient by K(r) reproduces the first
// derivative of any polynomial of degree <= ell exactly. Moments here are
// expectations under the uniform probability measure (Lebesgue integrals
// scaled by 1/2); a Lebesgue-normalized kernel becomes valid after
// multiplication by 2.
//
// Construction: with q_m the polynomials orthonormal under that probability
// measure (q_m = sqrt(2m+1) P_m, Legendre P_m), the kernel for smoothness
// order beta is K(u) = sum_{m<=ell} q_m'(0) q_m(u), ell = floor(beta). Only
// odd m contribute, so K is odd.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace dzo {

// --- dense polynomial helpers (monomial coefficients, index = power) ---

inline double poly_eval(const std::vector<double>& coeffs, double x) {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

inline std::vector<double> poly_derivative(const std::vector<double>& coeffs) {
  if (coeffs.size() <= 1) return {0.0};
  std::vector<double> d(coeffs.size() - 1);
  for (std::size_t k = 1; k < coeffs.size(); ++k) d[k - 1] = coeffs[k] * static_cast<double>(k);
  return d;
}

// Monomial coefficients of the Legendre polynomials P_0..P_m
// ((k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}).
inline std::vector<std::vector<double>> legendre_coefficients(int m_max) {
  std::vector<std::vector<double>> P(m_max + 1);
  P[0] = {1.0};
  if (m_max >= 1) P[1] = {0.0, 1.0};
  for (int k = 1; k < m_max; ++k) {
    std::vector<double> next(k + 2, 0.0);
    for (std::size_t j = 0; j < P[k].size(); ++j)
      next[j + 1] += (2.0 * k + 1.0) / (k + 1.0) * P[k][j];
    for (std::size_t j = 0; j < P[k - 1].size(); ++j)
      next[j] -= static_cast<double>(k) / (k + 1.0) * P[k - 1][j];
    P[k + 1] = std::move(next);
  }
  return P;
}

// Gauss-Legendre nodes and weights on [-1, 1] (Newton iteration on P_n).
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 2
};

inline Quadrature gauss_legendre(int n) {
  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 1; k < n; ++k) {
        const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    q.nodes[i] = -x;
    q.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    q.weights[i] = w;
    q.weights[n - 1 - i] = w;
  }
  return q;
}

// Real roots of the polynomial inside (lo, hi), via the companion matrix.
inline std::vector<double> poly_real_roots(const std::vector<double>& coeffs, double lo, double hi) {
  std::vector<double> c = coeffs;
  while (c.size() > 1 && std::abs(c.back()) < 1e-14 * std::max(1.0, std::abs(c.front()))) c.pop_back();
  const int deg = static_cast<int>(c.size()) - 1;
  if (deg < 1) return {};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -c[i] / c[deg];
  Eigen::EigenSolver<Eigen::MatrixXd> eig(companion);
  std::vector<double> roots;
  for (int i = 0; i < deg; ++i) {
    const auto z = eig.eigenvalues()[i];
    if (std::abs(z.imag()) < 1e-9 && z.real() > lo && z.real() < hi) roots.push_back(z.real());
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-12; }),
              roots.end());
  return roots;
}

struct KernelMoments {
  std::vector<double> mu;  // mu[j] = E[r^j K(r)], j = 0..ell
  double kappa = 0.0;      // E[K^2(r)]
  double kappa_beta = 0.0; // E[|r|^beta |K(r)|]
};

struct Kernel {
  std::vector<double> coeffs;  // monomial coefficients of K
  int ell = 0;
  double beta = 2.0;
  KernelMoments moments;  // cached at construction

  double operator()(double u) const { return poly_eval(coeffs, u); }

  nlohmann::json to_json() const {
    return {{"beta", beta}, {"ell", ell}, {"coeffs", coeffs}};
  }
};

// E[|r|^beta |K(r)|] for an arbitrary smoothness order. The integrand is
// smooth except at the roots of K and at 0, so the domain is split there and
// each piece integrated with 64-node Gauss-Legendre.
inline double kappa_beta_for(const Kernel& k, double beta) {
  static const Quadrature quad = gauss_legendre(64);
  std::vector<double> cuts{-1.0, 0.0, 1.0};
  for (double r : poly_real_roots(k.coeffs, -1.0, 1.0)) cuts.push_back(r);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s], b = cuts[s + 1];
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double piece = 0.0;
    for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
      const double u = mid + half * quad.nodes[i];
      piece += quad.weights[i] * std::pow(std::abs(u), beta) * std::abs(poly_eval(k.coeffs, u));
    }
    total += piece * half;
  }
  return 0.5 * total;  // probability convention
}

inline KernelMoments kernel_moments(const Kernel& k) {
  static const Quadrature quad = gauss_legendre(64);
  KernelMoments m;
  m.mu.assign(k.ell + 1, 0.0);
  for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
    const double u = quad.nodes[i];
    const double Ku = poly_eval(k.coeffs, u);
    const double w = 0.5 * quad.weights[i];
    double upow = 1.0;
    for (int j = 0; j <= k.ell; ++j) {
      m.mu[j] += w * upow * Ku;
      upow *= u;
    }
    m.kappa += w * Ku * Ku;
  }
  m.kappa_beta = kappa_beta_for(k, k.beta);
  return m;
}

inline Kernel legendre_kernel(double beta) {
  if (beta < 2.0) throw std::invalid_argument("legendre_kernel: beta must be >= 2");
  const int ell = static_cast<int>(std::floor(beta));
  const auto P = legendre_coefficients(ell);
  std::vector<double> coeffs(ell + 1, 0.0);
  for (int m = 1; m <= ell; m += 2) {  // even m have q_m'(0) = 0
    const double norm = std::sqrt(2.0 * m + 1.0);
    const double weight = norm * norm * P[m][1];  // q_m'(0) * sqrt(2m+1), P_m'(0) = coeff of u
    for (std::size_t j = 0; j < P[m].size(); ++j) coeffs[j] += weight * P[m][j];
  }
  Kernel k{std::move(coeffs), ell, beta, {}};
  k.moments = kernel_moments(k);
  return k;
}

// Residuals of the moment conditions; all must be <= tol for a valid kernel.
inline double kernel_moment_residual(const Kernel& k) {
  const KernelMoments m = kernel_moments(k);
  double worst = std::abs(m.mu[0]);
  if (k.ell >= 1) worst = std::max(worst, std::abs(m.mu[1] - 1.0));
  for (int j = 2; j <= k.ell; ++j) worst = std::max(worst, std::abs(m.mu[j]));
  return worst;
}

}  // namespace dzo
