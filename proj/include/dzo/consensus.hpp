// Consensus (mixing) matrices: Metropolis-style weights from a graph, the
// all-pairs averaging matrix, the contraction factor rho = ||W - J/n||_2,
// and a validation report for the symmetric doubly stochastic contract.

#pragma once

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "dzo/csv.hpp"
#include "dzo/topology.hpp"

namespace dzo {

struct ConsensusMatrix {
  Eigen::MatrixXd W;
  double rho = 0.0;

  int n() const { return static_cast<int>(W.rows()); }
};

// Spectral norm of W - (1/n) * ones. W must be square and symmetric within
// 1e-10; the result is the largest |eigenvalue| of the centered matrix.
// Dense symmetric eigensolve up to n = 512, shifted power iteration above
// (the ones-direction is annihilated by the centering itself).
inline double spectral_gap(const Eigen::MatrixXd& W) {
  const auto n = W.rows();
  if (n != W.cols()) throw std::invalid_argument("spectral_gap: matrix must be square");
  if (n == 0) throw std::invalid_argument("spectral_gap: empty matrix");
  const double asym = (W - W.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) throw std::invalid_argument("spectral_gap: matrix is not symmetric");

  Eigen::MatrixXd centered = W;
  centered.array() -= 1.0 / static_cast<double>(n);

  if (n <= 512) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centered, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
  }

  // Power iteration on the centered matrix to relative accuracy 1e-10.
  RngStream stream(0x5ca1ab1eULL);
  Eigen::VectorXd v = stream.gaussian_vector(static_cast<int>(n));
  v.array() -= v.mean();
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 200000; ++it) {
    Eigen::VectorXd w = centered * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    const double next = std::abs(w.dot(centered * w));
    if (it > 2 && std::abs(next - lambda) <= 1e-10 * std::max(1.0, next)) return next;
    lambda = next;
    v = std::move(w);
  }
  return lambda;
}

// W_ij = A_ij / (gamma * max{deg(i), deg(j)}) off-diagonal, diagonal fills the
// row to 1. gamma >= 1 keeps every diagonal entry nonnegative.
inline ConsensusMatrix metropolis_weights(const Graph& g, double gamma = 1.0) {
  if (gamma < 1.0) throw std::invalid_argument("metropolis_weights: gamma must be >= 1");
  const int n = g.n;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> deg(n);
  for (int i = 0; i < n; ++i) deg[i] = g.degree(i);
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i || g.adjacency(i, j) == 0.0) continue;
      const double w = 1.0 / (gamma * static_cast<double>(std::max(deg[i], deg[j])));
      W(i, j) = w;
      off += w;
    }
    W(i, i) = 1.0 - off;
  }
  ConsensusMatrix cm{std::move(W), 0.0};
  cm.rho = spectral_gap(cm.W);
  return cm;
}

// W = ones/n, rho = 0 exactly.
inline ConsensusMatrix complete_mixing(int n) {
  if (n < 1) throw std::invalid_argument("complete_mixing: n must be >= 1");
  return {Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n)), 0.0};
}

struct ValidationReport {
  bool symmetric = false;
  bool doubly_stochastic = false;
  bool contractive = false;  // rho < 1
  double symmetry_residual = 0.0;
  double row_sum_residual = 0.0;
  double col_sum_residual = 0.0;
  double min_entry = 0.0;
  double rho = 0.0;

  bool pass() const { return symmetric && doubly_stochastic && contractive; }

  nlohmann::json to_json() const {
    return {{"pass", pass()},
            {"symmetric", symmetric},
            {"doubly_stochastic", doubly_stochastic},
            {"contractive", contractive},
            {"symmetry_residual", symmetry_residual},
            {"row_sum_residual", row_sum_residual},
            {"col_sum_residual", col_sum_residual},
            {"min_entry", min_entry},
            {"rho", rho}};
  }
};

inline ValidationReport validate(const ConsensusMatrix& cm) {
  ValidationReport r;
  const Eigen::MatrixXd& W = cm.W;
  const auto n = W.rows();
  r.symmetry_residual = (W - W.transpose()).cwiseAbs().maxCoeff();
  r.symmetric = r.symmetry_residual == 0.0;
  r.row_sum_residual = (W.rowwise().sum().array() - 1.0).abs().maxCoeff();
  r.col_sum_residual = (W.colwise().sum().array() - 1.0).abs().maxCoeff();
  r.min_entry = W.minCoeff();
  r.doubly_stochastic =
      r.row_sum_residual <= 1e-12 && r.col_sum_residual <= 1e-12 && r.min_entry >= -1e-12;
  r.rho = (n >= 1 && r.symmetry_residual <= 1e-10) ? spectral_gap(W) : 1.0;
  // eigensolver noise puts rho = 1 cases a few ulp to either side of 1
  r.contractive = r.rho < 1.0 - 1e-12;
  return r;
}

inline void write_matrix_csv(const Eigen::MatrixXd& m, std::ostream& out) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ",";
      out << format_double(m(i, j));
    }
    out << "\n";
  }
}

}  // namespace dzo
