#pragma once

// Reference solver for tiny dense QPs: enumerate every active set, solve the
// equality-constrained KKT system, keep the best primal- and dual-feasible point.

#include <limits>
#include <optional>
#include <random>

#include <Eigen/Dense>

#include "convexlab/qp.hpp"

namespace convexlab::testing {

struct DenseQP {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd A;
  Eigen::VectorXd lower;

  QPProblem sparse() const {
    QPProblem p;
    p.P = P.sparseView();
    p.q = q;
    p.A = A.sparseView();
    p.lower = lower;
    return p;
  }
  double objective(const Eigen::VectorXd& u) const { return 0.5 * u.dot(P * u) + q.dot(u); }
};

inline std::optional<Eigen::VectorXd> brute_force_qp(const DenseQP& p, double tol = 1e-10) {
  const int n = static_cast<int>(p.q.size());
  const int m = static_cast<int>(p.A.rows());
  std::optional<Eigen::VectorXd> best;
  double best_value = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> active;
    for (int i = 0; i < m; ++i) {
      if (mask & (1u << i)) active.push_back(i);
    }
    const int k = static_cast<int>(active.size());
    if (k > n) continue;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    K.topLeftCorner(n, n) = p.P;
    rhs.head(n) = -p.q;
    for (int r = 0; r < k; ++r) {
      K.block(0, n + r, n, 1) = -p.A.row(active[r]).transpose();
      K.block(n + r, 0, 1, n) = p.A.row(active[r]);
      rhs[n + r] = p.lower[active[r]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (lu.rank() < n + k) continue;
    const Eigen::VectorXd z = lu.solve(rhs);
    const Eigen::VectorXd u = z.head(n);
    if (k > 0 && z.tail(k).minCoeff() < -tol) continue;
    if (m > 0 && (p.A * u - p.lower).minCoeff() < -tol) continue;
    const double value = p.objective(u);
    if (value < best_value) {
      best_value = value;
      best = u;
    }
  }
  return best;
}

/// Random strictly convex QP with n dofs and m constraints; feasible by construction.
inline DenseQP random_qp(std::mt19937_64& rng, int n, int m) {
  std::normal_distribution<double> g(0.0, 1.0);
  DenseQP p;
  Eigen::MatrixXd L(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) L(i, j) = g(rng);
  }
  p.P = L * L.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  p.q.resize(n);
  for (int i = 0; i < n; ++i) p.q[i] = g(rng);
  p.A.resize(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) p.A(i, j) = g(rng);
  }
  Eigen::VectorXd x0(n);
  for (int i = 0; i < n; ++i) x0[i] = g(rng);
  p.lower = p.A * x0;
  for (int i = 0; i < m; ++i) p.lower[i] -= std::abs(g(rng));
  return p;
}

}  // namespace convexlab::testing
