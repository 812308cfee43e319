#pragma once

#include <map>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "convexlab/constraints.hpp"
#include "convexlab/fem.hpp"

namespace convexlab {

/// min 1/2 u'Pu + q'u  subject to  A u >= lower,  u[i] = pinned[i].
struct QPProblem {
  SparseMatrix P;
  Eigen::VectorXd q;
  RowMajorSparse A;
  Eigen::VectorXd lower;  ///< empty means all zeros
  std::map<int, double> pinned;

  QPProblem() = default;
  QPProblem(SparseMatrix P, Eigen::VectorXd q, const LinearConstraintSet& constraints,
            std::map<int, double> pinned = {});

  int num_vars() const { return static_cast<int>(q.size()); }
  int num_constraints() const { return static_cast<int>(A.rows()); }
  Eigen::VectorXd lower_bounds() const;
  double objective(const Eigen::VectorXd& u) const;
  /// Throws std::invalid_argument on inconsistent sizes or an asymmetric P.
  void validate() const;
};

struct QPSettings {
  double eps_abs = 1e-8;
  double eps_rel = 1e-8;
  int max_iter = 200000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;           ///< over-relaxation
  bool adaptive_rho = true;
  int check_every = 25;
  int scaling_iters = 10;       ///< Ruiz equilibration passes, 0 disables
  bool polish = true;
  double eps_infeasible = 1e-7;
};

enum class QPStatus { Optimal, MaxIter, Infeasible };

const char* to_string(QPStatus status);

struct QPSolution {
  Eigen::VectorXd u;
  Eigen::VectorXd lambda;      ///< multipliers of A u >= lower, all >= 0
  double objective = 0.0;
  double primal_residual = 0.0;   ///< max violation of A u >= lower
  double dual_residual = 0.0;     ///< ||P u + q - A' lambda||_inf over free dofs
  double complementarity = 0.0;   ///< |lambda' (A u - lower)|
  int iterations = 0;
  QPStatus status = QPStatus::MaxIter;
  bool polished = false;
};

struct KKTResiduals {
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
  double min_multiplier = 0.0;
};

/// KKT residuals of (u, lambda) for `p`; the dual residual skips pinned dofs.
KKTResiduals kkt_residuals(const QPProblem& p, const Eigen::VectorXd& u, const Eigen::VectorXd& lambda);

/// Operator splitting (ADMM) with over-relaxation, Ruiz scaling and adaptive
/// penalty, followed by an equality-constrained solve on the detected active
/// set. Deterministic for fixed inputs.
QPSolution solve_qp(const QPProblem& problem, const QPSettings& settings = {});

/// min integral |grad u|^2/2 + f u over the constraint set, u = g on the boundary.
QPSolution solve_projection_h10(const Mesh& mesh, int degree, const LinearConstraintSet& constraints,
                                const ScalarField& f, const ScalarField& g,
                                const QPSettings& settings = {});

struct L2Distance {
  QPSolution solution;
  double distance = 0.0;  ///< ||u_h - target||_{L2} by quadrature
};

/// Closest conformally convex P1 function to `target` in the mass-matrix norm of
/// (u - interpolant of target).
L2Distance min_l2_distance_convex(const Mesh& mesh, const ScalarField& target,
                                  const QPSettings& settings = {});
/// Same with an explicit constraint set (pass LinearConstraintSet::none for the control run).
L2Distance min_l2_distance(const Mesh& mesh, const ScalarField& target, const LinearConstraintSet& constraints,
                           const QPSettings& settings = {});

}  // namespace convexlab
