#pragma once

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "convexlab/consistency.hpp"
#include "convexlab/constraints.hpp"
#include "convexlab/mesh.hpp"
#include "convexlab/qp.hpp"
#include "convexlab/report.hpp"

namespace convexlab {

enum class ConstraintMode { Conformal, WeakSubharmonic, WeakConvex, Monopolist, None };

ConstraintMode parse_constraint_mode(std::string_view name);
const char* to_string(ConstraintMode mode);

/// Constraint rows of `mode`. Weak modes test vertices for P1 and edge
/// midpoints for P2; weak-convex keeps the linear necessary conditions
/// H_xx >= 0 and H_yy >= 0, the determinant is checked afterwards.
LinearConstraintSet build_constraints(const Mesh& mesh, int degree, ConstraintMode mode);

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct StudyLevel {
  int n = 0;
  double h = 0.0;
  double error = 0.0;   ///< L2 error or distance
  double order = kNaN;  ///< observed order against the previous level
  double objective = 0.0;
  double min_weak_det = kNaN;
  QPStatus status = QPStatus::Optimal;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double complementarity = 0.0;
  int rows = 0;
  int active_rows = 0;
  double seconds = 0.0;
};

struct StudyResult {
  std::string name;
  std::string metric;  ///< "l2_error" or "distance"
  std::vector<StudyLevel> levels;

  std::vector<double> steps() const;
  std::vector<double> errors() const;
  bool all_optimal() const;
  CsvTable table() const;
};

/// Rows with multiplier above this count as active.
inline constexpr double kActiveMultiplier = 1e-9;

// ---------------------------------------------------------------------------
// Subharmonic projection

struct SubharmonicConfig {
  MeshKind kind = MeshKind::Mesh1;
  std::vector<int> levels{4, 8, 16, 32};
  int degree = 1;
  ConstraintMode mode = ConstraintMode::WeakSubharmonic;
  Rect domain = Rect::unit();
  std::uint64_t seed = kDefaultMeshSeed;
  SmoothFunction target = polynomial("x^2+xy+y^2", {{1.0, 2, 0}, {1.0, 1, 1}, {1.0, 0, 2}});
  QPSettings qp;
};

/// min integral |grad u|^2/2 + f u with f = Laplacian(target), u = target on the boundary.
StudyResult subharmonic_study(const SubharmonicConfig& cfg);

// ---------------------------------------------------------------------------
// Non-convergence of conformal P1 convexity

enum class NonconvergenceTarget { Lemma2, Paraboloid };

struct NonconvergenceConfig {
  MeshKind kind = MeshKind::Mesh1;
  std::vector<int> levels{4, 8, 16, 32};
  Rect domain{1.0, 1.0, 2.0, 2.0};
  double eta = 1.0;
  /// Directions of the adversarial target; empty means the mesh's (PM) certificate.
  std::optional<PMCertificate> directions = PMCertificate{Point(-1.0, 0.0), Point(0.0, 1.0)};
  NonconvergenceTarget target = NonconvergenceTarget::Lemma2;
  bool constrained = true;  ///< false drops the convexity rows (control run)
  std::uint64_t seed = kDefaultMeshSeed;
  QPSettings qp;
};

struct EdgeActivity {
  int edge = -1;
  Point midpoint;
  Point normal;
  double jump = 0.0;
  double multiplier = 0.0;
  bool active = false;
};

struct NonconvergenceResult {
  StudyResult study;
  AdversarialQuadratic quadratic;     ///< only meaningful for the Lemma2 target
  std::vector<EdgeActivity> activity;  ///< per interior edge on the finest level

  CsvTable activity_table() const;
};

NonconvergenceResult nonconvergence_study(const NonconvergenceConfig& cfg);

// ---------------------------------------------------------------------------
// Monopolist problem

enum class MonopolistMatrix { Identity, Lemma2 };

MonopolistMatrix parse_monopolist_matrix(std::string_view name);

struct MonopolistConfig {
  MeshKind kind = MeshKind::Mesh1;
  std::vector<int> levels{4, 8, 16};
  Rect domain{1.0, 1.0, 2.0, 2.0};
  double alpha = 1.0;
  MonopolistMatrix matrix = MonopolistMatrix::Identity;
  double eta = 1.0;
  ConstraintMode mode = ConstraintMode::Monopolist;
  std::uint64_t seed = kDefaultMeshSeed;
  QPSettings qp;
};

/// Exact solution at alpha = 1: grad u = C^{-1} x, zero at the lower-left corner.
AdversarialQuadratic monopolist_exact(const MonopolistConfig& cfg);

/// QP of the discrete functional: P = stiffness with coefficient C,
/// q = -integral(x . grad phi) + (1 - alpha) integral(phi). At alpha = 1 the
/// lower-left vertex is pinned to 0 to remove the constant kernel.
QPProblem monopolist_problem(const Mesh& mesh, const MonopolistConfig& cfg);

/// Discrete functional J at the P1 dofs u.
double monopolist_objective(const Mesh& mesh, const MonopolistConfig& cfg, const Eigen::VectorXd& u);

/// Error is the L2 error against the exact solution at alpha = 1, NaN otherwise.
StudyResult monopolist_study(const MonopolistConfig& cfg);

// ---------------------------------------------------------------------------
// (PM) audit

struct PMAudit {
  std::vector<Point> normals;
  std::optional<PMCertificate> certificate;
  PMCheck check;
};

PMAudit pm_audit(const Mesh& mesh, const std::optional<Rect>& region = std::nullopt);

// ---------------------------------------------------------------------------
// Consistency tables

/// One row per case, probe, function and h-level.
CsvTable consistency_table(const std::vector<ConsistencyReport>& reports);
/// One row per case: expected and measured verdict.
CsvTable consistency_summary(const std::vector<ConsistencyReport>& reports);

}  // namespace convexlab
