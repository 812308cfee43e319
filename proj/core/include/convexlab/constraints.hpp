#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "convexlab/fem.hpp"
#include "convexlab/mesh.hpp"

namespace convexlab {

/// Absolute tolerance for "A u >= 0" on unit-scaled dofs.
inline constexpr double kConstraintTol = 1e-9;

using RowMajorSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct RowLabel {
  std::string kind;  ///< e.g. "jump", "trace", "value", "grad-x"
  int id = -1;       ///< edge, dof or triangle index, depending on kind
};

/// Rows of A u >= 0, one label per row.
struct LinearConstraintSet {
  RowMajorSparse A;
  std::vector<RowLabel> labels;
  int degree = 1;
  /// Set when the family is known not to discretize its continuous constraint consistently.
  bool flagged_inconsistent = false;
  std::string note;

  int rows() const { return static_cast<int>(A.rows()); }
  int cols() const { return static_cast<int>(A.cols()); }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& u) const { return A * u; }
  bool satisfied_by(const Eigen::VectorXd& u, double tol = kConstraintTol) const;
  int max_row_nonzeros() const;

  static LinearConstraintSet none(int cols, int degree = 1);
  /// Concatenates the rows of `other` (same column count).
  void append(const LinearConstraintSet& other);
};

/// How the affine P2 jump is bound: integral over the edge, or both endpoint values.
enum class JumpMode { Integral, Pointwise };

/// One row per interior edge: the gradient jump (q2 - q1).n as a linear
/// functional of the dofs. For P2 the `mode` selects the binding.
LinearConstraintSet conformal_convexity_constraints(const Mesh& mesh, int degree = 1,
                                                    JumpMode mode = JumpMode::Integral);

enum class WeakTestKind { Vertices, Midpoints };

/// Interior test functions of the requested kind.
std::vector<int> admissible_tests(const Mesh& mesh, int degree, WeakTestKind kind);

/// Rows trace<D^2 u_h, phi_j> >= 0 for every admissible test function.
/// P1 + midpoints is rejected; P2 + vertices is emitted but flagged inconsistent.
LinearConstraintSet weak_subharmonicity_constraints(const Mesh& mesh, int degree, WeakTestKind kind);

struct WeakConvexityResidual {
  int test = -1;
  double trace = 0.0;
  double det = 0.0;

  bool convex(double tol = kConstraintTol) const { return trace >= -tol && det >= -tol; }
};

std::vector<WeakConvexityResidual> weak_convexity_residuals(const FEFunction& u, WeakTestKind kind);

// ---------------------------------------------------------------------------
// Property (PM)

struct PMCertificate {
  Point a;
  Point b;
};

struct PMCheck {
  bool holds = false;
  double worst = 0.0;  ///< min over normals of (n.a)(n.b)
};

/// Two independent unit vectors inside one open cone cut by the lines n.x = 0.
/// The widest angular gap is split into thirds. Throws on empty input.
std::optional<PMCertificate> pm_find_vectors(std::span<const Point> normals);

PMCheck pm_verify(std::span<const Point> normals, const Point& a, const Point& b);

// ---------------------------------------------------------------------------
// Adversarial convex quadratic

/// u(x) = x' C^{-1} x / 2 - const, anchored to vanish at `anchor`, with a' C^{-1} b <= -eta.
struct AdversarialQuadratic {
  Eigen::Matrix2d C;
  Eigen::Matrix2d C_inv;
  Point a;
  Point b;
  double eta = 0.0;
  Point anchor = Point::Zero();

  double value(const Point& x) const { return 0.5 * x.dot(C_inv * x) - 0.5 * anchor.dot(C_inv * anchor); }
  Point gradient(const Point& x) const { return C_inv * x; }
  double mixed_derivative() const { return a.dot(C_inv * b); }
  ScalarField field() const;
};

/// Builds C^{-1} with eigenvectors e1 = (a+b)/|a+b|, e2 = e1 rotated by 90 degrees and
/// eigenvalues eta, eta (1 + a1 b1) / (-a2 b2), so that a' C^{-1} b = -eta.
/// Throws DegenerateDirectionsError when |det[a b]| < 1e-10.
AdversarialQuadratic lemma2_matrix(const Point& a, const Point& b, double eta,
                                   const Point& anchor = Point::Zero());

struct DifferenceQuotient {
  Point x = Point::Zero();
  double alpha0 = 0.0;
  double beta0 = 0.0;
  Point a = Point::UnitX();
  Point b = Point::UnitY();
};

/// (u(x + alpha0 a + beta0 b) - u(x + alpha0 a) - u(x + beta0 b) + u(x)) / (alpha0 beta0).
/// Throws OutOfDomainError if a sample point leaves `domain`.
double difference_quotient(const ScalarField& u, const DifferenceQuotient& q, const Rect& domain);

/// u >= 0 at vertices, grad-x >= 0 and grad-y >= 0 per triangle, plus the conformal P1 jump rows.
LinearConstraintSet monopolist_constraints(const Mesh& mesh);

}  // namespace convexlab
