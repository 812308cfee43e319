#pragma once

#include <array>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "convexlab/mesh.hpp"

namespace convexlab {

using SparseMatrix = Eigen::SparseMatrix<double>;
using ScalarField = std::function<double(const Point&)>;
using VectorField = std::function<Point(const Point&)>;

// ---------------------------------------------------------------------------
// Degrees of freedom
//
// P1: one dof per vertex. P2: vertices first, then one dof per edge midpoint
// in the mesh's (v0, v1)-sorted edge order, boundary edges included.

int num_dofs(const Mesh& mesh, int degree);
Point dof_position(const Mesh& mesh, int degree, int dof);
bool is_boundary_dof(const Mesh& mesh, int degree, int dof);
std::vector<int> boundary_dofs(const Mesh& mesh, int degree);

struct LocalDofs {
  std::array<int, 6> ids{};
  int size = 0;

  std::span<const int> view() const { return {ids.data(), static_cast<std::size_t>(size)}; }
};

/// Local dofs of triangle t: its three vertices, then (P2) the midpoints of
/// local edges (0,1), (1,2), (2,0).
LocalDofs local_dofs(const Mesh& mesh, int degree, int t);

// ---------------------------------------------------------------------------
// Reference geometry and quadrature

/// Affine data of one triangle.
struct TriangleMap {
  std::array<Point, 3> corners;
  std::array<Point, 3> grad_lambda;  ///< gradients of the barycentric coordinates
  double area = 0.0;

  TriangleMap(const Mesh& mesh, int t);

  std::array<double, 3> barycentric(const Point& p) const;
  Point point(const std::array<double, 3>& lambda) const;
};

struct QuadraturePoint {
  std::array<double, 3> lambda;
  double weight;  ///< fraction of the triangle area; weights sum to 1
};

/// Edge-midpoint rule, exact for degree 2.
std::span<const QuadraturePoint> midpoint_rule();
/// Six-point symmetric rule, exact for degree 4.
std::span<const QuadraturePoint> degree4_rule();

/// Shape functions and gradients of the local basis at barycentric point lambda.
void basis_values(int degree, const std::array<double, 3>& lambda, std::span<double> out);
void basis_gradients(int degree, const TriangleMap& map, const std::array<double, 3>& lambda,
                     std::span<Point> out);

// ---------------------------------------------------------------------------
// Finite-element functions

/// Coefficients of a P1 or P2 Lagrange function. Holds a non-owning pointer
/// to the mesh, which must outlive it.
class FEFunction {
 public:
  FEFunction(const Mesh& mesh, int degree, Eigen::VectorXd dofs);

  const Mesh& mesh() const { return *mesh_; }
  int degree() const { return degree_; }
  const Eigen::VectorXd& dofs() const { return dofs_; }
  Eigen::VectorXd& dofs() { return dofs_; }

  double value(int t, const Point& p) const;

 private:
  const Mesh* mesh_;
  int degree_;
  Eigen::VectorXd dofs_;
};

FEFunction interpolate(const Mesh& mesh, int degree, const ScalarField& f);

/// Exact gradient of u's local polynomial on triangle t. P2 needs `point`
/// inside the triangle (barycentric tolerance 1e-10) and throws
/// OutOfTriangleError otherwise; P1 ignores it.
Point triangle_gradient(const FEFunction& u, int t, const Point& point = Point::Zero());

/// Normal jump (q2 - q1).n of the gradient across an interior edge, as an
/// affine function of arclength s measured from endpoints[0] (the lower vertex index).
struct JumpProfile {
  int edge = -1;
  double start = 0.0;   ///< value at s = 0
  double end = 0.0;     ///< value at s = length
  double length = 0.0;

  double at(double s) const { return start + (end - start) * (s / length); }
  double integral() const { return 0.5 * length * (start + end); }
  /// d(jump)/ds.
  double slope() const { return (end - start) / length; }
};

JumpProfile gradient_jump(const FEFunction& u, const InteriorEdge& e);

enum class TestKind { P1Vertex, P2Vertex, P2Midpoint };

const char* to_string(TestKind kind);

/// Weak Hessian <D^2 u_h, phi> = -integral(grad u_h (x) grad phi) for one basis function.
struct WeakHessian {
  Eigen::Matrix2d value = Eigen::Matrix2d::Zero();
  int test = -1;
  TestKind kind = TestKind::P1Vertex;

  double trace() const { return value.trace(); }
  double det() const { return value(0, 0) * value(1, 1) - value(0, 1) * value(1, 0); }
};

/// Sparse linear map u -> weak Hessian entries for a fixed test function.
/// entries[2*a + b] lists (dof, coefficient) pairs of entry (a, b).
struct WeakHessianStencil {
  int test = -1;
  TestKind kind = TestKind::P1Vertex;
  std::array<std::vector<std::pair<int, double>>, 4> entries;

  Eigen::Matrix2d apply(const Eigen::VectorXd& u) const;
  /// Coefficients of the trace, merged by dof, exact zeros dropped.
  std::vector<std::pair<int, double>> trace_row() const;
};

TestKind test_kind(const Mesh& mesh, int degree, int dof);
/// True when the basis function of `dof` vanishes on the domain boundary.
bool is_interior_test(const Mesh& mesh, int degree, int dof);

/// Throws BoundaryTestFunctionError if the test function touches the boundary.
WeakHessianStencil weak_hessian_stencil(const Mesh& mesh, int degree, int test_dof);
WeakHessian weak_hessian(const FEFunction& u, int test_dof);

// ---------------------------------------------------------------------------
// Assembly

/// K_ij = integral(grad phi_i . coeff grad phi_j).
SparseMatrix assemble_stiffness(const Mesh& mesh, int degree,
                                const Eigen::Matrix2d& coeff = Eigen::Matrix2d::Identity());
SparseMatrix assemble_mass(const Mesh& mesh, int degree);
/// b_i = integral(f phi_i).
Eigen::VectorXd assemble_load(const Mesh& mesh, int degree, const ScalarField& f);
/// b_i = integral(g . grad phi_i).
Eigen::VectorXd assemble_flux_load(const Mesh& mesh, int degree, const VectorField& g);

/// ||u_h - f||_{L2} with the degree-4 rule on every triangle.
double l2_error(const FEFunction& u, const ScalarField& f);

}  // namespace convexlab
