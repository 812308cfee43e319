#include "convexlab/fem.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "convexlab/errors.hpp"

namespace convexlab {

namespace {

void check_degree(int degree) {
  if (degree != 1 && degree != 2) {
    throw std::invalid_argument("finite-element degree must be 1 or 2, got " + std::to_string(degree));
  }
}

constexpr std::array<QuadraturePoint, 3> kMidpointRule{{
    {{0.5, 0.5, 0.0}, 1.0 / 3.0},
    {{0.0, 0.5, 0.5}, 1.0 / 3.0},
    {{0.5, 0.0, 0.5}, 1.0 / 3.0},
}};

// Symmetric six-point rule (Dunavant), exact for polynomials of degree 4.
constexpr double kA1 = 0.445948490915964886318329253883;
constexpr double kB1 = 0.108103018168070227363341492234;
constexpr double kW1 = 0.223381589678011465944;
constexpr double kA2 = 0.091576213509770743459571463402;
constexpr double kB2 = 0.816847572980458513080857073196;
constexpr double kW2 = 0.109951743655321867389;
constexpr std::array<QuadraturePoint, 6> kDegree4Rule{{
    {{kB1, kA1, kA1}, kW1},
    {{kA1, kB1, kA1}, kW1},
    {{kA1, kA1, kB1}, kW1},
    {{kB2, kA2, kA2}, kW2},
    {{kA2, kB2, kA2}, kW2},
    {{kA2, kA2, kB2}, kW2},
}};

std::span<const QuadraturePoint> product_rule(int degree) {
  return degree == 1 ? midpoint_rule() : degree4_rule();
}

int local_index(const LocalDofs& dofs, int dof) {
  for (int k = 0; k < dofs.size; ++k) {
    if (dofs.ids[k] == dof) return k;
  }
  return -1;
}

std::vector<int> support_triangles(const Mesh& mesh, int degree, int dof) {
  if (dof < mesh.num_vertices()) return mesh.vertex_triangles(dof);
  const Edge& e = mesh.edges()[dof - mesh.num_vertices()];
  std::vector<int> tris{e.tri1};
  if (!e.is_boundary()) tris.push_back(e.tri2);
  (void)degree;
  return tris;
}

}  // namespace

int num_dofs(const Mesh& mesh, int degree) {
  check_degree(degree);
  return degree == 1 ? mesh.num_vertices() : mesh.num_vertices() + mesh.num_edges();
}

Point dof_position(const Mesh& mesh, int degree, int dof) {
  check_degree(degree);
  if (dof < mesh.num_vertices()) return mesh.vertex(dof);
  const Edge& e = mesh.edges().at(dof - mesh.num_vertices());
  return 0.5 * (mesh.vertex(e.v0) + mesh.vertex(e.v1));
}

bool is_boundary_dof(const Mesh& mesh, int degree, int dof) {
  check_degree(degree);
  if (dof < mesh.num_vertices()) return mesh.is_boundary_vertex(dof);
  return mesh.edges().at(dof - mesh.num_vertices()).is_boundary();
}

std::vector<int> boundary_dofs(const Mesh& mesh, int degree) {
  std::vector<int> out;
  for (int d = 0; d < num_dofs(mesh, degree); ++d) {
    if (is_boundary_dof(mesh, degree, d)) out.push_back(d);
  }
  return out;
}

LocalDofs local_dofs(const Mesh& mesh, int degree, int t) {
  check_degree(degree);
  LocalDofs out;
  const Triangle& tri = mesh.triangle(t);
  for (int k = 0; k < 3; ++k) out.ids[k] = tri[k];
  out.size = 3;
  if (degree == 2) {
    const auto& te = mesh.triangle_edges(t);
    for (int k = 0; k < 3; ++k) out.ids[3 + k] = mesh.num_vertices() + te[k];
    out.size = 6;
  }
  return out;
}

TriangleMap::TriangleMap(const Mesh& mesh, int t) {
  const Triangle& tri = mesh.triangle(t);
  for (int k = 0; k < 3; ++k) corners[k] = mesh.vertex(tri[k]);
  area = mesh.signed_area(t);
  const double inv2a = 0.5 / area;
  for (int i = 0; i < 3; ++i) {
    const Point& pj = corners[(i + 1) % 3];
    const Point& pk = corners[(i + 2) % 3];
    grad_lambda[i] = Point(pj.y() - pk.y(), pk.x() - pj.x()) * inv2a;
  }
}

std::array<double, 3> TriangleMap::barycentric(const Point& p) const {
  const Point d = p - corners[0];
  const double l1 = grad_lambda[1].dot(d);
  const double l2 = grad_lambda[2].dot(d);
  return {1.0 - l1 - l2, l1, l2};
}

Point TriangleMap::point(const std::array<double, 3>& lambda) const {
  return lambda[0] * corners[0] + lambda[1] * corners[1] + lambda[2] * corners[2];
}

std::span<const QuadraturePoint> midpoint_rule() { return kMidpointRule; }
std::span<const QuadraturePoint> degree4_rule() { return kDegree4Rule; }

void basis_values(int degree, const std::array<double, 3>& l, std::span<double> out) {
  if (degree == 1) {
    for (int i = 0; i < 3; ++i) out[i] = l[i];
    return;
  }
  for (int i = 0; i < 3; ++i) out[i] = l[i] * (2.0 * l[i] - 1.0);
  for (int k = 0; k < 3; ++k) out[3 + k] = 4.0 * l[k] * l[(k + 1) % 3];
}

void basis_gradients(int degree, const TriangleMap& map, const std::array<double, 3>& l,
                     std::span<Point> out) {
  const auto& g = map.grad_lambda;
  if (degree == 1) {
    for (int i = 0; i < 3; ++i) out[i] = g[i];
    return;
  }
  for (int i = 0; i < 3; ++i) out[i] = (4.0 * l[i] - 1.0) * g[i];
  for (int k = 0; k < 3; ++k) {
    const int j = (k + 1) % 3;
    out[3 + k] = 4.0 * (l[k] * g[j] + l[j] * g[k]);
  }
}

FEFunction::FEFunction(const Mesh& mesh, int degree, Eigen::VectorXd dofs)
    : mesh_(&mesh), degree_(degree), dofs_(std::move(dofs)) {
  if (dofs_.size() != num_dofs(mesh, degree)) {
    throw std::invalid_argument("FEFunction: dof vector has the wrong size");
  }
}

double FEFunction::value(int t, const Point& p) const {
  const TriangleMap map(*mesh_, t);
  const LocalDofs dofs = local_dofs(*mesh_, degree_, t);
  std::array<double, 6> phi{};
  basis_values(degree_, map.barycentric(p), phi);
  double v = 0.0;
  for (int k = 0; k < dofs.size; ++k) v += dofs_[dofs.ids[k]] * phi[k];
  return v;
}

FEFunction interpolate(const Mesh& mesh, int degree, const ScalarField& f) {
  const int n = num_dofs(mesh, degree);
  Eigen::VectorXd dofs(n);
  for (int d = 0; d < n; ++d) dofs[d] = f(dof_position(mesh, degree, d));
  return FEFunction(mesh, degree, std::move(dofs));
}

namespace {

Point gradient_at(const FEFunction& u, int t, const std::array<double, 3>& lambda) {
  const TriangleMap map(u.mesh(), t);
  const LocalDofs dofs = local_dofs(u.mesh(), u.degree(), t);
  std::array<Point, 6> grads;
  basis_gradients(u.degree(), map, lambda, grads);
  Point g = Point::Zero();
  for (int k = 0; k < dofs.size; ++k) g += u.dofs()[dofs.ids[k]] * grads[k];
  return g;
}

// Barycentric coordinates of mesh vertex v inside triangle t (exact unit vector).
std::array<double, 3> vertex_lambda(const Mesh& mesh, int t, int v) {
  const Triangle& tri = mesh.triangle(t);
  std::array<double, 3> l{0.0, 0.0, 0.0};
  for (int k = 0; k < 3; ++k) {
    if (tri[k] == v) {
      l[k] = 1.0;
      return l;
    }
  }
  throw std::logic_error("vertex does not belong to triangle");
}

}  // namespace

Point triangle_gradient(const FEFunction& u, int t, const Point& point) {
  if (u.degree() == 1) return gradient_at(u, t, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  const TriangleMap map(u.mesh(), t);
  const auto lambda = map.barycentric(point);
  for (double l : lambda) {
    if (l < -1e-10 || l > 1.0 + 1e-10) {
      throw OutOfTriangleError("point lies outside triangle " + std::to_string(t));
    }
  }
  return gradient_at(u, t, lambda);
}

JumpProfile gradient_jump(const FEFunction& u, const InteriorEdge& e) {
  JumpProfile j;
  j.edge = e.edge;
  j.length = e.length;
  const auto jump_at = [&](int v) {
    const Point q1 = gradient_at(u, e.tri1, vertex_lambda(u.mesh(), e.tri1, v));
    const Point q2 = gradient_at(u, e.tri2, vertex_lambda(u.mesh(), e.tri2, v));
    return (q2 - q1).dot(e.normal);
  };
  j.start = jump_at(e.endpoints[0]);
  j.end = u.degree() == 1 ? j.start : jump_at(e.endpoints[1]);
  return j;
}

const char* to_string(TestKind kind) {
  switch (kind) {
    case TestKind::P1Vertex: return "p1-vertex";
    case TestKind::P2Vertex: return "p2-vertex";
    case TestKind::P2Midpoint: return "p2-midpoint";
  }
  return "unknown";
}

Eigen::Matrix2d WeakHessianStencil::apply(const Eigen::VectorXd& u) const {
  Eigen::Matrix2d h;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      double s = 0.0;
      for (const auto& [dof, c] : entries[2 * a + b]) s += c * u[dof];
      h(a, b) = s;
    }
  }
  return h;
}

std::vector<std::pair<int, double>> WeakHessianStencil::trace_row() const {
  std::map<int, double> merged;
  double scale = 0.0;
  for (int k : {0, 3}) {
    for (const auto& [dof, c] : entries[k]) {
      merged[dof] += c;
      scale = std::max(scale, std::abs(c));
    }
  }
  std::vector<std::pair<int, double>> out;
  for (const auto& [dof, c] : merged) {
    if (std::abs(c) > 1e-13 * scale) out.emplace_back(dof, c);
  }
  return out;
}

TestKind test_kind(const Mesh& mesh, int degree, int dof) {
  check_degree(degree);
  if (degree == 1) return TestKind::P1Vertex;
  return dof < mesh.num_vertices() ? TestKind::P2Vertex : TestKind::P2Midpoint;
}

bool is_interior_test(const Mesh& mesh, int degree, int dof) {
  if (dof < 0 || dof >= num_dofs(mesh, degree)) return false;
  return !is_boundary_dof(mesh, degree, dof);
}

WeakHessianStencil weak_hessian_stencil(const Mesh& mesh, int degree, int test_dof) {
  if (!is_interior_test(mesh, degree, test_dof)) {
    throw BoundaryTestFunctionError("test function " + std::to_string(test_dof) +
                                    " does not vanish on the boundary");
  }
  WeakHessianStencil stencil;
  stencil.test = test_dof;
  stencil.kind = test_kind(mesh, degree, test_dof);

  std::map<int, std::array<double, 4>> acc;
  std::array<Point, 6> grads;
  for (int t : support_triangles(mesh, degree, test_dof)) {
    const TriangleMap map(mesh, t);
    const LocalDofs dofs = local_dofs(mesh, degree, t);
    const int it = local_index(dofs, test_dof);
    for (const QuadraturePoint& qp : product_rule(degree)) {
      basis_gradients(degree, map, qp.lambda, grads);
      const double w = qp.weight * map.area;
      for (int k = 0; k < dofs.size; ++k) {
        auto& e = acc[dofs.ids[k]];
        for (int a = 0; a < 2; ++a) {
          for (int b = 0; b < 2; ++b) e[2 * a + b] -= w * grads[k][a] * grads[it][b];
        }
      }
    }
  }
  for (const auto& [dof, e] : acc) {
    for (int k = 0; k < 4; ++k) {
      if (e[k] != 0.0) stencil.entries[k].emplace_back(dof, e[k]);
    }
  }
  return stencil;
}

WeakHessian weak_hessian(const FEFunction& u, int test_dof) {
  const WeakHessianStencil s = weak_hessian_stencil(u.mesh(), u.degree(), test_dof);
  return {s.apply(u.dofs()), test_dof, s.kind};
}

SparseMatrix assemble_stiffness(const Mesh& mesh, int degree, const Eigen::Matrix2d& coeff) {
  const int n = num_dofs(mesh, degree);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 36);
  std::array<Point, 6> grads;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriangleMap map(mesh, t);
    const LocalDofs dofs = local_dofs(mesh, degree, t);
    Eigen::Matrix<double, 6, 6> local = Eigen::Matrix<double, 6, 6>::Zero();
    for (const QuadraturePoint& qp : product_rule(degree)) {
      basis_gradients(degree, map, qp.lambda, grads);
      const double w = qp.weight * map.area;
      for (int i = 0; i < dofs.size; ++i) {
        const Point cg = coeff * grads[i];
        for (int j = 0; j < dofs.size; ++j) local(i, j) += w * cg.dot(grads[j]);
      }
    }
    for (int i = 0; i < dofs.size; ++i) {
      for (int j = 0; j < dofs.size; ++j) trips.emplace_back(dofs.ids[i], dofs.ids[j], local(i, j));
    }
  }
  SparseMatrix k(n, n);
  k.setFromTriplets(trips.begin(), trips.end());
  return k;
}

SparseMatrix assemble_mass(const Mesh& mesh, int degree) {
  const int n = num_dofs(mesh, degree);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 36);
  std::array<double, 6> phi{};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = mesh.signed_area(t);
    const LocalDofs dofs = local_dofs(mesh, degree, t);
    Eigen::Matrix<double, 6, 6> local = Eigen::Matrix<double, 6, 6>::Zero();
    for (const QuadraturePoint& qp : degree4_rule()) {
      basis_values(degree, qp.lambda, phi);
      for (int i = 0; i < dofs.size; ++i) {
        for (int j = 0; j < dofs.size; ++j) local(i, j) += qp.weight * area * phi[i] * phi[j];
      }
    }
    for (int i = 0; i < dofs.size; ++i) {
      for (int j = 0; j < dofs.size; ++j) trips.emplace_back(dofs.ids[i], dofs.ids[j], local(i, j));
    }
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

Eigen::VectorXd assemble_load(const Mesh& mesh, int degree, const ScalarField& f) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(num_dofs(mesh, degree));
  std::array<double, 6> phi{};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriangleMap map(mesh, t);
    const LocalDofs dofs = local_dofs(mesh, degree, t);
    for (const QuadraturePoint& qp : degree4_rule()) {
      basis_values(degree, qp.lambda, phi);
      const double fw = f(map.point(qp.lambda)) * qp.weight * map.area;
      for (int i = 0; i < dofs.size; ++i) b[dofs.ids[i]] += fw * phi[i];
    }
  }
  return b;
}

Eigen::VectorXd assemble_flux_load(const Mesh& mesh, int degree, const VectorField& g) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(num_dofs(mesh, degree));
  std::array<Point, 6> grads;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriangleMap map(mesh, t);
    const LocalDofs dofs = local_dofs(mesh, degree, t);
    for (const QuadraturePoint& qp : degree4_rule()) {
      basis_gradients(degree, map, qp.lambda, grads);
      const Point gw = g(map.point(qp.lambda)) * (qp.weight * map.area);
      for (int i = 0; i < dofs.size; ++i) b[dofs.ids[i]] += gw.dot(grads[i]);
    }
  }
  return b;
}

double l2_error(const FEFunction& u, const ScalarField& f) {
  const Mesh& mesh = u.mesh();
  double sum = 0.0;
  std::array<double, 6> phi{};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriangleMap map(mesh, t);
    const LocalDofs dofs = local_dofs(mesh, u.degree(), t);
    for (const QuadraturePoint& qp : degree4_rule()) {
      basis_values(u.degree(), qp.lambda, phi);
      double uh = 0.0;
      for (int i = 0; i < dofs.size; ++i) uh += u.dofs()[dofs.ids[i]] * phi[i];
      const double d = uh - f(map.point(qp.lambda));
      sum += qp.weight * map.area * d * d;
    }
  }
  return std::sqrt(sum);
}

}  // namespace convexlab
