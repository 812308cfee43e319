#include "convexlab/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "convexlab/errors.hpp"

namespace convexlab {

namespace {

using Row = std::map<int, double>;

class RowBuilder {
 public:
  RowBuilder(int cols, int degree) : cols_(cols), degree_(degree) {}

  void add(const Row& row, RowLabel label) {
    double scale = 0.0;
    for (const auto& [c, v] : row) scale = std::max(scale, std::abs(v));
    bool any = false;
    for (const auto& [c, v] : row) {
      if (std::abs(v) > 1e-13 * scale) {
        trips_.emplace_back(static_cast<int>(labels_.size()), c, v);
        any = true;
      }
    }
    if (!any) throw std::logic_error("constraint row '" + label.kind + "' is identically zero");
    labels_.push_back(std::move(label));
  }

  LinearConstraintSet finish() {
    LinearConstraintSet set;
    set.A.resize(static_cast<Eigen::Index>(labels_.size()), cols_);
    set.A.setFromTriplets(trips_.begin(), trips_.end());
    set.A.makeCompressed();
    set.labels = std::move(labels_);
    set.degree = degree_;
    return set;
  }

 private:
  int cols_;
  int degree_;
  std::vector<Eigen::Triplet<double>> trips_;
  std::vector<RowLabel> labels_;
};

// Row of (grad u_h restricted to t, evaluated at vertex v) . dir.
void add_gradient_row(const Mesh& mesh, int degree, int t, int v, const Point& dir, double scale, Row& row) {
  const TriangleMap map(mesh, t);
  const LocalDofs dofs = local_dofs(mesh, degree, t);
  std::array<double, 3> lambda{0.0, 0.0, 0.0};
  const Triangle& tri = mesh.triangle(t);
  for (int k = 0; k < 3; ++k) {
    if (tri[k] == v) lambda[k] = 1.0;
  }
  std::array<Point, 6> grads;
  basis_gradients(degree, map, lambda, grads);
  for (int k = 0; k < dofs.size; ++k) row[dofs.ids[k]] += scale * grads[k].dot(dir);
}

Row jump_row(const Mesh& mesh, int degree, const InteriorEdge& e, int at_vertex) {
  Row row;
  add_gradient_row(mesh, degree, e.tri2, at_vertex, e.normal, 1.0, row);
  add_gradient_row(mesh, degree, e.tri1, at_vertex, e.normal, -1.0, row);
  return row;
}

constexpr double kPi = std::numbers::pi;

}  // namespace

bool LinearConstraintSet::satisfied_by(const Eigen::VectorXd& u, double tol) const {
  if (rows() == 0) return true;
  return evaluate(u).minCoeff() >= -tol;
}

int LinearConstraintSet::max_row_nonzeros() const {
  int m = 0;
  for (int r = 0; r < A.outerSize(); ++r) {
    m = std::max(m, static_cast<int>(A.outerIndexPtr()[r + 1] - A.outerIndexPtr()[r]));
  }
  return m;
}

LinearConstraintSet LinearConstraintSet::none(int cols, int degree) {
  LinearConstraintSet set;
  set.A.resize(0, cols);
  set.degree = degree;
  return set;
}

void LinearConstraintSet::append(const LinearConstraintSet& other) {
  if (other.cols() != cols()) throw std::invalid_argument("constraint sets have different widths");
  RowMajorSparse stacked(A.rows() + other.A.rows(), A.cols());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(A.nonZeros() + other.A.nonZeros());
  for (int r = 0; r < A.outerSize(); ++r) {
    for (RowMajorSparse::InnerIterator it(A, r); it; ++it) trips.emplace_back(r, it.col(), it.value());
  }
  for (int r = 0; r < other.A.outerSize(); ++r) {
    for (RowMajorSparse::InnerIterator it(other.A, r); it; ++it) {
      trips.emplace_back(static_cast<int>(A.rows()) + r, it.col(), it.value());
    }
  }
  stacked.setFromTriplets(trips.begin(), trips.end());
  A = std::move(stacked);
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  flagged_inconsistent = flagged_inconsistent || other.flagged_inconsistent;
  if (!other.note.empty()) note += (note.empty() ? "" : "; ") + other.note;
}

LinearConstraintSet conformal_convexity_constraints(const Mesh& mesh, int degree, JumpMode mode) {
  RowBuilder rows(num_dofs(mesh, degree), degree);
  for (const InteriorEdge& e : interior_edges(mesh)) {
    if (degree == 1) {
      rows.add(jump_row(mesh, 1, e, e.endpoints[0]), {"jump", e.edge});
      continue;
    }
    Row start = jump_row(mesh, 2, e, e.endpoints[0]);
    Row end = jump_row(mesh, 2, e, e.endpoints[1]);
    if (mode == JumpMode::Pointwise) {
      rows.add(start, {"jump-start", e.edge});
      rows.add(end, {"jump-end", e.edge});
    } else {
      Row integral;
      for (const auto& [c, v] : start) integral[c] += 0.5 * e.length * v;
      for (const auto& [c, v] : end) integral[c] += 0.5 * e.length * v;
      rows.add(integral, {"jump-integral", e.edge});
    }
  }
  LinearConstraintSet set = rows.finish();
  if (degree == 2 && mode == JumpMode::Pointwise) {
    set.flagged_inconsistent = true;
    set.note = "pointwise P2 gradient jumps force u_xxy + u_xyy = 0 in the limit";
  }
  return set;
}

std::vector<int> admissible_tests(const Mesh& mesh, int degree, WeakTestKind kind) {
  std::vector<int> out;
  if (kind == WeakTestKind::Vertices) {
    for (int v = 0; v < mesh.num_vertices(); ++v) {
      if (!mesh.is_boundary_vertex(v)) out.push_back(v);
    }
    return out;
  }
  if (degree != 2) throw std::invalid_argument("midpoint test functions need P2");
  for (int e = 0; e < mesh.num_edges(); ++e) {
    if (!mesh.edges()[e].is_boundary()) out.push_back(mesh.num_vertices() + e);
  }
  return out;
}

LinearConstraintSet weak_subharmonicity_constraints(const Mesh& mesh, int degree, WeakTestKind kind) {
  if (degree == 1 && kind == WeakTestKind::Midpoints) {
    throw std::invalid_argument("P1 has no midpoint test functions");
  }
  RowBuilder rows(num_dofs(mesh, degree), degree);
  for (int test : admissible_tests(mesh, degree, kind)) {
    const WeakHessianStencil stencil = weak_hessian_stencil(mesh, degree, test);
    Row row;
    for (const auto& [dof, c] : stencil.trace_row()) row[dof] = c;
    rows.add(row, {"trace", test});
  }
  LinearConstraintSet set = rows.finish();
  if (degree == 2 && kind == WeakTestKind::Vertices) {
    set.flagged_inconsistent = true;
    set.note = "P2 vertex test functions change sign; leading term is -(u_xxxx + u_yyyy) h^4 / 48";
  }
  return set;
}

std::vector<WeakConvexityResidual> weak_convexity_residuals(const FEFunction& u, WeakTestKind kind) {
  std::vector<WeakConvexityResidual> out;
  for (int test : admissible_tests(u.mesh(), u.degree(), kind)) {
    const WeakHessian h = weak_hessian(u, test);
    out.push_back({test, h.trace(), h.det()});
  }
  return out;
}

std::optional<PMCertificate> pm_find_vectors(std::span<const Point> normals) {
  if (normals.empty()) throw std::invalid_argument("pm_find_vectors: no normals given");
  // Angle in [0, pi) of each line {x : n.x = 0}.
  std::vector<double> angles;
  angles.reserve(normals.size());
  for (const Point& n : normals) {
    if (!(n.norm() > 0.0)) throw std::invalid_argument("pm_find_vectors: zero normal");
    double psi = std::atan2(n.x(), -n.y());  // direction (-n_y, n_x)
    psi = std::fmod(psi + 2.0 * kPi, kPi);
    angles.push_back(psi);
  }
  std::sort(angles.begin(), angles.end());
  double best_start = 0.0;
  double best_gap = -1.0;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double next = i + 1 < angles.size() ? angles[i + 1] : angles.front() + kPi;
    const double gap = next - angles[i];
    if (gap > best_gap + 1e-14) {
      best_gap = gap;
      best_start = angles[i];
    }
  }
  if (!(best_gap > 1e-12)) return std::nullopt;  // unreachable for finitely many lines
  const double ta = best_start + best_gap / 3.0;
  const double tb = best_start + 2.0 * best_gap / 3.0;
  return PMCertificate{Point(std::cos(ta), std::sin(ta)), Point(std::cos(tb), std::sin(tb))};
}

PMCheck pm_verify(std::span<const Point> normals, const Point& a, const Point& b) {
  PMCheck check;
  check.worst = std::numeric_limits<double>::infinity();
  for (const Point& n : normals) check.worst = std::min(check.worst, n.dot(a) * n.dot(b));
  check.holds = check.worst >= -1e-12;
  return check;
}

ScalarField AdversarialQuadratic::field() const {
  return [q = *this](const Point& x) { return q.value(x); };
}

AdversarialQuadratic lemma2_matrix(const Point& a_in, const Point& b_in, double eta, const Point& anchor) {
  if (!(eta > 0.0)) throw std::invalid_argument("lemma2_matrix: eta must be positive");
  const Point a = a_in.normalized();
  const Point b = b_in.normalized();
  if (std::abs(a.x() * b.y() - a.y() * b.x()) < 1e-10) {
    throw DegenerateDirectionsError("lemma2_matrix: a and b are not independent");
  }
  const Point e1 = (a + b).normalized();
  const Point e2(-e1.y(), e1.x());
  const double ab1 = a.dot(e1) * b.dot(e1);  // > 0
  const double ab2 = a.dot(e2) * b.dot(e2);  // < 0
  const double lambda1 = eta;
  const double lambda2 = eta * (1.0 + ab1) / (-ab2);

  AdversarialQuadratic q;
  q.C_inv = lambda1 * e1 * e1.transpose() + lambda2 * e2 * e2.transpose();
  q.C = (1.0 / lambda1) * e1 * e1.transpose() + (1.0 / lambda2) * e2 * e2.transpose();
  q.a = a;
  q.b = b;
  q.eta = eta;
  q.anchor = anchor;
  return q;
}

double difference_quotient(const ScalarField& u, const DifferenceQuotient& q, const Rect& domain) {
  if (!(q.alpha0 > 0.0) || !(q.beta0 > 0.0)) {
    throw std::invalid_argument("difference_quotient: steps must be positive");
  }
  const Point pa = q.x + q.alpha0 * q.a;
  const Point pb = q.x + q.beta0 * q.b;
  const Point pab = q.x + q.alpha0 * q.a + q.beta0 * q.b;
  for (const Point& p : {q.x, pa, pb, pab}) {
    if (!domain.contains(p)) throw OutOfDomainError("difference_quotient: sample point outside the domain");
  }
  return (u(pab) - u(pa) - u(pb) + u(q.x)) / (q.alpha0 * q.beta0);
}

LinearConstraintSet monopolist_constraints(const Mesh& mesh) {
  RowBuilder rows(mesh.num_vertices(), 1);
  for (int v = 0; v < mesh.num_vertices(); ++v) rows.add(Row{{v, 1.0}}, {"value", v});
  for (int axis = 0; axis < 2; ++axis) {
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const TriangleMap map(mesh, t);
      Row row;
      for (int k = 0; k < 3; ++k) row[mesh.triangle(t)[k]] += map.grad_lambda[k][axis];
      rows.add(row, {axis == 0 ? "grad-x" : "grad-y", t});
    }
  }
  LinearConstraintSet set = rows.finish();
  set.append(conformal_convexity_constraints(mesh, 1));
  return set;
}

}  // namespace convexlab
