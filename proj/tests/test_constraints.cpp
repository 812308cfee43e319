#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <gtest/gtest.h>

#include "convexlab/constraints.hpp"
#include "convexlab/errors.hpp"

using namespace convexlab;

namespace {

const double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

Eigen::VectorXd nodal(const Mesh& m, int degree, const ScalarField& f) { return interpolate(m, degree, f).dofs(); }

// Gradient of the plane through the nodal values of triangle t.
Point plane_gradient(const Mesh& m, const Eigen::VectorXd& u, int t) {
  const Triangle& tri = m.triangle(t);
  Eigen::Matrix2d d;
  d.row(0) = (m.vertex(tri[1]) - m.vertex(tri[0])).transpose();
  d.row(1) = (m.vertex(tri[2]) - m.vertex(tri[0])).transpose();
  return d.fullPivLu().solve(Eigen::Vector2d(u[tri[1]] - u[tri[0]], u[tri[2]] - u[tri[0]]));
}

Point unit_at_angle(double t) { return Point(std::cos(t), std::sin(t)); }

}  // namespace

TEST(ConformalRows, AffineIsInKernel) {
  const Mesh m = build_structured_mesh(MeshKind::Mesh4, 6, Rect::unit(), 2);
  for (int degree : {1, 2}) {
    for (JumpMode mode : {JumpMode::Integral, JumpMode::Pointwise}) {
      const LinearConstraintSet set = conformal_convexity_constraints(m, degree, mode);
      const Eigen::VectorXd r = set.evaluate(nodal(m, degree, [](const Point& p) { return 1 + p.x() - 2 * p.y(); }));
      EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LE(set.max_row_nonzeros(), 12);
    }
  }
}

TEST(ConformalRows, MatchPlaneGradientOracle) {
  const Mesh m = build_structured_mesh(MeshKind::Mesh3, 5);
  const LinearConstraintSet set = conformal_convexity_constraints(m);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-1, 1);
  Eigen::VectorXd u(m.num_vertices());
  for (int i = 0; i < u.size(); ++i) u[i] = d(rng);
  const Eigen::VectorXd r = set.evaluate(u);
  const auto edges = interior_edges(m);
  ASSERT_EQ(set.rows(), static_cast<int>(edges.size()));
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const InteriorEdge& e = edges[k];
    EXPECT_EQ(set.labels[k].kind, "jump");
    EXPECT_EQ(set.labels[k].id, e.edge);
    EXPECT_NEAR(r[k], (plane_gradient(m, u, e.tri2) - plane_gradient(m, u, e.tri1)).dot(e.normal), 1e-11);
  }
}

TEST(ConformalRows, ParaboloidFeasibleMixedTermNot) {
  const Mesh m = build_structured_mesh(MeshKind::Mesh1, 8);
  const LinearConstraintSet set = conformal_convexity_constraints(m);
  const auto edges = interior_edges(m);
  const Eigen::VectorXd r = set.evaluate(nodal(m, 1, [](const Point& p) { return 0.5 * p.squaredNorm(); }));
  EXPECT_TRUE(set.satisfied_by(nodal(m, 1, [](const Point& p) { return 0.5 * p.squaredNorm(); })));
  const Eigen::VectorXd s = set.evaluate(nodal(m, 1, [](const Point& p) {
    return p.x() * p.x() + p.x() * p.y() + p.y() * p.y();
  }));
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const bool diagonal = std::abs(edges[k].normal.x() * edges[k].normal.y()) > 0.1;
    EXPECT_NEAR(r[k], diagonal ? 0.0 : m.h(), 1e-12);
    if (diagonal) EXPECT_NEAR(s[k], -std::numbers::sqrt2 * m.h(), 1e-12);
  }
}

TEST(ConformalRows, P2IntegralAndPointwise) {
  const Mesh m = build_structured_mesh(MeshKind::Mesh1, 4);
  const LinearConstraintSet integral = conformal_convexity_constraints(m, 2, JumpMode::Integral);
  const LinearConstraintSet pointwise = conformal_convexity_constraints(m, 2, JumpMode::Pointwise);
  EXPECT_EQ(pointwise.rows(), 2 * integral.rows());
  EXPECT_TRUE(pointwise.flagged_inconsistent);
  EXPECT_FALSE(integral.flagged_inconsistent);
  const FEFunction u = interpolate(m, 2, [](const Point& p) { return std::pow(p.x(), 3) + p.x() * p.y() * p.y(); });
  const Eigen::VectorXd ri = integral.evaluate(u.dofs());
  const Eigen::VectorXd rp = pointwise.evaluate(u.dofs());
  const auto edges = interior_edges(m);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const JumpProfile j = gradient_jump(u, edges[k]);
    EXPECT_NEAR(ri[k], j.integral(), 1e-12);
    EXPECT_NEAR(rp[2 * k], j.start, 1e-11);
    EXPECT_NEAR(rp[2 * k + 1], j.end, 1e-11);
  }
}

TEST(WeakSubharmonicRows, P1IsFivePointStencil) {
  const Mesh m = build_structured_mesh(MeshKind::Mesh1, 6);
  const LinearConstraintSet set = weak_subharmonicity_constraints(m, 1, WeakTestKind::Vertices);
  ASSERT_EQ(set.rows(), 25);
  const double h = m.h();
  for (int k = 0; k < set.rows(); ++k) {
    const int c = set.labels[k].id;
    EXPECT_EQ(set.A.row(k).nonZeros(), 5);
    EXPECT_NEAR(set.A.coeff(k, c), -4.0, 1e-12);
    for (const Point d : {Point(1, 0), Point(-1, 0), Point(0, 1), Point(0, -1)}) {
      EXPECT_NEAR(set.A.coeff(k, m.find_vertex(m.vertex(c) + h * d)), 1.0, 1e-12);
    }
  }
  EXPECT_THROW(weak_subharmonicity_constraints(m, 1, WeakTestKind::Midpoints), std::invalid_argument);
}

TEST(WeakSubharmonicRows, P2MidpointsExactOnParaboloid) {
  const Mesh m = build_structured_mesh(MeshKind::Mesh1, 4);
  const LinearConstraintSet set = weak_subharmonicity_constraints(m, 2, WeakTestKind::Midpoints);
  EXPECT_FALSE(set.flagged_inconsistent);
  EXPECT_LE(set.max_row_nonzeros(), 12);
  const Eigen::VectorXd r = set.evaluate(nodal(m, 2, [](const Point& p) { return p.squaredNorm(); }));
  for (int k = 0; k < set.rows(); ++k) EXPECT_NEAR(r[k], 4.0 * m.h() * m.h() / 3.0, 1e-12);
  const Eigen::VectorXd z = set.evaluate(nodal(m, 2, [](const Point& p) { return p.x() - p.y(); }));
  EXPECT_LT(z.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WeakSubharmonicRows, P2VerticesAreFlagged) {
  const Mesh m = build_structured_mesh(MeshKind::Mesh1, 4);
  const LinearConstraintSet set = weak_subharmonicity_constraints(m, 2, WeakTestKind::Vertices);
  EXPECT_TRUE(set.flagged_inconsistent);
  EXPECT_FALSE(set.note.empty());
  EXPECT_EQ(set.rows(), 9);
  EXPECT_LE(set.max_row_nonzeros(), 12);
}

TEST(WeakConvexity, AffineZeroAndSaddleDetected) {
  const Mesh m = build_structured_mesh(MeshKind::Mesh1, 4);
  for (const auto& r : weak_convexity_residuals(interpolate(m, 2, [](const Point& p) { return p.x() + 2 * p.y(); }),
                                                WeakTestKind::Midpoints)) {
    EXPECT_NEAR(r.trace, 0.0, 1e-12);
    EXPECT_NEAR(r.det, 0.0, 1e-12);
  }
  const auto saddle =
      weak_convexity_residuals(interpolate(m, 2, [](const Point& p) { return p.x() * p.x() - p.y() * p.y(); }),
                               WeakTestKind::Midpoints);
  ASSERT_FALSE(saddle.empty());
  for (const auto& r : saddle) {
    EXPECT_LT(r.det, 0.0);
    EXPECT_FALSE(r.convex());
  }
}

TEST(PM, KnownCertificates) {
  const std::vector<Point> mesh1{Point(0, 1), Point(1, 0), Point(-kInvSqrt2, kInvSqrt2)};
  const PMCheck c1 = pm_verify(mesh1, Point(-1, 0), Point(0, 1));
  EXPECT_TRUE(c1.holds);
  EXPECT_NEAR(c1.worst, 0.0, 1e-15);
  const PMCheck bad = pm_verify(mesh1, Point(1, 0), Point(0, 1));
  EXPECT_FALSE(bad.holds);
  EXPECT_NEAR(bad.worst, -0.5, 1e-15);

  const std::vector<Point> mesh2{Point(0, 1), Point(1, 0), Point(kInvSqrt2, kInvSqrt2)};
  EXPECT_TRUE(pm_verify(mesh2, Point(1, 0), Point(0, 1)).holds);

  const std::vector<Point> mesh3{Point(0, 1), Point(1, 0), Point(kInvSqrt2, kInvSqrt2), Point(-kInvSqrt2, kInvSqrt2)};
  const PMCheck c3 = pm_verify(mesh3, Point(1, 0), Point(kInvSqrt2, -kInvSqrt2));
  EXPECT_TRUE(c3.holds);
  EXPECT_NEAR(c3.worst, 0.0, 1e-15);
}

TEST(PM, FoundVectorsAlwaysVerify) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> angle(0, 2 * std::numbers::pi);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Point> normals;
    for (int k = 0; k < 1 + trial % 7; ++k) normals.push_back(unit_at_angle(angle(rng)));
    const auto cert = pm_find_vectors(normals);
    ASSERT_TRUE(cert.has_value());
    EXPECT_TRUE(pm_verify(normals, cert->a, cert->b).holds);
    EXPECT_GT(std::abs(cert->a.x() * cert->b.y() - cert->a.y() * cert->b.x()), 1e-6);
  }
  const std::vector<Point> single{Point(0, 1)};
  const auto cert = pm_find_vectors(single);
  ASSERT_TRUE(cert.has_value());
  EXPECT_GE(cert->a.y() * cert->b.y(), 0.0);
  EXPECT_THROW(pm_find_vectors(std::vector<Point>{}), std::invalid_argument);
}

TEST(PM, PersistsUnderRefinement) {
  for (MeshKind kind : {MeshKind::Mesh1, MeshKind::Mesh2, MeshKind::Mesh3}) {
    const auto cert = pm_find_vectors(normal_direction_set(build_structured_mesh(kind, 1 + (kind == MeshKind::Mesh3))));
    ASSERT_TRUE(cert.has_value());
    for (int n : {4, 8, 16}) {
      EXPECT_TRUE(pm_verify(normal_direction_set(build_structured_mesh(kind, n)), cert->a, cert->b).holds);
    }
  }
}

TEST(AdversarialQuadratic, AxisDirections) {
  const AdversarialQuadratic q = lemma2_matrix(Point(-1, 0), Point(0, 1), 1.0);
  EXPECT_LE(q.mixed_derivative(), -1.0 + 1e-12);
  EXPECT_NEAR((q.C - q.C.transpose()).norm(), 0.0, 1e-15);
  EXPECT_NEAR((q.C * q.C_inv - Eigen::Matrix2d::Identity()).norm(), 0.0, 1e-13);
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(q.C).eigenvalues().minCoeff(), 0.0);
  EXPECT_THROW(lemma2_matrix(Point(1, 0), Point(-1, 0), 1.0), DegenerateDirectionsError);
  EXPECT_THROW(lemma2_matrix(Point(1, 0), Point(0, 1), 0.0), std::invalid_argument);
}

TEST(AdversarialQuadratic, RandomPairsAndConstantQuotient) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> angle(0, 2 * std::numbers::pi), unit(0, 1);
  const Rect dom{1, 1, 2, 2};
  for (int trial = 0; trial < 100; ++trial) {
    Point a, b;
    do {
      a = unit_at_angle(angle(rng));
      b = unit_at_angle(angle(rng));
    } while (std::abs(a.x() * b.y() - a.y() * b.x()) < 1e-3);
    const AdversarialQuadratic q = lemma2_matrix(a, b, 1.0, Point(1, 1));
    EXPECT_LE(q.mixed_derivative(), -1.0 + 1e-12);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(q.C).eigenvalues().minCoeff(), 0.0);
    EXPECT_NEAR(q.value(Point(1, 1)), 0.0, 1e-14);

    DifferenceQuotient dq{Point(1.1 + 0.8 * unit(rng), 1.1 + 0.8 * unit(rng)), 0.01 + 0.08 * unit(rng),
                          0.01 + 0.08 * unit(rng), a, b};
    // Only cancellation error remains; it grows with the conditioning of C.
    EXPECT_NEAR(difference_quotient(q.field(), dq, dom), q.mixed_derivative(), 1e-10 * q.C_inv.norm() / (dq.alpha0 * dq.beta0));
  }
}

TEST(DifferenceQuotient, SimpleFunctionsAndDomainCheck) {
  const Rect dom = Rect::unit();
  DifferenceQuotient q{Point(0.2, 0.3), 0.1, 0.2, Point(1, 0), Point(0, 1)};
  EXPECT_NEAR(difference_quotient([](const Point& p) { return 3 * p.x() - p.y() + 2; }, q, dom), 0.0, 1e-13);
  EXPECT_NEAR(difference_quotient([](const Point& p) { return p.x() * p.y(); }, q, dom), 1.0, 1e-13);
  q.alpha0 = 0.9;
  EXPECT_THROW(difference_quotient([](const Point& p) { return p.x(); }, q, dom), OutOfDomainError);
  q.alpha0 = 0.0;
  EXPECT_THROW(difference_quotient([](const Point& p) { return p.x(); }, q, dom), std::invalid_argument);
}

TEST(MonopolistRows, CountsAndSigns) {
  for (int n : {2, 4, 6}) {
    const Mesh m = build_structured_mesh(MeshKind::Mesh1, n, Rect{1, 1, 2, 2});
    const LinearConstraintSet set = monopolist_constraints(m);
    const int interior = static_cast<int>(interior_edges(m).size());
    EXPECT_EQ(set.rows(), (n + 1) * (n + 1) + 4 * n * n + interior);
    EXPECT_LE(set.max_row_nonzeros(), 12);
    EXPECT_TRUE(set.satisfied_by(nodal(m, 1, [](const Point& p) { return p.x() + p.y(); })));
    const Eigen::VectorXd r = set.evaluate(nodal(m, 1, [](const Point& p) { return -p.x(); }));
    for (int k = 0; k < set.rows(); ++k) {
      if (set.labels[k].kind == "grad-x") EXPECT_NEAR(r[k], -1.0, 1e-12);
    }
  }
}

TEST(ConstraintSet, AppendAndNone) {
  const Mesh m = build_structured_mesh(MeshKind::Mesh1, 3);
  LinearConstraintSet set = LinearConstraintSet::none(m.num_vertices());
  EXPECT_EQ(set.rows(), 0);
  EXPECT_TRUE(set.satisfied_by(Eigen::VectorXd::Constant(m.num_vertices(), -5.0)));
  set.append(conformal_convexity_constraints(m));
  EXPECT_EQ(set.rows(), static_cast<int>(interior_edges(m).size()));
  EXPECT_THROW(set.append(LinearConstraintSet::none(3)), std::invalid_argument);
}
