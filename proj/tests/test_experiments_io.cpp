#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "convexlab/experiments.hpp"
#include "convexlab/report.hpp"
#include "convexlab/sparse_io.hpp"

using namespace convexlab;

namespace {

std::string csv_text(const CsvTable& t) {
  std::ostringstream out;
  t.write(out);
  return out.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("convexlab_test_" + name);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Csv, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 6.02214076e23, 0.0}) EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Csv, RoundTripAndWidthCheck) {
  CsvTable t({"a", "b"});
  t.add_row({"1", format_double(0.1)});
  t.add_row({"2", format_double(1e-300)});
  EXPECT_THROW(t.add_row({"3"}), std::invalid_argument);
  std::stringstream s(csv_text(t));
  const CsvTable back = CsvTable::read(s);
  EXPECT_EQ(back.header(), t.header());
  EXPECT_EQ(back.rows(), t.rows());
  EXPECT_EQ(back.numeric_column("b")[0], 0.1);
  EXPECT_THROW(back.column("missing"), std::invalid_argument);
}

TEST(Report, ObservedOrdersAndSvg) {
  const std::vector<double> h{0.25, 0.125, 0.0625};
  const std::vector<double> e{0.1, 0.025, 0.00625};
  const auto orders = observed_orders(h, e);
  ASSERT_EQ(orders.size(), 2u);
  EXPECT_NEAR(orders[0], 2.0, 1e-12);
  EXPECT_NEAR(orders[1], 2.0, 1e-12);
  const std::string svg = loglog_svg("errors", "h", "error", {{"run", h, e}});
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(svg, loglog_svg("errors", "h", "error", {{"run", h, e}}));
}

TEST(SparseIO, MatrixVectorAndConstraints) {
  const Mesh m = build_structured_mesh(MeshKind::Mesh3, 3);
  const SparseMatrix K = assemble_stiffness(m, 1);
  std::stringstream ks;
  write_coordinate(ks, K);
  EXPECT_EQ((Eigen::MatrixXd(read_coordinate(ks)) - Eigen::MatrixXd(K)).cwiseAbs().maxCoeff(), 0.0);

  const Eigen::VectorXd v = assemble_load(m, 1, [](const Point& p) { return std::sin(p.x()); });
  std::stringstream vs;
  write_vector(vs, v);
  EXPECT_EQ(read_vector(vs), v);

  const auto dir = scratch_dir("sparse");
  const LinearConstraintSet set = monopolist_constraints(m);
  save_constraints((dir / "rows.txt").string(), set);
  const LinearConstraintSet back = load_constraints((dir / "rows.txt").string());
  EXPECT_EQ((Eigen::MatrixXd(back.A) - Eigen::MatrixXd(set.A)).cwiseAbs().maxCoeff(), 0.0);
  ASSERT_EQ(back.labels.size(), set.labels.size());
  for (std::size_t k = 0; k < set.labels.size(); ++k) {
    EXPECT_EQ(back.labels[k].kind, set.labels[k].kind);
    EXPECT_EQ(back.labels[k].id, set.labels[k].id);
  }

  std::stringstream bad("2 2 1\n0 5 1.0\n");
  EXPECT_THROW(read_coordinate(bad), std::runtime_error);
}

TEST(SparseIO, QPRoundTripSolvesIdentically) {
  const Mesh m = build_structured_mesh(MeshKind::Mesh1, 4, Rect{1, 1, 2, 2});
  const QPProblem p = monopolist_problem(m, {});
  const auto dir = scratch_dir("qp");
  save_qp((dir / "mono").string(), p);
  const QPProblem back = load_qp((dir / "mono").string());
  EXPECT_EQ(back.pinned, p.pinned);
  EXPECT_EQ(back.q, p.q);
  EXPECT_EQ(solve_qp(back).u, solve_qp(p).u);
}

TEST(Experiments, ConstraintModes) {
  for (const char* name : {"conformal", "weak-subharmonic", "weak-convex", "monopolist", "none"}) {
    EXPECT_STREQ(to_string(parse_constraint_mode(name)), name);
  }
  EXPECT_THROW(parse_constraint_mode("bogus"), std::invalid_argument);
  const Mesh m = build_structured_mesh(MeshKind::Mesh1, 4);
  EXPECT_EQ(build_constraints(m, 1, ConstraintMode::None).rows(), 0);
  EXPECT_EQ(build_constraints(m, 1, ConstraintMode::WeakSubharmonic).rows(), 9);
  EXPECT_EQ(build_constraints(m, 1, ConstraintMode::WeakConvex).rows(), 18);
  EXPECT_EQ(build_constraints(m, 1, ConstraintMode::Conformal).rows(), static_cast<int>(interior_edges(m).size()));
}

TEST(Experiments, SubharmonicStudyIsDeterministic) {
  SubharmonicConfig cfg;
  cfg.levels = {4, 8, 16};
  const StudyResult a = subharmonic_study(cfg);
  const StudyResult b = subharmonic_study(cfg);
  EXPECT_EQ(csv_text(a.table()), csv_text(b.table()));
  EXPECT_TRUE(a.all_optimal());
  const auto e = a.errors();
  EXPECT_GT(e[0], e[1]);
  EXPECT_GT(e[1], e[2]);
  EXPECT_GE(a.levels.back().order, 1.9);
}

TEST(Experiments, AffineTargetIsReproduced) {
  SubharmonicConfig cfg;
  cfg.levels = {4, 8};
  cfg.target = polynomial("1+2x-y", {{1, 0, 0}, {2, 1, 0}, {-1, 0, 1}});
  for (double e : subharmonic_study(cfg).errors()) EXPECT_LT(e, 1e-10);
}

TEST(Experiments, NonconvergencePlateauAndActivity) {
  NonconvergenceConfig cfg;
  cfg.levels = {4, 8};
  const NonconvergenceResult r = nonconvergence_study(cfg);
  ASSERT_TRUE(r.study.all_optimal());
  EXPECT_GE(r.study.levels[1].error, 0.5 * r.study.levels[0].error);
  EXPECT_FALSE(r.activity.empty());
  const CsvTable t = r.activity_table();
  EXPECT_EQ(t.rows().size(), r.activity.size());

  cfg.constrained = false;
  const NonconvergenceResult control = nonconvergence_study(cfg);
  EXPECT_LT(control.study.levels[1].error, 0.3 * control.study.levels[0].error);
}

TEST(Experiments, MonopolistMinimality) {
  const MonopolistConfig cfg;
  const Mesh m = build_structured_mesh(MeshKind::Mesh1, 8, cfg.domain);
  const QPProblem p = monopolist_problem(m, cfg);
  const QPSolution s = solve_qp(p);
  ASSERT_EQ(s.status, QPStatus::Optimal);
  const AdversarialQuadratic exact = monopolist_exact(cfg);
  const Eigen::VectorXd interp = interpolate(m, 1, exact.field()).dofs();
  EXPECT_TRUE(monopolist_constraints(m).satisfied_by(interp));
  EXPECT_LE(monopolist_objective(m, cfg, s.u), monopolist_objective(m, cfg, interp) + 1e-12);
  EXPECT_NEAR(monopolist_objective(m, cfg, s.u), p.objective(s.u), 1e-10 * (1.0 + std::abs(p.objective(s.u))));
}

TEST(Experiments, PMAuditOnPerturbedSubregion) {
  const Mesh m = build_structured_mesh(MeshKind::Mesh4, 8);
  const PMAudit a = pm_audit(m, Rect{0, 0, 0.5, 0.5});
  ASSERT_TRUE(a.certificate.has_value());
  EXPECT_TRUE(a.check.holds);
  EXPECT_GT(a.normals.size(), 3u);
}

TEST(Experiments, ConsistencyTablesHaveOneSummaryRowPerCase) {
  const auto functions = standard_test_functions();
  const auto reports = run_suite(std::span(&find_case("eq15"), 1), functions);
  EXPECT_EQ(consistency_summary(reports).rows().size(), 1u);
  EXPECT_EQ(consistency_table(reports).rows().size(), functions.size() * 4);
}
