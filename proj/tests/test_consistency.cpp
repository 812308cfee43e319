#include <cmath>
#include <map>
#include <numbers>

#include <gtest/gtest.h>

#include "convexlab/consistency.hpp"
#include "convexlab/errors.hpp"

using namespace convexlab;

namespace {

struct Series {
  std::vector<double> h;
  std::vector<double> q;
};

Series measure(const std::string& id, const std::string& probe, const SmoothFunction& u, const PatchConfig& cfg = {}) {
  const ConsistencyCase& c = find_case(id);
  for (const Probe& p : c.probes) {
    if (p.label != probe) continue;
    Series s;
    s.h = cfg.steps();
    for (double h : s.h) s.q.push_back(evaluate_case(c, p, u, h, cfg));
    return s;
  }
  throw std::invalid_argument("no probe " + probe);
}

}  // namespace

TEST(EstimateOrder, ExactPowerLaw) {
  const std::vector<double> h{0.1, 0.05, 0.025, 0.0125};
  std::vector<double> q;
  for (double v : h) q.push_back(3.0 * v * v);
  const OrderEstimate e = estimate_order(h, q);
  EXPECT_NEAR(e.order, 2.0, 1e-12);
  EXPECT_NEAR(e.coefficient, 3.0, 1e-9);
  EXPECT_NEAR(e.r2, 1.0, 1e-12);
  EXPECT_FALSE(e.infinite);
  EXPECT_NEAR(extrapolated_coefficient(h, q, 2), 3.0, 1e-12);
}

TEST(EstimateOrder, ZeroAndDegenerateData) {
  const std::vector<double> h{0.1, 0.05, 0.025, 0.0125};
  EXPECT_TRUE(estimate_order(h, std::vector<double>(4, 0.0)).infinite);
  EXPECT_THROW(estimate_order(h, std::vector<double>{1e-16, -2e-16, 1e-17, 3e-16}), DegenerateDataError);
  EXPECT_TRUE(estimate_order(h, std::vector<double>{1e-3, 1e-4, 0.0, 1e-6}).infinite);
  EXPECT_THROW(estimate_order(h, std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST(EstimateOrder, RichardsonRemovesNextTerm) {
  const std::vector<double> h{0.1, 0.05, 0.025, 0.0125};
  std::vector<double> q;
  for (double v : h) q.push_back(2.0 * v + 7.0 * v * v);
  EXPECT_NEAR(extrapolated_coefficient(h, q, 1), 2.0, 1e-12);
}

TEST(TestFunctions, DerivativesMatchFiniteDifferences) {
  const Point p(0.3, 0.7);
  const double d = 1e-4;
  for (const SmoothFunction& u : standard_test_functions()) {
    const double ux = (u(p + Point(d, 0)) - u(p - Point(d, 0))) / (2 * d);
    const double uyy = (u(p + Point(0, d)) - 2 * u(p) + u(p - Point(0, d))) / (d * d);
    EXPECT_NEAR(u.derivative(1, 0, p), ux, 1e-6) << u.name();
    EXPECT_NEAR(u.derivative(0, 2, p), uyy, 1e-5) << u.name();
  }
  EXPECT_EQ(standard_test_functions().size(), 14u);
}

TEST(EvaluateCase, AxisJumpOfXSquared) {
  const Series s = measure("eq13", "vertical", polynomial("x^2", {{1, 2, 0}}));
  const OrderEstimate e = estimate_order(s.h, s.q);
  EXPECT_NEAR(e.order, 1.0, 1e-9);
  EXPECT_NEAR(extrapolated_coefficient(s.h, s.q, 1), 2.0, 1e-9);
}

TEST(EvaluateCase, DiagonalJumpOfXY) {
  const Series s = measure("eq13", "diagonal", polynomial("xy", {{1, 1, 1}}));
  const OrderEstimate e = estimate_order(s.h, s.q);
  EXPECT_NEAR(e.order, 1.0, 1e-9);
  EXPECT_NEAR(extrapolated_coefficient(s.h, s.q, 1), -std::numbers::sqrt2, 1e-9);
}

TEST(EvaluateCase, P2VertexTraceOfQuartic) {
  const Series s = measure("eq20", "vertex", polynomial("x^4", {{1, 4, 0}}));
  const OrderEstimate e = estimate_order(s.h, s.q);
  EXPECT_NEAR(e.order, 4.0, 0.01);
  EXPECT_NEAR(extrapolated_coefficient(s.h, s.q, 4), -0.5, 0.01);
}

TEST(EvaluateCase, P2MidpointDetIgnoresAffinePart) {
  const SmoothFunction u = polynomial("x^2+y^2-x+2y+1", {{1, 2, 0}, {1, 0, 2}, {-1, 1, 0}, {2, 0, 1}, {1, 0, 0}});
  for (const char* probe : {"horizontal", "vertical", "diagonal"}) {
    const Series s = measure("eq22", probe, u);
    EXPECT_NEAR(estimate_order(s.h, s.q).order, 4.0, 1e-6) << probe;
    EXPECT_NEAR(extrapolated_coefficient(s.h, s.q, 4), 4.0 / 9.0, 1e-6) << probe;
  }
}

TEST(EvaluateCase, P2JumpVanishesOnQuadratics) {
  const SmoothFunction u = polynomial("x^2+xy+y^2", {{1, 2, 0}, {1, 1, 1}, {1, 0, 2}});
  for (const char* probe : {"vertical", "horizontal", "diagonal"}) {
    const Series s = measure("eq18", probe, u);
    for (double q : s.q) EXPECT_NEAR(q, 0.0, 1e-8) << probe;
  }
}

TEST(EvaluateCase, PatchOutsideDomain) {
  PatchConfig cfg;
  cfg.center = Point(0.01, 0.5);
  const ConsistencyCase& c = find_case("eq15");
  EXPECT_THROW(evaluate_case(c, c.probes[0], sin_x_cos_y(), cfg.steps()[0], cfg), OutOfDomainError);
  EXPECT_THROW(find_case("bogus"), std::invalid_argument);
}

TEST(Suite, VerdictsAndPredictionsMatch) {
  const auto functions = standard_test_functions();
  const auto reports = run_suite(tabulated_cases(), functions);
  ASSERT_EQ(reports.size(), 8u);
  for (const ConsistencyReport& r : reports) {
    EXPECT_TRUE(r.verdict_matches()) << r.case_id;
    EXPECT_TRUE(r.all_match_prediction()) << r.case_id;
    for (const ProbeResult& p : r.results) {
      EXPECT_GE(p.h.size(), 4u);
      // A vanishing predicted term must show up as faster decay.
      if (p.null_prediction) EXPECT_TRUE(p.null_measured) << r.case_id << " " << p.probe << " " << p.function;
    }
  }
  const std::map<std::string, bool> expected{{"eq13", false}, {"eq13_5", false}, {"eq15", true}, {"eq17", true},
                                             {"eq18", false}, {"eq20", false},   {"eq21", true}, {"eq22", true}};
  for (const ConsistencyReport& r : reports) EXPECT_EQ(r.consistent, expected.at(r.case_id)) << r.case_id;
}

TEST(Suite, WeakTraceCoefficientWithinOnePercent) {
  const auto functions = standard_test_functions();
  const ConsistencyReport r = run_case(find_case("eq15"), functions);
  for (const ProbeResult& p : r.results) {
    if (p.null_prediction) continue;
    EXPECT_NEAR(p.measured_coefficient, p.counterpart, 0.01 * std::abs(p.counterpart)) << p.function;
  }
}

TEST(Suite, TranslatedCentre) {
  PatchConfig cfg;
  cfg.center = Point(0.7, 0.6);
  const auto functions = standard_test_functions();
  for (const ConsistencyReport& r : run_suite(tabulated_cases(), functions, cfg)) {
    EXPECT_TRUE(r.verdict_matches()) << r.case_id;
    EXPECT_TRUE(r.all_match_prediction()) << r.case_id;
  }
}

TEST(Suite, IndependentOfThreadCount) {
  const auto functions = standard_test_functions();
  const auto one = run_suite(tabulated_cases(), functions, {}, {}, 1);
  const auto many = run_suite(tabulated_cases(), functions, {}, {}, 4);
  ASSERT_EQ(one.size(), many.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    ASSERT_EQ(one[i].results.size(), many[i].results.size());
    for (std::size_t k = 0; k < one[i].results.size(); ++k) EXPECT_EQ(one[i].results[k].q, many[i].results[k].q);
  }
}
