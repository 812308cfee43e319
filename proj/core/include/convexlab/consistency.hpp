#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "convexlab/fem.hpp"
#include "convexlab/mesh.hpp"

namespace convexlab {

// ---------------------------------------------------------------------------
// Smooth test functions with known partial derivatives

class SmoothFunction {
 public:
  using Derivative = std::function<double(int, int, const Point&)>;

  SmoothFunction(std::string name, Derivative derivative);

  const std::string& name() const { return name_; }
  double operator()(const Point& p) const { return derivative_(0, 0, p); }
  /// d^(i+j) u / dx^i dy^j at p.
  double derivative(int i, int j, const Point& p) const { return derivative_(i, j, p); }
  double laplacian(const Point& p) const { return derivative(2, 0, p) + derivative(0, 2, p); }
  double hessian_det(const Point& p) const;
  /// Second derivative along the unit vector n.
  double directional_second(const Point& n, const Point& p) const;
  ScalarField field() const;

 private:
  std::string name_;
  Derivative derivative_;
};

struct Monomial {
  double coef = 1.0;
  int px = 0;
  int py = 0;
};

SmoothFunction polynomial(std::string name, std::vector<Monomial> terms);
SmoothFunction sin_x_cos_y();
/// Degree <= 4 monomials and sin(x)cos(y).
std::vector<SmoothFunction> standard_test_functions();

// ---------------------------------------------------------------------------
// Cases

enum class Quantity {
  JumpAxisEdge,
  JumpDiagonalEdge,
  WeakTraceVertex,
  WeakDetVertex,
  P2Jump,
  P2WeakTraceVertex,
  P2WeakTraceMidpointH,
  P2WeakTraceMidpointV,
  P2WeakTraceMidpointD,
  P2WeakDetMidpoint,
};

const char* to_string(Quantity q);

/// Continuous constraint quantity the discrete one is meant to approximate.
enum class Counterpart { NormalSecondDerivative, Laplacian, HessianDeterminant };

using CoefficientFunctional = std::function<double(const SmoothFunction&, const Point&)>;

/// One measured quantity of a case. `direction` is the edge, in units of h,
/// leaving the centre vertex (jumps) or carrying the tested midpoint.
struct Probe {
  std::string label;
  Quantity quantity = Quantity::JumpAxisEdge;
  Point direction = Point::UnitX();
  int order = 1;
  CoefficientFunctional coefficient;
  Counterpart counterpart = Counterpart::Laplacian;
};

struct ConsistencyCase {
  std::string id;
  MeshKind kind = MeshKind::Mesh1;
  int degree = 1;
  std::vector<Probe> probes;
  bool expected_consistent = false;  ///< classification the expansions imply
};

/// The eight tabulated cases: eq13, eq13_5, eq15, eq17, eq18, eq20, eq21, eq22.
const std::vector<ConsistencyCase>& tabulated_cases();
/// Throws std::invalid_argument for an unknown id.
const ConsistencyCase& find_case(const std::string& id);

struct PatchConfig {
  Point center = Point(0.3, 0.2);
  double scale = 0.125;  ///< h-levels are scale/8, scale/16, ...
  int levels = 4;
  Rect domain = Rect::unit();

  std::vector<double> steps() const;
};

/// The patch: a 4x4 structured mesh of the case's kind with step h around the
/// expansion point. Vertex quantities sit on the centre vertex; midpoint
/// quantities put the midpoint of the probed edge on the centre.
/// Throws OutOfDomainError if the patch leaves `domain`.
Mesh consistency_patch(const ConsistencyCase& c, const Probe& probe, double h, const PatchConfig& cfg);

/// Q_h of one probe on the interpolant of u. Jumps of P1 are the constant
/// jump; P2 jumps are the derivative of the affine jump with respect to y
/// (vertical edges) or x (other edges).
double evaluate_case(const ConsistencyCase& c, const Probe& probe, const SmoothFunction& u, double h,
                     const PatchConfig& cfg = {});

struct OrderEstimate {
  double order = 0.0;
  double coefficient = 0.0;  ///< finest Q_h / h^order
  double r2 = 1.0;
  bool infinite = false;     ///< Q_h vanished at some level
};

/// Least-squares fit of log|Q_h| against log h. Needs >= 2 levels (>= 4 for
/// reports). Throws DegenerateDataError when every |Q_h| < 1e-14 unless they are
/// all exactly zero, which is flagged as infinite order.
OrderEstimate estimate_order(std::span<const double> h, std::span<const double> q);

/// Q/h^p extrapolated from the two finest levels assuming a next term of order p+1.
double extrapolated_coefficient(std::span<const double> h, std::span<const double> q, int p);

// ---------------------------------------------------------------------------
// Reports

struct ProbeResult {
  std::string probe;
  std::string function;
  std::vector<double> h;
  std::vector<double> q;
  int predicted_order = 0;
  double predicted_coefficient = 0.0;
  double counterpart = 0.0;
  OrderEstimate fit;
  double measured_coefficient = 0.0;  ///< extrapolated; 0 for null results
  bool null_prediction = false;
  bool null_measured = false;         ///< order > p, infinite, degenerate or negligible Q_h / h^p
  double relative_error = 0.0;
  bool matches_prediction = false;
};

struct ConsistencyReport {
  std::string case_id;
  std::vector<ProbeResult> results;
  bool consistent = false;           ///< measured verdict
  bool expected_consistent = false;
  double seconds = 0.0;

  bool verdict_matches() const { return consistent == expected_consistent; }
  bool all_match_prediction() const;
};

/// Tolerances of the order/coefficient comparison.
struct ConsistencyTolerance {
  double order = 0.1;
  double coefficient = 0.02;
  double null_margin = 0.5;  ///< null results need order >= p + margin
  double zero = 1e-9;        ///< |coefficient| below this counts as zero
  double null_coefficient = 1e-6;  ///< |Q_h / h^p| at the finest level below this is null
};

/// Evaluates every probe of `c` on every function; the verdict is consistent
/// iff every measured leading coefficient is one positive multiple of the
/// continuous counterpart, per probe.
ConsistencyReport run_case(const ConsistencyCase& c, std::span<const SmoothFunction> functions,
                           const PatchConfig& cfg = {}, const ConsistencyTolerance& tol = {});

/// Runs cases in parallel, at most `max_threads` (0: CONVEXLAB_THREADS or the
/// hardware count). Results are in input order.
std::vector<ConsistencyReport> run_suite(std::span<const ConsistencyCase> cases,
                                         std::span<const SmoothFunction> functions, const PatchConfig& cfg = {},
                                         const ConsistencyTolerance& tol = {}, unsigned max_threads = 0);

/// Thread cap from CONVEXLAB_THREADS, else hardware concurrency (>= 1).
unsigned default_thread_count();

}  // namespace convexlab
