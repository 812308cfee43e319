#include "convexlab/consistency.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "convexlab/errors.hpp"

namespace convexlab {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

double falling(int n, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= n - i;
  return r;
}

double uxx(const SmoothFunction& u, const Point& p) { return u.derivative(2, 0, p); }
double uxy(const SmoothFunction& u, const Point& p) { return u.derivative(1, 1, p); }
double uyy(const SmoothFunction& u, const Point& p) { return u.derivative(0, 2, p); }
double third_mix(const SmoothFunction& u, const Point& p) { return u.derivative(2, 1, p) + u.derivative(1, 2, p); }

Probe probe(std::string label, Quantity q, Point dir, int order, CoefficientFunctional coef, Counterpart cp) {
  return Probe{std::move(label), q, dir, order, std::move(coef), cp};
}

std::vector<ConsistencyCase> build_cases() {
  std::vector<ConsistencyCase> cases;
  const Point E(1, 0);
  const Point N(0, 1);
  const Point S(0, -1);
  const Point NE(1, 1);
  const Point NW(-1, 1);
  using Q = Quantity;
  using C = Counterpart;

  cases.push_back({"eq13", MeshKind::Mesh1, 1,
                   {probe("vertical", Q::JumpAxisEdge, N, 1,
                          [](const SmoothFunction& u, const Point& p) { return uxx(u, p) + uxy(u, p); },
                          C::NormalSecondDerivative),
                    probe("horizontal", Q::JumpAxisEdge, E, 1,
                          [](const SmoothFunction& u, const Point& p) { return uxy(u, p) + uyy(u, p); },
                          C::NormalSecondDerivative),
                    probe("diagonal", Q::JumpDiagonalEdge, NE, 1,
                          [](const SmoothFunction& u, const Point& p) { return -kSqrt2 * uxy(u, p); },
                          C::NormalSecondDerivative)},
                   false});

  cases.push_back({"eq13_5", MeshKind::Mesh2, 1,
                   {probe("vertical", Q::JumpAxisEdge, N, 1,
                          [](const SmoothFunction& u, const Point& p) { return uxx(u, p) - uxy(u, p); },
                          C::NormalSecondDerivative),
                    probe("diagonal", Q::JumpDiagonalEdge, NW, 1,
                          [](const SmoothFunction& u, const Point& p) { return kSqrt2 * uxy(u, p); },
                          C::NormalSecondDerivative),
                    probe("horizontal", Q::JumpAxisEdge, E, 1,
                          [](const SmoothFunction& u, const Point& p) { return uyy(u, p) - uxy(u, p); },
                          C::NormalSecondDerivative)},
                   false});

  cases.push_back({"eq15", MeshKind::Mesh1, 1,
                   {probe("vertex", Q::WeakTraceVertex, E, 2,
                          [](const SmoothFunction& u, const Point& p) { return u.laplacian(p); }, C::Laplacian)},
                   true});

  cases.push_back({"eq17", MeshKind::Mesh1, 1,
                   {probe("vertex", Q::WeakDetVertex, E, 4,
                          [](const SmoothFunction& u, const Point& p) { return u.hessian_det(p); },
                          C::HessianDeterminant)},
                   true});

  cases.push_back({"eq18", MeshKind::Mesh1, 2,
                   {probe("vertical", Q::P2Jump, S, 1,
                          [](const SmoothFunction& u, const Point& p) { return 0.5 * third_mix(u, p); },
                          C::NormalSecondDerivative),
                    probe("horizontal", Q::P2Jump, E, 1,
                          [](const SmoothFunction& u, const Point& p) { return 0.5 * third_mix(u, p); },
                          C::NormalSecondDerivative),
                    probe("diagonal", Q::P2Jump, NE, 1,
                          [](const SmoothFunction& u, const Point& p) { return -0.5 * kSqrt2 * third_mix(u, p); },
                          C::NormalSecondDerivative)},
                   false});

  cases.push_back({"eq20", MeshKind::Mesh1, 2,
                   {probe("vertex", Q::P2WeakTraceVertex, E, 4,
                          [](const SmoothFunction& u, const Point& p) {
                            return -(u.derivative(4, 0, p) + u.derivative(0, 4, p)) / 48.0;
                          },
                          C::Laplacian)},
                   false});

  const auto third_laplacian = [](const SmoothFunction& u, const Point& p) { return u.laplacian(p) / 3.0; };
  cases.push_back({"eq21", MeshKind::Mesh1, 2,
                   {probe("horizontal", Q::P2WeakTraceMidpointH, E, 2, third_laplacian, C::Laplacian),
                    probe("vertical", Q::P2WeakTraceMidpointV, N, 2, third_laplacian, C::Laplacian),
                    probe("diagonal", Q::P2WeakTraceMidpointD, NE, 2, third_laplacian, C::Laplacian)},
                   true});

  const auto ninth_det = [](const SmoothFunction& u, const Point& p) { return u.hessian_det(p) / 9.0; };
  cases.push_back({"eq22", MeshKind::Mesh1, 2,
                   {probe("horizontal", Q::P2WeakDetMidpoint, E, 4, ninth_det, C::HessianDeterminant),
                    probe("vertical", Q::P2WeakDetMidpoint, N, 4, ninth_det, C::HessianDeterminant),
                    probe("diagonal", Q::P2WeakDetMidpoint, NE, 4, ninth_det, C::HessianDeterminant)},
                   true});
  return cases;
}

bool is_midpoint_quantity(Quantity q) {
  return q == Quantity::P2WeakTraceMidpointH || q == Quantity::P2WeakTraceMidpointV ||
         q == Quantity::P2WeakTraceMidpointD || q == Quantity::P2WeakDetMidpoint;
}

// Vertex at the lower-left end of the probed edge, or the centre vertex.
Point centre_vertex(const Probe& probe, double h, const Point& center) {
  if (is_midpoint_quantity(probe.quantity)) return center - 0.5 * h * probe.direction;
  return center;
}

double counterpart_value(const Probe& probe, const SmoothFunction& u, const Point& p) {
  switch (probe.counterpart) {
    case Counterpart::Laplacian: return u.laplacian(p);
    case Counterpart::HessianDeterminant: return u.hessian_det(p);
    case Counterpart::NormalSecondDerivative: {
      const Point t = probe.direction.normalized();
      return u.directional_second(Point(t.y(), -t.x()), p);
    }
  }
  return 0.0;
}

const InteriorEdge& find_interior_edge(const std::vector<InteriorEdge>& edges, int edge) {
  for (const InteriorEdge& e : edges) {
    if (e.edge == edge) return e;
  }
  throw std::logic_error("consistency patch: probed edge is on the boundary");
}

}  // namespace

SmoothFunction::SmoothFunction(std::string name, Derivative derivative)
    : name_(std::move(name)), derivative_(std::move(derivative)) {}

double SmoothFunction::hessian_det(const Point& p) const {
  const double xy = derivative(1, 1, p);
  return derivative(2, 0, p) * derivative(0, 2, p) - xy * xy;
}

double SmoothFunction::directional_second(const Point& n, const Point& p) const {
  return n.x() * n.x() * derivative(2, 0, p) + 2.0 * n.x() * n.y() * derivative(1, 1, p) +
         n.y() * n.y() * derivative(0, 2, p);
}

ScalarField SmoothFunction::field() const {
  return [f = *this](const Point& p) { return f(p); };
}

SmoothFunction polynomial(std::string name, std::vector<Monomial> terms) {
  return SmoothFunction(std::move(name), [terms = std::move(terms)](int i, int j, const Point& p) {
    double sum = 0.0;
    for (const Monomial& m : terms) {
      if (i > m.px || j > m.py) continue;
      sum += m.coef * falling(m.px, i) * falling(m.py, j) * std::pow(p.x(), m.px - i) * std::pow(p.y(), m.py - j);
    }
    return sum;
  });
}

SmoothFunction sin_x_cos_y() {
  return SmoothFunction("sin(x)cos(y)", [](int i, int j, const Point& p) {
    const double half_pi = 0.5 * std::numbers::pi;
    return std::sin(p.x() + i * half_pi) * std::cos(p.y() + j * half_pi);
  });
}

std::vector<SmoothFunction> standard_test_functions() {
  std::vector<SmoothFunction> out;
  const auto mono = [&](const char* name, int px, int py) { out.push_back(polynomial(name, {{1.0, px, py}})); };
  mono("x^2", 2, 0);
  mono("xy", 1, 1);
  mono("y^2", 0, 2);
  mono("x^3", 3, 0);
  mono("x^2y", 2, 1);
  mono("xy^2", 1, 2);
  mono("y^3", 0, 3);
  mono("x^4", 4, 0);
  mono("x^3y", 3, 1);
  mono("x^2y^2", 2, 2);
  mono("xy^3", 1, 3);
  mono("y^4", 0, 4);
  out.push_back(polynomial("x^2+xy+y^2", {{1.0, 2, 0}, {1.0, 1, 1}, {1.0, 0, 2}}));
  out.push_back(sin_x_cos_y());
  return out;
}

const char* to_string(Quantity q) {
  switch (q) {
    case Quantity::JumpAxisEdge: return "jump-axis-edge";
    case Quantity::JumpDiagonalEdge: return "jump-diagonal-edge";
    case Quantity::WeakTraceVertex: return "weak-trace-vertex";
    case Quantity::WeakDetVertex: return "weak-det-vertex";
    case Quantity::P2Jump: return "P2-jump";
    case Quantity::P2WeakTraceVertex: return "P2-weak-trace-vertex";
    case Quantity::P2WeakTraceMidpointH: return "P2-weak-trace-midpoint-h";
    case Quantity::P2WeakTraceMidpointV: return "P2-weak-trace-midpoint-v";
    case Quantity::P2WeakTraceMidpointD: return "P2-weak-trace-midpoint-d";
    case Quantity::P2WeakDetMidpoint: return "P2-weak-det-midpoint";
  }
  return "unknown";
}

const std::vector<ConsistencyCase>& tabulated_cases() {
  static const std::vector<ConsistencyCase> cases = build_cases();
  return cases;
}

const ConsistencyCase& find_case(const std::string& id) {
  for (const ConsistencyCase& c : tabulated_cases()) {
    if (c.id == id) return c;
  }
  throw std::invalid_argument("unknown consistency case '" + id + "'");
}

std::vector<double> PatchConfig::steps() const {
  std::vector<double> h;
  for (int k = 0; k < levels; ++k) h.push_back(scale / 8.0 / std::pow(2.0, k));
  return h;
}

Mesh consistency_patch(const ConsistencyCase& c, const Probe& probe, double h, const PatchConfig& cfg) {
  const Point v = centre_vertex(probe, h, cfg.center);
  const Rect patch{v.x() - 2.0 * h, v.y() - 2.0 * h, v.x() + 2.0 * h, v.y() + 2.0 * h};
  if (!cfg.domain.contains(Point(patch.x0, patch.y0)) || !cfg.domain.contains(Point(patch.x1, patch.y1))) {
    throw OutOfDomainError("consistency patch leaves the domain");
  }
  return build_structured_mesh(c.kind, 4, patch);
}

double evaluate_case(const ConsistencyCase& c, const Probe& probe, const SmoothFunction& u, double h,
                     const PatchConfig& cfg) {
  const Mesh mesh = consistency_patch(c, probe, h, cfg);
  const FEFunction uh = interpolate(mesh, c.degree, u.field());
  const int centre = mesh.find_vertex(centre_vertex(probe, h, cfg.center), 1e-9 * h);
  if (centre < 0) throw std::logic_error("consistency patch: centre vertex not found");
  const auto probed_edge = [&] {
    const int other = mesh.find_vertex(mesh.vertex(centre) + h * probe.direction, 1e-9 * h);
    const int e = other < 0 ? -1 : mesh.find_edge(centre, other);
    if (e < 0) throw std::logic_error("consistency patch: probed edge not in mesh");
    return e;
  };

  switch (probe.quantity) {
    case Quantity::JumpAxisEdge:
    case Quantity::JumpDiagonalEdge: {
      const auto edges = interior_edges(mesh);
      return gradient_jump(uh, find_interior_edge(edges, probed_edge())).start;
    }
    case Quantity::P2Jump: {
      const auto edges = interior_edges(mesh);
      const InteriorEdge& e = find_interior_edge(edges, probed_edge());
      const JumpProfile jump = gradient_jump(uh, e);
      const Point t = (mesh.vertex(e.endpoints[1]) - mesh.vertex(e.endpoints[0])) / e.length;
      const bool vertical = std::abs(t.x()) < 1e-12;
      return jump.slope() / (vertical ? t.y() : t.x());
    }
    case Quantity::WeakTraceVertex:
    case Quantity::P2WeakTraceVertex: return weak_hessian(uh, centre).trace();
    case Quantity::WeakDetVertex: return weak_hessian(uh, centre).det();
    case Quantity::P2WeakTraceMidpointH:
    case Quantity::P2WeakTraceMidpointV:
    case Quantity::P2WeakTraceMidpointD: return weak_hessian(uh, mesh.num_vertices() + probed_edge()).trace();
    case Quantity::P2WeakDetMidpoint: return weak_hessian(uh, mesh.num_vertices() + probed_edge()).det();
  }
  return 0.0;
}

OrderEstimate estimate_order(std::span<const double> h, std::span<const double> q) {
  if (h.size() != q.size() || h.size() < 2) throw std::invalid_argument("estimate_order: need >= 2 matched levels");
  OrderEstimate est;
  if (std::all_of(q.begin(), q.end(), [](double v) { return v == 0.0; })) {
    est.infinite = true;
    est.order = std::numeric_limits<double>::infinity();
    est.coefficient = 0.0;
    return est;
  }
  if (std::all_of(q.begin(), q.end(), [](double v) { return std::abs(v) < 1e-14; })) {
    throw DegenerateDataError("estimate_order: every Q_h is below 1e-14");
  }
  if (std::any_of(q.begin(), q.end(), [](double v) { return std::abs(v) < 1e-14; })) {
    est.infinite = true;
    est.order = std::numeric_limits<double>::infinity();
    est.coefficient = 0.0;
    return est;
  }
  const std::size_t n = h.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(h[i]);
    const double y = std::log(std::abs(q[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double dn = static_cast<double>(n);
  const double cov = sxy - sx * sy / dn;
  const double varx = sxx - sx * sx / dn;
  const double vary = syy - sy * sy / dn;
  est.order = cov / varx;
  est.r2 = vary > 0.0 ? cov * cov / (varx * vary) : 1.0;
  std::size_t finest = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (h[i] < h[finest]) finest = i;
  }
  est.coefficient = q[finest] / std::pow(h[finest], est.order);
  return est;
}

double extrapolated_coefficient(std::span<const double> h, std::span<const double> q, int p) {
  if (h.size() != q.size() || h.size() < 2) throw std::invalid_argument("extrapolated_coefficient: need >= 2 levels");
  const std::size_t n = h.size();
  const double f_fine = q[n - 1] / std::pow(h[n - 1], p);
  const double f_coarse = q[n - 2] / std::pow(h[n - 2], p);
  const double r = h[n - 2] / h[n - 1];
  return (r * f_fine - f_coarse) / (r - 1.0);
}

bool ConsistencyReport::all_match_prediction() const {
  return std::all_of(results.begin(), results.end(), [](const ProbeResult& r) { return r.matches_prediction; });
}

ConsistencyReport run_case(const ConsistencyCase& c, std::span<const SmoothFunction> functions,
                           const PatchConfig& cfg, const ConsistencyTolerance& tol) {
  const auto t0 = std::chrono::steady_clock::now();
  ConsistencyReport report;
  report.case_id = c.id;
  report.expected_consistent = c.expected_consistent;
  const std::vector<double> steps = cfg.steps();
  bool consistent = true;

  for (const Probe& probe : c.probes) {
    std::vector<double> ratios;
    for (const SmoothFunction& u : functions) {
      ProbeResult r;
      r.probe = probe.label;
      r.function = u.name();
      r.h = steps;
      for (double h : steps) r.q.push_back(evaluate_case(c, probe, u, h, cfg));
      r.predicted_order = probe.order;
      r.predicted_coefficient = probe.coefficient(u, cfg.center);
      r.counterpart = counterpart_value(probe, u, cfg.center);
      r.null_prediction = std::abs(r.predicted_coefficient) <= tol.zero;
      try {
        r.fit = estimate_order(r.h, r.q);
        const double leading = r.q.back() / std::pow(r.h.back(), probe.order);
        r.null_measured = r.fit.infinite || r.fit.order >= probe.order + tol.null_margin ||
                          std::abs(leading) <= tol.null_coefficient;
      } catch (const DegenerateDataError&) {
        r.fit.infinite = true;
        r.fit.order = std::numeric_limits<double>::infinity();
        r.null_measured = true;
      }
      r.measured_coefficient = r.null_measured ? 0.0 : extrapolated_coefficient(r.h, r.q, probe.order);
      if (r.null_prediction) {
        r.relative_error = std::abs(r.measured_coefficient);
        r.matches_prediction = r.null_measured;
      } else {
        r.relative_error = std::abs(r.measured_coefficient - r.predicted_coefficient) /
                           std::abs(r.predicted_coefficient);
        r.matches_prediction = !r.null_measured && std::abs(r.fit.order - probe.order) <= tol.order &&
                               r.relative_error <= tol.coefficient;
      }

      // Verdict from measurements only.
      if (std::abs(r.counterpart) <= tol.zero) {
        if (!r.null_measured) consistent = false;
      } else {
        const double ratio = r.measured_coefficient / r.counterpart;
        if (r.null_measured || !(ratio > 0.0)) consistent = false;
        ratios.push_back(ratio);
      }
      report.results.push_back(std::move(r));
    }
    if (!ratios.empty()) {
      const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
      if (*lo > 0.0 && *hi > (1.0 + 2.0 * tol.coefficient) * *lo) consistent = false;
    }
  }
  report.consistent = consistent;
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("CONVEXLAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<ConsistencyReport> run_suite(std::span<const ConsistencyCase> cases,
                                         std::span<const SmoothFunction> functions, const PatchConfig& cfg,
                                         const ConsistencyTolerance& tol, unsigned max_threads) {
  std::vector<ConsistencyReport> reports(cases.size());
  const unsigned threads =
      std::min<unsigned>(max_threads == 0 ? default_thread_count() : max_threads,
                         static_cast<unsigned>(std::max<std::size_t>(cases.size(), 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  const auto worker = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      try {
        reports[i] = run_case(cases[i], functions, cfg, tol);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return reports;
}

}  // namespace convexlab
