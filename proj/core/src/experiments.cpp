#include "convexlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>

namespace convexlab {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void fill_solution(StudyLevel& level, const QPSolution& s) {
  level.objective = s.objective;
  level.status = s.status;
  level.iterations = s.iterations;
  level.primal_residual = s.primal_residual;
  level.dual_residual = s.dual_residual;
  level.complementarity = s.complementarity;
  level.rows = static_cast<int>(s.lambda.size());
  level.active_rows = static_cast<int>((s.lambda.array() > kActiveMultiplier).count());
}

void fill_orders(StudyResult& r) {
  for (std::size_t i = 1; i < r.levels.size(); ++i) {
    const StudyLevel& a = r.levels[i - 1];
    StudyLevel& b = r.levels[i];
    b.order = std::log(a.error / b.error) / std::log(a.h / b.h);
  }
}

void check_levels(const std::vector<int>& levels) {
  if (levels.empty()) throw std::invalid_argument("no mesh levels given");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 1) throw std::invalid_argument("mesh levels must be positive");
    if (i > 0 && levels[i] <= levels[i - 1]) throw std::invalid_argument("mesh levels must increase strictly");
  }
}

const char* status_name(QPStatus s) { return to_string(s); }

}  // namespace

ConstraintMode parse_constraint_mode(std::string_view name) {
  if (name == "conformal") return ConstraintMode::Conformal;
  if (name == "weak-subharmonic") return ConstraintMode::WeakSubharmonic;
  if (name == "weak-convex") return ConstraintMode::WeakConvex;
  if (name == "monopolist") return ConstraintMode::Monopolist;
  if (name == "none") return ConstraintMode::None;
  throw std::invalid_argument("unknown constraint mode '" + std::string(name) + "'");
}

const char* to_string(ConstraintMode mode) {
  switch (mode) {
    case ConstraintMode::Conformal: return "conformal";
    case ConstraintMode::WeakSubharmonic: return "weak-subharmonic";
    case ConstraintMode::WeakConvex: return "weak-convex";
    case ConstraintMode::Monopolist: return "monopolist";
    case ConstraintMode::None: return "none";
  }
  return "unknown";
}

LinearConstraintSet build_constraints(const Mesh& mesh, int degree, ConstraintMode mode) {
  const WeakTestKind tests = degree == 1 ? WeakTestKind::Vertices : WeakTestKind::Midpoints;
  switch (mode) {
    case ConstraintMode::Conformal: return conformal_convexity_constraints(mesh, degree);
    case ConstraintMode::WeakSubharmonic: return weak_subharmonicity_constraints(mesh, degree, tests);
    case ConstraintMode::WeakConvex: {
      std::vector<Eigen::Triplet<double>> trips;
      LinearConstraintSet set;
      int row = 0;
      for (int test : admissible_tests(mesh, degree, tests)) {
        const WeakHessianStencil st = weak_hessian_stencil(mesh, degree, test);
        for (int entry : {0, 3}) {
          std::map<int, double> merged;
          for (const auto& [dof, c] : st.entries[entry]) merged[dof] += c;
          for (const auto& [dof, c] : merged) {
            if (c != 0.0) trips.emplace_back(row, dof, c);
          }
          set.labels.push_back({entry == 0 ? "hxx" : "hyy", test});
          ++row;
        }
      }
      set.A.resize(row, num_dofs(mesh, degree));
      set.A.setFromTriplets(trips.begin(), trips.end());
      set.degree = degree;
      return set;
    }
    case ConstraintMode::Monopolist:
      if (degree != 1) throw std::invalid_argument("monopolist constraints need P1");
      return monopolist_constraints(mesh);
    case ConstraintMode::None: return LinearConstraintSet::none(num_dofs(mesh, degree), degree);
  }
  throw std::invalid_argument("unknown constraint mode");
}

std::vector<double> StudyResult::steps() const {
  std::vector<double> h;
  for (const StudyLevel& l : levels) h.push_back(l.h);
  return h;
}

std::vector<double> StudyResult::errors() const {
  std::vector<double> e;
  for (const StudyLevel& l : levels) e.push_back(l.error);
  return e;
}

bool StudyResult::all_optimal() const {
  return std::all_of(levels.begin(), levels.end(), [](const StudyLevel& l) { return l.status == QPStatus::Optimal; });
}

CsvTable StudyResult::table() const {
  CsvTable t({"n", "h", metric, "order", "objective", "min_weak_det", "status", "iterations", "primal_residual",
              "dual_residual", "complementarity", "rows", "active_rows"});
  for (const StudyLevel& l : levels) {
    t.add_row({std::to_string(l.n), format_double(l.h), format_double(l.error), format_double(l.order),
               format_double(l.objective), format_double(l.min_weak_det), status_name(l.status),
               std::to_string(l.iterations), format_double(l.primal_residual), format_double(l.dual_residual),
               format_double(l.complementarity), std::to_string(l.rows), std::to_string(l.active_rows)});
  }
  return t;
}

StudyResult subharmonic_study(const SubharmonicConfig& cfg) {
  check_levels(cfg.levels);
  StudyResult result{"subharmonic", "l2_error", {}};
  const SmoothFunction& u = cfg.target;
  const ScalarField f = [u](const Point& p) { return u.laplacian(p); };
  const ScalarField g = u.field();
  for (int n : cfg.levels) {
    const auto t0 = std::chrono::steady_clock::now();
    const Mesh mesh = build_structured_mesh(cfg.kind, n, cfg.domain, cfg.seed);
    const LinearConstraintSet rows = build_constraints(mesh, cfg.degree, cfg.mode);
    const QPSolution sol = solve_projection_h10(mesh, cfg.degree, rows, f, g, cfg.qp);
    StudyLevel level;
    level.n = n;
    level.h = mesh.h();
    const FEFunction uh(mesh, cfg.degree, sol.u);
    level.error = l2_error(uh, g);
    fill_solution(level, sol);
    if (cfg.mode == ConstraintMode::WeakConvex) {
      const WeakTestKind tests = cfg.degree == 1 ? WeakTestKind::Vertices : WeakTestKind::Midpoints;
      double worst = INFINITY;
      for (const WeakConvexityResidual& r : weak_convexity_residuals(uh, tests)) worst = std::min(worst, r.det);
      level.min_weak_det = worst;
    }
    level.seconds = seconds_since(t0);
    result.levels.push_back(level);
  }
  fill_orders(result);
  return result;
}

CsvTable NonconvergenceResult::activity_table() const {
  CsvTable t({"edge", "mid_x", "mid_y", "normal_x", "normal_y", "jump", "multiplier", "active"});
  for (const EdgeActivity& e : activity) {
    t.add_row({std::to_string(e.edge), format_double(e.midpoint.x()), format_double(e.midpoint.y()),
               format_double(e.normal.x()), format_double(e.normal.y()), format_double(e.jump),
               format_double(e.multiplier), e.active ? "1" : "0"});
  }
  return t;
}

NonconvergenceResult nonconvergence_study(const NonconvergenceConfig& cfg) {
  check_levels(cfg.levels);
  NonconvergenceResult out;
  out.study.name = "nonconvergence";
  out.study.metric = "distance";
  const Point anchor(cfg.domain.x0, cfg.domain.y0);
  ScalarField target;
  if (cfg.target == NonconvergenceTarget::Lemma2) {
    PMCertificate dirs;
    if (cfg.directions) {
      dirs = *cfg.directions;
    } else {
      const Mesh coarse = build_structured_mesh(cfg.kind, cfg.levels.front(), cfg.domain, cfg.seed);
      const auto cert = pm_find_vectors(normal_direction_set(coarse));
      if (!cert) throw std::runtime_error("mesh has no (PM) certificate");
      dirs = *cert;
    }
    out.quadratic = lemma2_matrix(dirs.a, dirs.b, cfg.eta, anchor);
    target = out.quadratic.field();
  } else {
    target = [anchor](const Point& x) { return 0.5 * (x.squaredNorm() - anchor.squaredNorm()); };
  }

  for (std::size_t k = 0; k < cfg.levels.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const Mesh mesh = build_structured_mesh(cfg.kind, cfg.levels[k], cfg.domain, cfg.seed);
    const LinearConstraintSet rows = cfg.constrained ? conformal_convexity_constraints(mesh, 1)
                                                     : LinearConstraintSet::none(mesh.num_vertices());
    const L2Distance d = min_l2_distance(mesh, target, rows, cfg.qp);
    StudyLevel level;
    level.n = cfg.levels[k];
    level.h = mesh.h();
    level.error = d.distance;
    fill_solution(level, d.solution);
    level.seconds = seconds_since(t0);
    out.study.levels.push_back(level);

    if (k + 1 == cfg.levels.size() && cfg.constrained) {
      const Eigen::VectorXd jumps = rows.evaluate(d.solution.u);
      const auto edges = interior_edges(mesh);
      for (std::size_t i = 0; i < edges.size(); ++i) {
        EdgeActivity a;
        a.edge = edges[i].edge;
        a.midpoint = edges[i].midpoint_of(mesh.vertices());
        a.normal = edges[i].normal;
        a.jump = jumps[static_cast<Eigen::Index>(i)];
        a.multiplier = d.solution.lambda[static_cast<Eigen::Index>(i)];
        a.active = a.multiplier > kActiveMultiplier;
        out.activity.push_back(a);
      }
    }
  }
  fill_orders(out.study);
  return out;
}

MonopolistMatrix parse_monopolist_matrix(std::string_view name) {
  if (name == "identity") return MonopolistMatrix::Identity;
  if (name == "lemma2") return MonopolistMatrix::Lemma2;
  throw std::invalid_argument("unknown monopolist matrix '" + std::string(name) + "'");
}

AdversarialQuadratic monopolist_exact(const MonopolistConfig& cfg) {
  const Point anchor(cfg.domain.x0, cfg.domain.y0);
  if (cfg.matrix == MonopolistMatrix::Lemma2) return lemma2_matrix(Point(-1, 0), Point(0, 1), cfg.eta, anchor);
  AdversarialQuadratic q;
  q.C.setIdentity();
  q.C_inv.setIdentity();
  q.a = Point::UnitX();
  q.b = Point::UnitY();
  q.eta = 0.0;
  q.anchor = anchor;
  return q;
}

QPProblem monopolist_problem(const Mesh& mesh, const MonopolistConfig& cfg) {
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  const AdversarialQuadratic exact = monopolist_exact(cfg);
  const SparseMatrix P = assemble_stiffness(mesh, 1, exact.C);
  Eigen::VectorXd q = -assemble_flux_load(mesh, 1, [](const Point& x) { return x; });
  if (cfg.alpha < 1.0) q += (1.0 - cfg.alpha) * assemble_load(mesh, 1, [](const Point&) { return 1.0; });
  std::map<int, double> pinned;
  if (cfg.alpha == 1.0) {
    const int corner = mesh.find_vertex(Point(cfg.domain.x0, cfg.domain.y0));
    if (corner < 0) throw std::runtime_error("monopolist: mesh has no lower-left corner vertex");
    pinned[corner] = 0.0;
  }
  return QPProblem(P, q, build_constraints(mesh, 1, cfg.mode), std::move(pinned));
}

double monopolist_objective(const Mesh& mesh, const MonopolistConfig& cfg, const Eigen::VectorXd& u) {
  return monopolist_problem(mesh, cfg).objective(u);
}

StudyResult monopolist_study(const MonopolistConfig& cfg) {
  check_levels(cfg.levels);
  StudyResult result{"monopolist", "l2_error", {}};
  const AdversarialQuadratic exact = monopolist_exact(cfg);
  for (int n : cfg.levels) {
    const auto t0 = std::chrono::steady_clock::now();
    const Mesh mesh = build_structured_mesh(cfg.kind, n, cfg.domain, cfg.seed);
    QPProblem p = monopolist_problem(mesh, cfg);
    if (p.A.rows() == 0) p.A.resize(0, p.num_vars());
    const QPSolution sol = solve_qp(p, cfg.qp);
    StudyLevel level;
    level.n = n;
    level.h = mesh.h();
    level.error = cfg.alpha == 1.0 ? l2_error(FEFunction(mesh, 1, sol.u), exact.field()) : kNaN;
    fill_solution(level, sol);
    level.seconds = seconds_since(t0);
    result.levels.push_back(level);
  }
  fill_orders(result);
  return result;
}

PMAudit pm_audit(const Mesh& mesh, const std::optional<Rect>& region) {
  PMAudit audit;
  audit.normals = region ? normal_direction_set(mesh, *region) : normal_direction_set(mesh);
  audit.certificate = pm_find_vectors(audit.normals);
  if (audit.certificate) audit.check = pm_verify(audit.normals, audit.certificate->a, audit.certificate->b);
  return audit;
}

CsvTable consistency_table(const std::vector<ConsistencyReport>& reports) {
  CsvTable t({"case", "probe", "function", "h", "q", "predicted_order", "measured_order", "r2",
              "predicted_coefficient", "measured_coefficient", "relative_error", "null_prediction", "null_measured",
              "match"});
  for (const ConsistencyReport& r : reports) {
    for (const ProbeResult& p : r.results) {
      for (std::size_t i = 0; i < p.h.size(); ++i) {
        t.add_row({r.case_id, p.probe, p.function, format_double(p.h[i]), format_double(p.q[i]),
                   std::to_string(p.predicted_order), format_double(p.fit.order), format_double(p.fit.r2),
                   format_double(p.predicted_coefficient), format_double(p.measured_coefficient),
                   format_double(p.relative_error), p.null_prediction ? "1" : "0", p.null_measured ? "1" : "0",
                   p.matches_prediction ? "1" : "0"});
      }
    }
  }
  return t;
}

CsvTable consistency_summary(const std::vector<ConsistencyReport>& reports) {
  CsvTable t({"case", "expected", "measured", "verdict_match", "predictions_match"});
  for (const ConsistencyReport& r : reports) {
    t.add_row({r.case_id, r.expected_consistent ? "consistent" : "inconsistent",
               r.consistent ? "consistent" : "inconsistent", r.verdict_matches() ? "1" : "0",
               r.all_match_prediction() ? "1" : "0"});
  }
  return t;
}

}  // namespace convexlab
