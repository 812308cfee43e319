#include "convexlab/qp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/SparseCholesky>

namespace convexlab {

namespace {

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// Problem restricted to the free dofs, constant rows removed.
struct ReducedQP {
  SparseMatrix P;
  Eigen::VectorXd q;
  SparseMatrix A;
  Eigen::VectorXd l;
  std::vector<int> free;      // reduced var -> original var
  std::vector<int> rows;      // reduced row -> original row
  Eigen::VectorXd base;       // full-length vector carrying the pinned values
  bool infeasible = false;    // a row without free entries is violated
};

ReducedQP reduce(const QPProblem& p, double tol) {
  const int n = p.num_vars();
  const int m = p.num_constraints();
  ReducedQP r;
  r.base = Eigen::VectorXd::Zero(n);
  std::vector<int> map(n, -1);
  for (const auto& [i, v] : p.pinned) r.base[i] = v;
  for (int i = 0; i < n; ++i) {
    if (!p.pinned.contains(i)) {
      map[i] = static_cast<int>(r.free.size());
      r.free.push_back(i);
    }
  }
  const int nf = static_cast<int>(r.free.size());

  std::vector<Eigen::Triplet<double>> pt;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(nf);
  for (int i = 0; i < nf; ++i) q[i] = p.q[r.free[i]];
  for (int c = 0; c < p.P.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(p.P, c); it; ++it) {
      const int ri = map[it.row()];
      const int ci = map[it.col()];
      if (ri >= 0 && ci >= 0) {
        pt.emplace_back(ri, ci, it.value());
      } else if (ri >= 0) {
        q[ri] += it.value() * r.base[it.col()];
      }
    }
  }
  r.P.resize(nf, nf);
  r.P.setFromTriplets(pt.begin(), pt.end());
  r.q = std::move(q);

  const Eigen::VectorXd lower = p.lower_bounds();
  std::vector<Eigen::Triplet<double>> at;
  std::vector<double> l;
  for (int row = 0; row < m; ++row) {
    double shift = 0.0;
    bool has_free = false;
    const int reduced_row = static_cast<int>(r.rows.size());
    for (RowMajorSparse::InnerIterator it(p.A, row); it; ++it) {
      const int ci = map[it.col()];
      if (ci >= 0) {
        at.emplace_back(reduced_row, ci, it.value());
        has_free = true;
      } else {
        shift += it.value() * r.base[it.col()];
      }
    }
    if (!has_free) {
      if (shift < lower[row] - tol) r.infeasible = true;
      continue;
    }
    r.rows.push_back(row);
    l.push_back(lower[row] - shift);
  }
  r.A.resize(static_cast<Eigen::Index>(r.rows.size()), nf);
  r.A.setFromTriplets(at.begin(), at.end());
  r.l = Eigen::Map<Eigen::VectorXd>(l.data(), static_cast<Eigen::Index>(l.size()));
  return r;
}

// Ruiz-equilibrated copy: Ps = c D P D, As = E A D, qs = c D q, ls = E l.
struct Scaling {
  Eigen::VectorXd D;
  Eigen::VectorXd E;
  double c = 1.0;
};

Scaling equilibrate(const ReducedQP& r, int passes, SparseMatrix& Ps, SparseMatrix& As, Eigen::VectorXd& qs,
                    Eigen::VectorXd& ls) {
  const int n = static_cast<int>(r.q.size());
  const int m = static_cast<int>(r.l.size());
  Scaling s;
  s.D = Eigen::VectorXd::Ones(n);
  s.E = Eigen::VectorXd::Ones(m);
  Ps = r.P;
  As = r.A;
  const auto safe = [](double v) { return v < 1e-4 ? 1.0 : std::min(v, 1e4); };
  for (int pass = 0; pass < passes; ++pass) {
    Eigen::VectorXd col = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd row = Eigen::VectorXd::Zero(m);
    for (int c = 0; c < Ps.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(Ps, c); it; ++it) col[c] = std::max(col[c], std::abs(it.value()));
    }
    for (int c = 0; c < As.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(As, c); it; ++it) {
        col[c] = std::max(col[c], std::abs(it.value()));
        row[it.row()] = std::max(row[it.row()], std::abs(it.value()));
      }
    }
    Eigen::VectorXd d(n);
    Eigen::VectorXd e(m);
    for (int i = 0; i < n; ++i) d[i] = 1.0 / std::sqrt(safe(col[i]));
    for (int i = 0; i < m; ++i) e[i] = 1.0 / std::sqrt(safe(row[i]));
    Ps = d.asDiagonal() * Ps * d.asDiagonal();
    As = e.asDiagonal() * As * d.asDiagonal();
    s.D = s.D.cwiseProduct(d);
    s.E = s.E.cwiseProduct(e);
  }
  qs = s.D.cwiseProduct(r.q);
  double mean_col = 0.0;
  if (n > 0) {
    Eigen::VectorXd col = Eigen::VectorXd::Zero(n);
    for (int c = 0; c < Ps.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(Ps, c); it; ++it) col[c] = std::max(col[c], std::abs(it.value()));
    }
    mean_col = col.mean();
  }
  if (passes > 0) s.c = 1.0 / safe(std::max(mean_col, inf_norm(qs)));
  Ps *= s.c;
  qs *= s.c;
  ls = s.E.cwiseProduct(r.l);
  return s;
}

struct Tolerances {
  double primal;
  double dual;
};

Tolerances tolerances(const QPSettings& cfg, const ReducedQP& r, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& y, const Eigen::VectorXd& z) {
  const Eigen::VectorXd ax = r.A * x;
  const double pscale = std::max(inf_norm(ax), inf_norm(z));
  const double dscale =
      std::max({inf_norm(r.P * x), inf_norm(r.A.transpose() * y), inf_norm(r.q)});
  return {cfg.eps_abs + cfg.eps_rel * pscale, cfg.eps_abs + cfg.eps_rel * dscale};
}

struct Candidate {
  Eigen::VectorXd x;       // reduced, unscaled
  Eigen::VectorXd lambda;  // >= 0
  double primal = 0.0;
  double dual = 0.0;
  double comp = 0.0;
  double min_lambda = 0.0;
};

Candidate evaluate(const ReducedQP& r, Eigen::VectorXd x, Eigen::VectorXd lambda) {
  Candidate c;
  const Eigen::VectorXd slack = r.A * x - r.l;
  c.min_lambda = lambda.size() ? lambda.minCoeff() : 0.0;
  lambda = lambda.cwiseMax(0.0);
  c.primal = slack.size() ? std::max(0.0, -slack.minCoeff()) : 0.0;
  c.dual = inf_norm(r.P * x + r.q - r.A.transpose() * lambda);
  c.comp = std::abs(lambda.dot(slack));
  c.x = std::move(x);
  c.lambda = std::move(lambda);
  return c;
}

// Equality-constrained solve on the active rows in the scaled space, with
// regularisation delta removed by iterative refinement.
bool polish(const SparseMatrix& Ps, const Eigen::VectorXd& qs, const SparseMatrix& As, const Eigen::VectorXd& ls,
            const std::vector<int>& active, Eigen::VectorXd& xs, Eigen::VectorXd& ys) {
  const int n = static_cast<int>(qs.size());
  const int k = static_cast<int>(active.size());
  constexpr double kDelta = 1e-7;
  RowMajorSparse Arow = As;
  std::vector<Eigen::Triplet<double>> t;
  for (int c = 0; c < Ps.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(Ps, c); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  }
  for (int a = 0; a < k; ++a) {
    for (RowMajorSparse::InnerIterator it(Arow, active[a]); it; ++it) {
      t.emplace_back(n + a, it.col(), it.value());
      t.emplace_back(it.col(), n + a, it.value());
    }
  }
  SparseMatrix K0(n + k, n + k);
  K0.setFromTriplets(t.begin(), t.end());
  for (int i = 0; i < n; ++i) t.emplace_back(i, i, kDelta);
  for (int a = 0; a < k; ++a) t.emplace_back(n + a, n + a, -kDelta);
  SparseMatrix Kd(n + k, n + k);
  Kd.setFromTriplets(t.begin(), t.end());

  Eigen::SimplicialLDLT<SparseMatrix> ldlt(Kd);
  if (ldlt.info() != Eigen::Success) return false;
  Eigen::VectorXd rhs(n + k);
  rhs.head(n) = -qs;
  for (int a = 0; a < k; ++a) rhs[n + a] = ls[active[a]];
  Eigen::VectorXd sol = ldlt.solve(rhs);
  for (int it = 0; it < 25; ++it) {
    const Eigen::VectorXd res = rhs - K0 * sol;
    if (inf_norm(res) <= 1e-14 * std::max(1.0, inf_norm(rhs))) break;
    sol += ldlt.solve(res);
  }
  if (!sol.allFinite()) return false;
  xs = sol.head(n);
  ys = Eigen::VectorXd::Zero(As.rows());
  for (int a = 0; a < k; ++a) ys[active[a]] = sol[n + a];
  return true;
}

}  // namespace

QPProblem::QPProblem(SparseMatrix P_, Eigen::VectorXd q_, const LinearConstraintSet& constraints,
                     std::map<int, double> pinned_)
    : P(std::move(P_)), q(std::move(q_)), A(constraints.A), pinned(std::move(pinned_)) {}

Eigen::VectorXd QPProblem::lower_bounds() const {
  return lower.size() == 0 ? Eigen::VectorXd::Zero(A.rows()) : lower;
}

double QPProblem::objective(const Eigen::VectorXd& u) const { return 0.5 * u.dot(P * u) + q.dot(u); }

void QPProblem::validate() const {
  const int n = num_vars();
  if (P.rows() != n || P.cols() != n) throw std::invalid_argument("QP: P must be n x n");
  if (A.cols() != n && A.rows() > 0) throw std::invalid_argument("QP: A must have n columns");
  if (lower.size() != 0 && lower.size() != A.rows()) throw std::invalid_argument("QP: lower has wrong size");
  for (const auto& [i, v] : pinned) {
    if (i < 0 || i >= n) throw std::invalid_argument("QP: pinned index out of range");
    if (!std::isfinite(v)) throw std::invalid_argument("QP: pinned value is not finite");
  }
  const SparseMatrix diff = SparseMatrix(P.transpose()) - P;
  double scale = 0.0;
  for (int c = 0; c < P.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(P, c); it; ++it) scale = std::max(scale, std::abs(it.value()));
  }
  for (int c = 0; c < diff.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(diff, c); it; ++it) {
      if (std::abs(it.value()) > 1e-12 * std::max(1.0, scale)) throw std::invalid_argument("QP: P is not symmetric");
    }
  }
}

const char* to_string(QPStatus status) {
  switch (status) {
    case QPStatus::Optimal: return "optimal";
    case QPStatus::MaxIter: return "max-iter";
    case QPStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

KKTResiduals kkt_residuals(const QPProblem& p, const Eigen::VectorXd& u, const Eigen::VectorXd& lambda) {
  KKTResiduals r;
  const Eigen::VectorXd slack = p.A * u - p.lower_bounds();
  r.primal = slack.size() ? std::max(0.0, -slack.minCoeff()) : 0.0;
  r.min_multiplier = lambda.size() ? lambda.minCoeff() : 0.0;
  r.complementarity = std::abs(lambda.dot(slack));
  Eigen::VectorXd grad = p.P * u + p.q;
  if (p.A.rows() > 0) grad -= p.A.transpose() * lambda;
  for (const auto& [i, v] : p.pinned) grad[i] = 0.0;
  r.dual = inf_norm(grad);
  return r;
}

QPSolution solve_qp(const QPProblem& problem, const QPSettings& cfg) {
  problem.validate();
  ReducedQP r = reduce(problem, cfg.eps_abs);
  const int n = static_cast<int>(r.free.size());
  const int m = static_cast<int>(r.rows.size());

  QPSolution out;
  const auto finish = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& lambda_reduced) {
    out.u = r.base;
    for (int i = 0; i < n; ++i) out.u[r.free[i]] = x[i];
    out.lambda = Eigen::VectorXd::Zero(problem.num_constraints());
    for (int i = 0; i < m; ++i) out.lambda[r.rows[i]] = std::max(0.0, lambda_reduced[i]);
    out.objective = problem.objective(out.u);
    const KKTResiduals k = kkt_residuals(problem, out.u, out.lambda);
    out.primal_residual = k.primal;
    out.dual_residual = k.dual;
    out.complementarity = k.complementarity;
    return out;
  };

  if (r.infeasible) {
    out.status = QPStatus::Infeasible;
    return finish(Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(m));
  }
  if (n == 0) {
    out.status = QPStatus::Optimal;
    return finish(Eigen::VectorXd::Zero(0), Eigen::VectorXd::Zero(m));
  }

  SparseMatrix Ps;
  SparseMatrix As;
  Eigen::VectorXd qs;
  Eigen::VectorXd ls;
  const Scaling sc = equilibrate(r, cfg.scaling_iters, Ps, As, qs, ls);
  const SparseMatrix AsT = As.transpose();
  const SparseMatrix AtA = AsT * As;
  SparseMatrix I(n, n);
  I.setIdentity();

  const auto unscale_x = [&](const Eigen::VectorXd& xs) { return Eigen::VectorXd(sc.D.cwiseProduct(xs)); };
  const auto unscale_lambda = [&](const Eigen::VectorXd& ys) {
    return Eigen::VectorXd(-sc.E.cwiseProduct(ys) / sc.c);
  };

  // Try the active-set solve; accept when the unscaled KKT system holds.
  const auto try_polish = [&](const std::vector<int>& active, const Eigen::VectorXd& ys_hint) -> bool {
    (void)ys_hint;
    Eigen::VectorXd xp;
    Eigen::VectorXd yp;
    if (!polish(Ps, qs, As, ls, active, xp, yp)) return false;
    const Candidate c = evaluate(r, unscale_x(xp), unscale_lambda(yp));
    const Eigen::VectorXd y_unscaled = -c.lambda;
    const Tolerances tol = tolerances(cfg, r, c.x, y_unscaled, r.A * c.x);
    if (c.primal <= tol.primal && c.dual <= tol.dual && c.min_lambda >= -tol.dual && c.comp <= tol.dual) {
      out.polished = true;
      out.status = QPStatus::Optimal;
      finish(c.x, c.lambda);
      return true;
    }
    return false;
  };

  if (m == 0 && cfg.polish && try_polish({}, Eigen::VectorXd())) return out;

  double rho = cfg.rho;
  Eigen::SimplicialLDLT<SparseMatrix> solver;
  const auto factor = [&] {
    const SparseMatrix K = Ps + cfg.sigma * I + rho * AtA;
    solver.compute(K);
    if (solver.info() != Eigen::Success) throw std::runtime_error("QP: factorisation failed");
  };
  factor();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd y_prev = y;
  std::vector<int> last_active;
  std::vector<int> last_polished;
  bool polished_once = false;

  const auto active_set = [&] {
    std::vector<int> act;
    for (int i = 0; i < m; ++i) {
      if (z[i] - ls[i] < -y[i]) act.push_back(i);
    }
    return act;
  };

  for (int k = 1; k <= cfg.max_iter; ++k) {
    const bool check = k % cfg.check_every == 0 || k == cfg.max_iter;
    if (check) y_prev = y;

    const Eigen::VectorXd rhs = cfg.sigma * x - qs + AsT * (rho * z - y);
    const Eigen::VectorXd x_tilde = solver.solve(rhs);
    const Eigen::VectorXd z_tilde = As * x_tilde;
    x = cfg.alpha * x_tilde + (1.0 - cfg.alpha) * x;
    const Eigen::VectorXd z_relaxed = cfg.alpha * z_tilde + (1.0 - cfg.alpha) * z;
    const Eigen::VectorXd z_new = (z_relaxed + y / rho).cwiseMax(ls);
    y += rho * (z_relaxed - z_new);
    z = z_new;
    out.iterations = k;
    if (!check) continue;

    // Unscaled residuals.
    const Eigen::VectorXd xu = unscale_x(x);
    const Eigen::VectorXd yu = sc.E.cwiseProduct(y) / sc.c;
    const Eigen::VectorXd zu = z.cwiseQuotient(sc.E);
    const double r_prim = inf_norm(r.A * xu - zu);
    const double r_dual = inf_norm(r.P * xu + r.q + r.A.transpose() * yu);
    const Tolerances tol = tolerances(cfg, r, xu, yu, zu);

    const std::vector<int> active = active_set();
    if (r_prim <= tol.primal && r_dual <= tol.dual) {
      if (cfg.polish && active != last_polished && try_polish(active, y)) return out;
      const Candidate c = evaluate(r, xu, -yu);
      out.status = QPStatus::Optimal;
      return finish(c.x, c.lambda);
    }

    // Primal infeasibility certificate from the multiplier increment.
    const Eigen::VectorXd dy = y - y_prev;
    const double ndy = inf_norm(dy);
    if (ndy > 0.0) {
      const double eps = cfg.eps_infeasible * ndy;
      const double at_dy = inf_norm(AsT * dy);
      const double pos = dy.maxCoeff();
      const double support = ls.dot(dy.cwiseMin(0.0));
      if (at_dy <= eps && pos <= eps && support < -eps) {
        out.status = QPStatus::Infeasible;
        const Candidate c = evaluate(r, xu, -yu);
        return finish(c.x, c.lambda);
      }
    }

    if (cfg.polish && active == last_active && (!polished_once || active != last_polished)) {
      polished_once = true;
      last_polished = active;
      if (try_polish(active, y)) return out;
    }
    last_active = active;

    if (cfg.adaptive_rho && m > 0) {
      const double pnorm = std::max(inf_norm(As * x), inf_norm(z));
      const double dnorm = std::max({inf_norm(Ps * x), inf_norm(AsT * y), inf_norm(qs)});
      const double rp = inf_norm(As * x - z) / std::max(pnorm, 1e-30);
      const double rd = inf_norm(Ps * x + qs + AsT * y) / std::max(dnorm, 1e-30);
      if (rp > 0.0 && rd > 0.0) {
        const double new_rho = std::clamp(rho * std::sqrt(rp / rd), 1e-6, 1e6);
        if (new_rho > 5.0 * rho || new_rho < 0.2 * rho) {
          rho = new_rho;
          factor();
        }
      }
    }
  }

  out.status = QPStatus::MaxIter;
  const Eigen::VectorXd xu = unscale_x(x);
  const Eigen::VectorXd lu = unscale_lambda(y);
  const Candidate c = evaluate(r, xu, lu);
  return finish(c.x, c.lambda);
}

QPSolution solve_projection_h10(const Mesh& mesh, int degree, const LinearConstraintSet& constraints,
                                const ScalarField& f, const ScalarField& g, const QPSettings& settings) {
  std::map<int, double> pinned;
  for (int d : boundary_dofs(mesh, degree)) pinned[d] = g(dof_position(mesh, degree, d));
  QPProblem p(assemble_stiffness(mesh, degree), assemble_load(mesh, degree, f), constraints, std::move(pinned));
  if (constraints.rows() == 0) p.A.resize(0, p.num_vars());
  return solve_qp(p, settings);
}

L2Distance min_l2_distance(const Mesh& mesh, const ScalarField& target, const LinearConstraintSet& constraints,
                           const QPSettings& settings) {
  const SparseMatrix M = assemble_mass(mesh, 1);
  const FEFunction interp = interpolate(mesh, 1, target);
  QPProblem p(M, -(M * interp.dofs()), constraints);
  if (constraints.rows() == 0) p.A.resize(0, p.num_vars());
  L2Distance out;
  out.solution = solve_qp(p, settings);
  out.distance = l2_error(FEFunction(mesh, 1, out.solution.u), target);
  return out;
}

L2Distance min_l2_distance_convex(const Mesh& mesh, const ScalarField& target, const QPSettings& settings) {
  return min_l2_distance(mesh, target, conformal_convexity_constraints(mesh, 1), settings);
}

}  // namespace convexlab
