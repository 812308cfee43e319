// convexlab: command-line front end for the experiments.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "convexlab/experiments.hpp"
#include "convexlab/sparse_io.hpp"

namespace fs = std::filesystem;
using namespace convexlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitAssertion = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string kind = "mesh1";
  int n = 8;
  std::vector<int> levels;
  int degree = 1;
  std::string constraints;
  double alpha = 1.0;
  double eta = 1.0;
  std::uint64_t seed = kDefaultMeshSeed;
  std::string out = ".";
  std::string case_id;
  std::string region;
  std::string mesh_file;
  std::string target;
  std::string matrix = "identity";
  bool auto_directions = false;
  double scale = 0.125;
  double eps = 1e-8;
  int max_iter = 200000;
};

MeshKind kind_of(const Options& o) {
  try {
    return parse_mesh_kind(o.kind);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

ConstraintMode mode_of(const std::string& name) {
  try {
    return parse_constraint_mode(name);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

std::vector<int> levels_of(const Options& o, std::vector<int> fallback) {
  std::vector<int> levels = o.levels.empty() ? std::move(fallback) : o.levels;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 1 || (i > 0 && levels[i] <= levels[i - 1])) {
      throw UsageError("--n-levels must be positive and strictly increasing");
    }
  }
  return levels;
}

QPSettings qp_of(const Options& o) {
  QPSettings s;
  s.eps_abs = o.eps;
  s.eps_rel = o.eps;
  s.max_iter = o.max_iter;
  return s;
}

fs::path out_dir(const Options& o) {
  fs::path dir(o.out);
  fs::create_directories(dir);
  return dir;
}

void write_study(const StudyResult& r, const fs::path& dir, const std::string& title) {
  const CsvTable table = r.table();
  const fs::path csv = dir / (r.name + ".csv");
  table.save(csv.string());
  // The plot is rebuilt from the CSV just written.
  const CsvTable back = CsvTable::load(csv.string());
  PlotSeries s{r.metric, back.numeric_column("h"), back.numeric_column(r.metric)};
  save_text((dir / (r.name + ".svg")).string(), loglog_svg(title, "h", r.metric, {s}));
}

void print_study(const StudyResult& r) {
  std::printf("%6s %12s %14s %8s %10s %8s\n", "n", "h", r.metric.c_str(), "order", "status", "active");
  for (const StudyLevel& l : r.levels) {
    std::printf("%6d %12.6g %14.6e %8.3f %10s %8d\n", l.n, l.h, l.error, l.order, to_string(l.status), l.active_rows);
  }
}

int check_solved(const StudyResult& r) {
  for (const StudyLevel& l : r.levels) {
    if (l.status != QPStatus::Optimal) {
      std::fprintf(stderr, "error: solver returned status %s at n = %d\n", to_string(l.status), l.n);
      return kExitRuntime;
    }
  }
  return kExitOk;
}

std::string point_text(const Point& p) {
  return "(" + format_double(p.x()) + ", " + format_double(p.y()) + ")";
}

int cmd_mesh(const Options& o) {
  const MeshKind kind = kind_of(o);
  const Mesh mesh = build_structured_mesh(kind, o.n, Rect::unit(), o.seed);
  const fs::path dir = out_dir(o);
  const fs::path path = dir / ("mesh_" + to_string(kind) + "_" + std::to_string(o.n) + ".txt");
  save_mesh(path.string(), mesh);
  std::printf("%s: %d vertices, %d triangles, %d edges, h = %g\n", path.string().c_str(), mesh.num_vertices(),
              mesh.num_triangles(), mesh.num_edges(), mesh.h());
  if (!o.constraints.empty()) {
    const ConstraintMode mode = mode_of(o.constraints);
    const LinearConstraintSet set = build_constraints(mesh, o.degree, mode);
    const fs::path cpath = dir / ("constraints_" + std::string(to_string(mode)) + "_" + to_string(kind) + "_" +
                                  std::to_string(o.n) + ".txt");
    save_constraints(cpath.string(), set);
    std::printf("%s: %d rows, %d columns\n", cpath.string().c_str(), set.rows(), set.cols());
  }
  return kExitOk;
}

int cmd_pm_audit(const Options& o) {
  const Mesh mesh = o.mesh_file.empty() ? build_structured_mesh(kind_of(o), o.n, Rect::unit(), o.seed)
                                        : load_mesh(o.mesh_file);
  std::optional<Rect> region;
  if (!o.region.empty()) {
    try {
      region = parse_rect(o.region);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }
  const PMAudit audit = pm_audit(mesh, region);
  std::printf("normal directions: %zu\n", audit.normals.size());
  for (const Point& n : audit.normals) std::printf("  %s\n", point_text(n).c_str());
  if (!audit.certificate) {
    std::printf("no certificate found\n");
    return kExitAssertion;
  }
  std::printf("a = %s\nb = %s\nworst product = %s\n", point_text(audit.certificate->a).c_str(),
              point_text(audit.certificate->b).c_str(), format_double(audit.check.worst).c_str());
  return audit.check.holds ? kExitOk : kExitAssertion;
}

int cmd_consistency(const Options& o) {
  std::vector<ConsistencyCase> cases;
  if (o.case_id.empty()) {
    cases = tabulated_cases();
  } else {
    try {
      cases.push_back(find_case(o.case_id));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  PatchConfig patch;
  patch.scale = o.scale;
  const auto functions = standard_test_functions();
  const auto reports = run_suite(cases, functions, patch);
  const fs::path dir = out_dir(o);
  consistency_table(reports).save((dir / "consistency.csv").string());
  consistency_summary(reports).save((dir / "consistency_summary.csv").string());
  bool ok = true;
  std::printf("%-8s %-13s %-13s %-8s %s\n", "case", "expected", "measured", "verdict", "predictions");
  for (const ConsistencyReport& r : reports) {
    std::printf("%-8s %-13s %-13s %-8s %s\n", r.case_id.c_str(), r.expected_consistent ? "consistent" : "inconsistent",
                r.consistent ? "consistent" : "inconsistent", r.verdict_matches() ? "match" : "MISMATCH",
                r.all_match_prediction() ? "match" : "MISMATCH");
    ok = ok && r.verdict_matches() && r.all_match_prediction();
  }
  return ok ? kExitOk : kExitAssertion;
}

SmoothFunction subharmonic_target(const std::string& name) {
  if (name.empty() || name == "quadratic") return SubharmonicConfig{}.target;
  if (name == "paraboloid") return polynomial("(x^2+y^2)/2", {{0.5, 2, 0}, {0.5, 0, 2}});
  if (name == "superharmonic") return polynomial("-(x^2+y^2)/2", {{-0.5, 2, 0}, {-0.5, 0, 2}});
  if (name == "affine") return polynomial("1+2x-y", {{1.0, 0, 0}, {2.0, 1, 0}, {-1.0, 0, 1}});
  if (name == "sincos") return sin_x_cos_y();
  throw UsageError("unknown target '" + name + "'");
}

int cmd_subharmonic(const Options& o) {
  SubharmonicConfig cfg;
  cfg.kind = kind_of(o);
  cfg.levels = levels_of(o, cfg.levels);
  cfg.degree = o.degree;
  if (!o.constraints.empty()) cfg.mode = mode_of(o.constraints);
  cfg.seed = o.seed;
  cfg.target = subharmonic_target(o.target);
  cfg.qp = qp_of(o);
  const StudyResult r = subharmonic_study(cfg);
  write_study(r, out_dir(o), "subharmonic projection, " + cfg.target.name());
  print_study(r);
  return check_solved(r);
}

int cmd_nonconvergence(const Options& o) {
  NonconvergenceConfig cfg;
  cfg.kind = kind_of(o);
  cfg.levels = levels_of(o, cfg.levels);
  cfg.eta = o.eta;
  cfg.seed = o.seed;
  cfg.qp = qp_of(o);
  if (o.auto_directions) cfg.directions.reset();
  if (o.target == "paraboloid") {
    cfg.target = NonconvergenceTarget::Paraboloid;
  } else if (!o.target.empty() && o.target != "lemma2") {
    throw UsageError("unknown target '" + o.target + "'");
  }
  if (!o.constraints.empty()) {
    const ConstraintMode mode = mode_of(o.constraints);
    if (mode != ConstraintMode::Conformal && mode != ConstraintMode::None) {
      throw UsageError("nonconvergence supports --constraints conformal or none");
    }
    cfg.constrained = mode == ConstraintMode::Conformal;
  }
  const NonconvergenceResult r = nonconvergence_study(cfg);
  const fs::path dir = out_dir(o);
  write_study(r.study, dir, "min L2 distance to conformal convex P1");
  if (cfg.constrained) r.activity_table().save((dir / "nonconvergence_active_edges.csv").string());
  print_study(r.study);
  if (const int code = check_solved(r.study); code != kExitOk) return code;
  if (cfg.constrained && cfg.target == NonconvergenceTarget::Lemma2) {
    const double first = r.study.levels.front().error;
    for (const StudyLevel& l : r.study.levels) {
      if (l.error < 0.5 * first) {
        std::fprintf(stderr, "plateau violated: distance %g at n = %d is below half of %g\n", l.error, l.n, first);
        return kExitAssertion;
      }
    }
    std::printf("plateau: every distance >= 0.5 x %s\n", format_double(first).c_str());
  }
  return kExitOk;
}

int cmd_monopolist(const Options& o) {
  MonopolistConfig cfg;
  cfg.kind = kind_of(o);
  cfg.levels = levels_of(o, cfg.levels);
  cfg.alpha = o.alpha;
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw UsageError("--alpha must lie in [0, 1]");
  cfg.eta = o.eta;
  cfg.seed = o.seed;
  cfg.qp = qp_of(o);
  try {
    cfg.matrix = parse_monopolist_matrix(o.matrix);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (!o.constraints.empty()) cfg.mode = mode_of(o.constraints);
  const StudyResult r = monopolist_study(cfg);
  const fs::path dir = out_dir(o);
  if (cfg.alpha == 1.0) {
    write_study(r, dir, "monopolist, alpha = 1");
  } else {
    r.table().save((dir / "monopolist.csv").string());
  }
  print_study(r);
  return check_solved(r);
}

void add_common(CLI::App* cmd, Options& o, bool levels) {
  cmd->add_option("--kind", o.kind, "mesh kind: mesh1, mesh2, mesh3, mesh4")->capture_default_str();
  cmd->add_option("--seed", o.seed, "seed of the mesh4 perturbation");
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  if (levels) {
    cmd->add_option("--n-levels", o.levels, "comma-separated mesh levels, e.g. 4,8,16,32")->delimiter(',');
    cmd->add_option("--eps", o.eps, "absolute and relative solver tolerance")->capture_default_str();
    cmd->add_option("--max-iter", o.max_iter, "solver iteration cap")->capture_default_str();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-element lab for convexity and subharmonicity constraints"};
  app.require_subcommand(1);
  Options o;
  std::function<int(const Options&)> action;

  auto* mesh = app.add_subcommand("mesh", "generate a structured mesh and optionally export a constraint set");
  add_common(mesh, o, false);
  mesh->add_option("--n", o.n, "cells per side")->capture_default_str();
  mesh->add_option("--degree", o.degree, "1 or 2")->check(CLI::IsMember({1, 2}));
  mesh->add_option("--constraints", o.constraints, "also export this constraint family");
  mesh->callback([&] { action = cmd_mesh; });

  auto* pm = app.add_subcommand("pm-audit", "search a (PM) certificate for the edge normals");
  add_common(pm, o, false);
  pm->add_option("--n", o.n, "cells per side")->capture_default_str();
  pm->add_option("--mesh", o.mesh_file, "read the mesh from a file instead");
  pm->add_option("--region", o.region, "restrict to edges meeting x0,y0,x1,y1");
  pm->callback([&] { action = cmd_pm_audit; });

  auto* cons = app.add_subcommand("consistency", "run the consistency suite");
  cons->add_option("--out", o.out, "output directory")->capture_default_str();
  std::vector<std::string> ids;
  for (const ConsistencyCase& c : tabulated_cases()) ids.push_back(c.id);
  cons->add_option("--case", o.case_id, "run a single case")->check(CLI::IsMember(ids));
  cons->add_option("--scale", o.scale, "patch scale; h runs from scale/8 to scale/64")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cons->callback([&] { action = cmd_consistency; });

  auto* sub = app.add_subcommand("subharmonic", "subharmonic projection convergence study");
  add_common(sub, o, true);
  sub->add_option("--degree", o.degree, "1 or 2")->check(CLI::IsMember({1, 2}));
  sub->add_option("--constraints", o.constraints, "conformal, weak-subharmonic, weak-convex or none");
  sub->add_option("--target", o.target, "quadratic (default), paraboloid, superharmonic, affine, sincos");
  sub->callback([&] { action = cmd_subharmonic; });

  auto* nonconv = app.add_subcommand("nonconvergence", "L2 distance to conformal convex P1 functions");
  add_common(nonconv, o, true);
  nonconv->add_option("--eta", o.eta, "eta of the adversarial quadratic")->check(CLI::PositiveNumber);
  nonconv->add_option("--target", o.target, "lemma2 (default) or paraboloid");
  nonconv->add_option("--constraints", o.constraints, "conformal (default) or none");
  nonconv->add_flag("--auto-directions", o.auto_directions, "take a, b from the mesh's (PM) certificate");
  nonconv->callback([&] { action = cmd_nonconvergence; });

  auto* mono = app.add_subcommand("monopolist", "monopolist problem over convex functions");
  add_common(mono, o, true);
  mono->add_option("--alpha", o.alpha, "alpha in [0, 1]")->capture_default_str();
  mono->add_option("--matrix", o.matrix, "identity or lemma2")->capture_default_str();
  mono->add_option("--eta", o.eta, "eta of the lemma2 matrix")->check(CLI::PositiveNumber);
  mono->add_option("--constraints", o.constraints, "monopolist (default), conformal or none");
  mono->callback([&] { action = cmd_monopolist; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    return action(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
