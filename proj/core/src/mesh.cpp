#include "convexlab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace convexlab {

namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

// Liang-Barsky clip of segment [p, q] against a closed rectangle.
bool segment_meets_rect(const Point& p, const Point& q, const Rect& r, double tol) {
  double t0 = 0.0;
  double t1 = 1.0;
  const Point d = q - p;
  const std::array<double, 4> pk{-d.x(), d.x(), -d.y(), d.y()};
  const std::array<double, 4> qk{p.x() - (r.x0 - tol), (r.x1 + tol) - p.x(), p.y() - (r.y0 - tol),
                                 (r.y1 + tol) - p.y()};
  for (int i = 0; i < 4; ++i) {
    if (pk[i] == 0.0) {
      if (qk[i] < 0.0) return false;
      continue;
    }
    const double t = qk[i] / pk[i];
    if (pk[i] < 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

Rect parse_rect(std::string_view text) {
  std::string s(text);
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  Rect r;
  if (!(in >> r.x0 >> r.y0 >> r.x1 >> r.y1)) {
    throw std::invalid_argument("rectangle must be given as x0,y0,x1,y1: '" + std::string(text) + "'");
  }
  std::string rest;
  if (in >> rest) throw std::invalid_argument("trailing data in rectangle: '" + std::string(text) + "'");
  return r;
}

MeshKind parse_mesh_kind(std::string_view name) {
  if (name == "mesh1") return MeshKind::Mesh1;
  if (name == "mesh2") return MeshKind::Mesh2;
  if (name == "mesh3") return MeshKind::Mesh3;
  if (name == "mesh4") return MeshKind::Mesh4;
  throw std::invalid_argument("unknown mesh kind '" + std::string(name) + "'");
}

std::string to_string(MeshKind kind) {
  switch (kind) {
    case MeshKind::Mesh1: return "mesh1";
    case MeshKind::Mesh2: return "mesh2";
    case MeshKind::Mesh3: return "mesh3";
    case MeshKind::Mesh4: return "mesh4";
  }
  return "unknown";
}

Mesh::Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles, double h, Rect domain)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), h_(h), domain_(domain) {
  if (domain_.degenerate()) throw std::invalid_argument("mesh domain is empty");
  if (triangles_.empty()) throw std::invalid_argument("mesh has no triangles");
  const int nv = num_vertices();
  double total_area = 0.0;
  for (int t = 0; t < num_triangles(); ++t) {
    for (int v : triangles_[t]) {
      if (v < 0 || v >= nv) throw std::invalid_argument("triangle references a missing vertex");
    }
    const double a = signed_area(t);
    if (!(a > 0.0)) {
      throw std::invalid_argument("triangle " + std::to_string(t) + " is not counterclockwise");
    }
    total_area += a;
  }
  if (std::abs(total_area - domain_.area()) > 1e-12 * domain_.area()) {
    throw std::invalid_argument("triangles do not tile the domain");
  }
  for (const Point& p : vertices_) {
    if (!domain_.contains(p, 1e-12 * std::max(domain_.width(), domain_.height()))) {
      throw std::invalid_argument("vertex outside the domain");
    }
  }

  // Edge table sorted by (min vertex, max vertex).
  std::map<std::pair<int, int>, std::vector<int>> owners;
  for (int t = 0; t < num_triangles(); ++t) {
    const Triangle& tri = triangles_[t];
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k];
      const int b = tri[(k + 1) % 3];
      owners[{std::min(a, b), std::max(a, b)}].push_back(t);
    }
  }
  edges_.reserve(owners.size());
  std::map<std::pair<int, int>, int> edge_id;
  for (const auto& [key, tris] : owners) {
    if (tris.size() > 2) throw std::invalid_argument("edge shared by more than two triangles");
    Edge e;
    e.v0 = key.first;
    e.v1 = key.second;
    e.tri1 = tris[0];
    e.tri2 = tris.size() == 2 ? tris[1] : -1;
    edge_id[key] = static_cast<int>(edges_.size());
    edges_.push_back(e);
  }
  triangle_edges_.resize(triangles_.size());
  for (int t = 0; t < num_triangles(); ++t) {
    const Triangle& tri = triangles_[t];
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k];
      const int b = tri[(k + 1) % 3];
      triangle_edges_[t][k] = edge_id.at({std::min(a, b), std::max(a, b)});
    }
  }

  boundary_vertex_.assign(nv, 0);
  for (const Edge& e : edges_) {
    if (e.is_boundary()) {
      boundary_vertex_[e.v0] = 1;
      boundary_vertex_[e.v1] = 1;
    }
  }

  vertex_tri_offsets_.assign(nv + 1, 0);
  for (const Triangle& tri : triangles_) {
    for (int v : tri) ++vertex_tri_offsets_[v + 1];
  }
  for (int v = 0; v < nv; ++v) vertex_tri_offsets_[v + 1] += vertex_tri_offsets_[v];
  vertex_tri_list_.resize(vertex_tri_offsets_[nv]);
  std::vector<int> fill(vertex_tri_offsets_.begin(), vertex_tri_offsets_.end() - 1);
  for (int t = 0; t < num_triangles(); ++t) {
    for (int v : triangles_[t]) vertex_tri_list_[fill[v]++] = t;
  }
}

std::vector<int> Mesh::vertex_triangles(int v) const {
  return {vertex_tri_list_.begin() + vertex_tri_offsets_[v],
          vertex_tri_list_.begin() + vertex_tri_offsets_[v + 1]};
}

int Mesh::find_edge(int a, int b) const {
  const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), key, [](const Edge& e, const auto& k) {
    return std::pair<int, int>{e.v0, e.v1} < k;
  });
  if (it == edges_.end() || it->v0 != key.first || it->v1 != key.second) return -1;
  return static_cast<int>(it - edges_.begin());
}

double Mesh::signed_area(int t) const {
  const Triangle& tri = triangles_[t];
  return 0.5 * cross(vertices_[tri[1]] - vertices_[tri[0]], vertices_[tri[2]] - vertices_[tri[0]]);
}

Point Mesh::centroid(int t) const {
  const Triangle& tri = triangles_[t];
  return (vertices_[tri[0]] + vertices_[tri[1]] + vertices_[tri[2]]) / 3.0;
}

int Mesh::find_vertex(const Point& p, double tol) const {
  for (int v = 0; v < num_vertices(); ++v) {
    if ((vertices_[v] - p).lpNorm<Eigen::Infinity>() <= tol) return v;
  }
  return -1;
}

Mesh build_structured_mesh(MeshKind kind, int n, const Rect& domain, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("structured mesh needs n >= 1");
  if (domain.degenerate()) throw std::invalid_argument("structured mesh domain is empty");
  const double hx = domain.width() / n;
  const double hy = domain.height() / n;
  const auto id = [n](int i, int j) { return j * (n + 1) + i; };

  std::vector<Point> vertices;
  vertices.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      // Exact end coordinates so that the domain corners are hit bit-for-bit.
      const double x = i == n ? domain.x1 : domain.x0 + i * hx;
      const double y = j == n ? domain.y1 : domain.y0 + j * hy;
      vertices.emplace_back(x, y);
    }
  }

  std::vector<Triangle> triangles;
  triangles.reserve(2 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = id(i, j);
      const int v10 = id(i + 1, j);
      const int v01 = id(i, j + 1);
      const int v11 = id(i + 1, j + 1);
      bool along_main_diagonal = true;
      if (kind == MeshKind::Mesh2) along_main_diagonal = false;
      if (kind == MeshKind::Mesh3) along_main_diagonal = (i + j) % 2 == 0;
      if (along_main_diagonal) {
        triangles.push_back({v00, v10, v11});
        triangles.push_back({v00, v11, v01});
      } else {
        triangles.push_back({v00, v10, v01});
        triangles.push_back({v10, v11, v01});
      }
    }
  }

  if (kind == MeshKind::Mesh4) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-0.25, 0.25);
    std::vector<std::vector<int>> incident(vertices.size());
    for (int t = 0; t < static_cast<int>(triangles.size()); ++t) {
      for (int v : triangles[t]) incident[v].push_back(t);
    }
    const double min_area = 0.25 * 0.5 * hx * hy;
    const auto area = [&](const Triangle& tri) {
      return 0.5 * cross(vertices[tri[1]] - vertices[tri[0]], vertices[tri[2]] - vertices[tri[0]]);
    };
    for (int j = 1; j < n; ++j) {
      for (int i = 1; i < n; ++i) {
        const int v = id(i, j);
        const Point base = vertices[v];
        // Redraw until every incident triangle keeps a quarter of its nominal area.
        bool ok = false;
        for (int attempt = 0; attempt < 10000 && !ok; ++attempt) {
          vertices[v] = base + Point(unit(rng) * hx, unit(rng) * hy);
          ok = true;
          for (int t : incident[v]) ok = ok && area(triangles[t]) >= min_area;
        }
        if (!ok) throw std::logic_error("mesh4: could not place a perturbed vertex");
      }
    }
  }

  return Mesh(std::move(vertices), std::move(triangles), std::max(hx, hy), domain);
}

Mesh refine_homothetic(const Mesh& mesh) {
  std::vector<Point> vertices = mesh.vertices();
  std::vector<int> midpoint_vertex(mesh.num_edges());
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edges()[e];
    midpoint_vertex[e] = static_cast<int>(vertices.size());
    vertices.push_back(0.5 * (mesh.vertex(edge.v0) + mesh.vertex(edge.v1)));
  }
  std::vector<Triangle> triangles;
  triangles.reserve(4 * mesh.triangles().size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Triangle& tri = mesh.triangle(t);
    const auto& te = mesh.triangle_edges(t);
    const int m01 = midpoint_vertex[te[0]];
    const int m12 = midpoint_vertex[te[1]];
    const int m20 = midpoint_vertex[te[2]];
    triangles.push_back({tri[0], m01, m20});
    triangles.push_back({m01, tri[1], m12});
    triangles.push_back({m20, m12, tri[2]});
    triangles.push_back({m01, m12, m20});
  }
  return Mesh(std::move(vertices), std::move(triangles), 0.5 * mesh.h(), mesh.domain());
}

std::vector<InteriorEdge> interior_edges(const Mesh& mesh) {
  std::vector<InteriorEdge> out;
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edges()[e];
    if (edge.is_boundary()) continue;
    InteriorEdge ie;
    ie.edge = e;
    ie.endpoints = {edge.v0, edge.v1};
    ie.tri1 = edge.tri1;
    ie.tri2 = edge.tri2;
    const Point d = mesh.vertex(edge.v1) - mesh.vertex(edge.v0);
    ie.length = d.norm();
    Point n(-d.y(), d.x());
    n /= ie.length;
    if (n.dot(mesh.centroid(ie.tri2) - mesh.centroid(ie.tri1)) < 0.0) n = -n;
    ie.normal = n;
    out.push_back(ie);
  }
  return out;
}

Point canonical_direction(const Point& n, double tol) {
  if (n.y() > tol) return n;
  if (n.y() < -tol) return -n;
  return n.x() >= 0.0 ? Point(n.x(), 0.0) : Point(-n.x(), 0.0);
}

std::vector<Point> normal_direction_set(const Mesh& mesh, const Rect& region) {
  constexpr double kDedupTol = 1e-10;
  std::vector<Point> out;
  const double geom_tol = 1e-12 * std::max(mesh.domain().width(), mesh.domain().height());
  for (const InteriorEdge& e : interior_edges(mesh)) {
    if (!segment_meets_rect(mesh.vertex(e.endpoints[0]), mesh.vertex(e.endpoints[1]), region, geom_tol)) {
      continue;
    }
    const Point c = canonical_direction(e.normal, kDedupTol);
    const bool seen = std::any_of(out.begin(), out.end(), [&](const Point& p) {
      return (p - c).lpNorm<Eigen::Infinity>() <= kDedupTol;
    });
    if (!seen) out.push_back(c);
  }
  if (out.empty()) throw std::invalid_argument("no interior edge meets the region");
  std::sort(out.begin(), out.end(), [](const Point& a, const Point& b) {
    return std::atan2(a.y(), a.x()) < std::atan2(b.y(), b.x());
  });
  return out;
}

std::vector<Point> normal_direction_set(const Mesh& mesh) {
  return normal_direction_set(mesh, mesh.domain());
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  const auto old_precision = out.precision(17);
  out << mesh.num_vertices() << ' ' << mesh.num_triangles() << '\n';
  for (const Point& p : mesh.vertices()) out << p.x() << ' ' << p.y() << '\n';
  for (const Triangle& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out.precision(old_precision);
}

Mesh read_mesh(std::istream& in) {
  long nv = 0;
  long nt = 0;
  if (!(in >> nv >> nt) || nv < 3 || nt < 1) throw std::runtime_error("mesh file: bad header");
  std::vector<Point> vertices(nv);
  Rect box{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
           std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (auto& p : vertices) {
    if (!(in >> p.x() >> p.y())) throw std::runtime_error("mesh file: truncated vertex list");
    box.x0 = std::min(box.x0, p.x());
    box.y0 = std::min(box.y0, p.y());
    box.x1 = std::max(box.x1, p.x());
    box.y1 = std::max(box.y1, p.y());
  }
  std::vector<Triangle> triangles(nt);
  double h = 0.0;
  for (auto& t : triangles) {
    if (!(in >> t[0] >> t[1] >> t[2])) throw std::runtime_error("mesh file: truncated triangle list");
    for (int v : t) {
      if (v < 0 || v >= nv) throw std::runtime_error("mesh file: vertex index out of range");
    }
    const auto [xmin, xmax] = std::minmax({vertices[t[0]].x(), vertices[t[1]].x(), vertices[t[2]].x()});
    const auto [ymin, ymax] = std::minmax({vertices[t[0]].y(), vertices[t[1]].y(), vertices[t[2]].y()});
    h = std::max({h, xmax - xmin, ymax - ymin});
  }
  try {
    return Mesh(std::move(vertices), std::move(triangles), h, box);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("mesh file: ") + e.what());
  }
}

void save_mesh(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_mesh(out, mesh);
}

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_mesh(in);
}

}  // namespace convexlab
