#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace convexlab {

using Point = Eigen::Vector2d;
using Triangle = std::array<int, 3>;

/// Axis-aligned closed rectangle [x0,x1] x [y0,y1].
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool contains(const Point& p, double tol = 0.0) const {
    return p.x() >= x0 - tol && p.x() <= x1 + tol && p.y() >= y0 - tol && p.y() <= y1 + tol;
  }
  bool degenerate() const { return !(x1 > x0) || !(y1 > y0); }

  static Rect unit() { return {}; }
};

/// Parses "x0,y0,x1,y1".
Rect parse_rect(std::string_view text);

/// Undirected mesh edge. `v0 < v1`; `tri2 == -1` on the boundary.
struct Edge {
  int v0 = -1;
  int v1 = -1;
  int tri1 = -1;
  int tri2 = -1;

  bool is_boundary() const { return tri2 < 0; }
};

/// An edge shared by two triangles, with the unit normal pointing from tri1 into tri2.
struct InteriorEdge {
  int edge = -1;                 ///< index into Mesh::edges()
  std::array<int, 2> endpoints{};  ///< ascending vertex indices
  int tri1 = -1;
  int tri2 = -1;
  Point normal = Point::Zero();
  double length = 0.0;

  Point midpoint_of(const std::vector<Point>& vertices) const {
    return 0.5 * (vertices[endpoints[0]] + vertices[endpoints[1]]);
  }
};

enum class MeshKind {
  Mesh1,  ///< every cell split along (1,1)
  Mesh2,  ///< every cell split along (1,-1)
  Mesh3,  ///< alternating diagonals ("union jack")
  Mesh4,  ///< Mesh1 connectivity, interior vertices randomly displaced
};

MeshKind parse_mesh_kind(std::string_view name);
std::string to_string(MeshKind kind);

inline constexpr std::uint64_t kDefaultMeshSeed = 0x5eed'c0de'2024'0001ULL;

/// Conforming triangulation of a rectangle. Immutable once constructed.
///
/// Construction validates orientation (strictly positive signed area), that
/// the triangles tile the domain, and that every edge has at most two
/// neighbours. The edge table is sorted by (v0, v1).
class Mesh {
 public:
  Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles, double h, Rect domain);

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Edge>& edges() const { return edges_; }
  double h() const { return h_; }
  const Rect& domain() const { return domain_; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const Point& vertex(int v) const { return vertices_[v]; }
  const Triangle& triangle(int t) const { return triangles_[t]; }

  /// Edge ids of triangle t; local edge k joins local vertices k and (k+1)%3.
  const std::array<int, 3>& triangle_edges(int t) const { return triangle_edges_[t]; }

  /// Triangles incident to vertex v.
  std::vector<int> vertex_triangles(int v) const;

  /// Index of the edge joining a and b, or -1.
  int find_edge(int a, int b) const;

  bool is_boundary_vertex(int v) const { return boundary_vertex_[v] != 0; }

  double signed_area(int t) const;
  Point centroid(int t) const;

  /// Vertex at p within tol, or -1.
  int find_vertex(const Point& p, double tol = 1e-10) const;

 private:
  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> triangle_edges_;
  std::vector<int> vertex_tri_offsets_;
  std::vector<int> vertex_tri_list_;
  std::vector<char> boundary_vertex_;
  double h_;
  Rect domain_;
};

/// Structured n x n triangulation of `domain`. Mesh4 draws its displacements
/// from `seed`.
Mesh build_structured_mesh(MeshKind kind, int n, const Rect& domain = Rect::unit(),
                           std::uint64_t seed = kDefaultMeshSeed);

/// Splits every triangle into four similar subtriangles through the edge midpoints.
Mesh refine_homothetic(const Mesh& mesh);

std::vector<InteriorEdge> interior_edges(const Mesh& mesh);

/// Representative of {n, -n}: positive y, or positive x when y vanishes.
Point canonical_direction(const Point& n, double tol = 1e-10);

/// Canonical normals of the interior edges meeting `region`, deduplicated to 1e-10.
/// Throws std::invalid_argument if no interior edge meets the region.
std::vector<Point> normal_direction_set(const Mesh& mesh, const Rect& region);
std::vector<Point> normal_direction_set(const Mesh& mesh);

/// Plain-text mesh format: "nv nt", then "x y" per vertex, then "i j k" per triangle.
void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);
void save_mesh(const std::string& path, const Mesh& mesh);
Mesh load_mesh(const std::string& path);

}  // namespace convexlab
