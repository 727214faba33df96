#pragma once

// Planar triangulations with boundary bookkeeping, element measures,
// boundary/interior subsets and the Hausdorff distance between point sets.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "orlicz/errors.hpp"

namespace orlicz {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline double point_segment_distance(const Point& p, const Point& a, const Point& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

using Triangle = std::array<int, 3>;
using Edge = std::array<int, 2>;

/// Immutable 2-D triangulation. Triangles are counter-clockwise; boundary
/// edges are oriented with the domain on their left, so the outward normal
/// of edge (a, b) is the tangent rotated clockwise.
class MeshDomain {
 public:
  MeshDomain(std::vector<Point> vertices, std::vector<Triangle> triangles, std::vector<Edge> boundary_edges)
      : vertices_(std::move(vertices)), triangles_(std::move(triangles)), boundary_(std::move(boundary_edges)) {
    build();
  }

  std::span<const Point> vertices() const { return vertices_; }
  std::span<const Triangle> triangles() const { return triangles_; }
  std::span<const Edge> boundary_edges() const { return boundary_; }
  int vertex_count() const { return static_cast<int>(vertices_.size()); }
  int triangle_count() const { return static_cast<int>(triangles_.size()); }
  int boundary_edge_count() const { return static_cast<int>(boundary_.size()); }

  const Point& vertex(int v) const { return vertices_[static_cast<std::size_t>(v)]; }
  const Triangle& triangle(int t) const { return triangles_[static_cast<std::size_t>(t)]; }
  const Edge& boundary_edge(int e) const { return boundary_[static_cast<std::size_t>(e)]; }

  double area(int t) const { return areas_[static_cast<std::size_t>(t)]; }
  double edge_length(int e) const { return lengths_[static_cast<std::size_t>(e)]; }
  std::span<const double> areas() const { return areas_; }
  std::span<const double> edge_lengths() const { return lengths_; }
  bool on_boundary(int v) const { return on_boundary_[static_cast<std::size_t>(v)] != 0; }

  Point outward_normal(int e) const {
    const auto& [a, b] = boundary_edge(e);
    const double dx = vertex(b).x - vertex(a).x;
    const double dy = vertex(b).y - vertex(a).y;
    const double len = edge_length(e);
    return {dy / len, -dx / len};
  }

  Point centroid(int t) const {
    const auto& tri = triangle(t);
    return {(vertex(tri[0]).x + vertex(tri[1]).x + vertex(tri[2]).x) / 3.0,
            (vertex(tri[0]).y + vertex(tri[1]).y + vertex(tri[2]).y) / 3.0};
  }

  double total_area() const { return total_area_; }
  double perimeter() const { return perimeter_; }
  double max_area() const { return *std::max_element(areas_.begin(), areas_.end()); }
  double max_boundary_edge_length() const { return *std::max_element(lengths_.begin(), lengths_.end()); }
  /// Longest edge over all triangles.
  double max_edge_length() const { return max_edge_; }
  /// Longest vertex-to-vertex distance among boundary vertices.
  double diameter() const { return diameter_; }

  /// Boundary edge indices grouped into closed loops, each in traversal order.
  const std::vector<std::vector<int>>& boundary_loops() const { return loops_; }
  /// Triangles incident to each vertex.
  const std::vector<std::vector<int>>& vertex_triangles() const { return vertex_tris_; }
  /// Boundary edges incident to each vertex.
  const std::vector<std::vector<int>>& vertex_boundary_edges() const { return vertex_bedges_; }

  double distance_to_boundary(const Point& p) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : boundary_) d = std::min(d, point_segment_distance(p, vertex(a), vertex(b)));
    return d;
  }

  MeshDomain transformed(double scale, Point shift) const {
    std::vector<Point> v = vertices_;
    for (auto& p : v) p = {scale * p.x + shift.x, scale * p.y + shift.y};
    return MeshDomain(std::move(v), triangles_, boundary_);
  }

 private:
  void build() {
    const auto nv = vertices_.size();
    if (nv < 3 || triangles_.empty() || boundary_.empty()) throw DomainError("mesh: empty vertex/triangle/boundary list");
    auto check_index = [nv](int i) {
      if (i < 0 || static_cast<std::size_t>(i) >= nv) throw DomainError("mesh: vertex index out of range");
    };
    areas_.reserve(triangles_.size());
    vertex_tris_.assign(nv, {});
    std::map<std::pair<int, int>, int> directed;  // directed edge -> count
    max_edge_ = 0.0;
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
      const auto& tri = triangles_[t];
      for (int i : tri) check_index(i);
      const Point& a = vertex(tri[0]);
      const Point& b = vertex(tri[1]);
      const Point& c = vertex(tri[2]);
      const double area = 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
      if (!(area > 0.0)) throw DomainError("mesh: triangle " + std::to_string(t) + " has nonpositive area");
      areas_.push_back(area);
      for (int k = 0; k < 3; ++k) {
        const int u = tri[static_cast<std::size_t>(k)];
        const int w = tri[static_cast<std::size_t>((k + 1) % 3)];
        if (++directed[{u, w}] > 1) throw DomainError("mesh: duplicated directed edge");
        max_edge_ = std::max(max_edge_, distance(vertex(u), vertex(w)));
        vertex_tris_[static_cast<std::size_t>(u)].push_back(static_cast<int>(t));
      }
    }
    total_area_ = 0.0;
    for (double a : areas_) total_area_ += a;

    // Boundary edges are exactly the directed edges without a twin.
    std::size_t expected = 0;
    for (const auto& [e, cnt] : directed) {
      if (!directed.contains({e.second, e.first})) ++expected;
    }
    if (expected != boundary_.size()) throw DomainError("mesh: boundary edge list does not match the triangulation");
    on_boundary_.assign(nv, 0);
    vertex_bedges_.assign(nv, {});
    lengths_.reserve(boundary_.size());
    perimeter_ = 0.0;
    std::vector<int> next_edge(nv, -1);
    for (std::size_t e = 0; e < boundary_.size(); ++e) {
      const auto& [a, b] = boundary_[e];
      check_index(a);
      check_index(b);
      if (!directed.contains({a, b}) || directed.contains({b, a})) {
        throw DomainError("mesh: boundary edge " + std::to_string(e) + " is not a counter-clockwise boundary edge");
      }
      if (next_edge[static_cast<std::size_t>(a)] != -1) throw DomainError("mesh: boundary is not a union of simple loops");
      next_edge[static_cast<std::size_t>(a)] = static_cast<int>(e);
      on_boundary_[static_cast<std::size_t>(a)] = 1;
      on_boundary_[static_cast<std::size_t>(b)] = 1;
      vertex_bedges_[static_cast<std::size_t>(a)].push_back(static_cast<int>(e));
      vertex_bedges_[static_cast<std::size_t>(b)].push_back(static_cast<int>(e));
      const double len = distance(vertex(a), vertex(b));
      lengths_.push_back(len);
      perimeter_ += len;
    }
    std::vector<char> seen(boundary_.size(), 0);
    for (std::size_t start = 0; start < boundary_.size(); ++start) {
      if (seen[start]) continue;
      std::vector<int> loop;
      int e = static_cast<int>(start);
      while (!seen[static_cast<std::size_t>(e)]) {
        seen[static_cast<std::size_t>(e)] = 1;
        loop.push_back(e);
        e = next_edge[static_cast<std::size_t>(boundary_edge(e)[1])];
        if (e < 0) throw DomainError("mesh: open boundary chain");
      }
      if (e != static_cast<int>(start)) throw DomainError("mesh: boundary loops are not closed");
      loops_.push_back(std::move(loop));
    }
    // Euler characteristic of a planar domain with `loops` boundary curves.
    const std::size_t undirected = (directed.size() + expected) / 2;
    const long euler = static_cast<long>(nv) - static_cast<long>(undirected) + static_cast<long>(triangles_.size());
    if (euler != 2 - static_cast<long>(loops_.size())) throw DomainError("mesh: Euler characteristic mismatch");
    for (std::size_t v = 0; v < nv; ++v) {
      if (vertex_tris_[v].empty()) throw DomainError("mesh: unreferenced vertex " + std::to_string(v));
    }
    diameter_ = 0.0;
    std::vector<int> bverts;
    for (std::size_t v = 0; v < nv; ++v) {
      if (on_boundary_[v]) bverts.push_back(static_cast<int>(v));
    }
    for (std::size_t i = 0; i < bverts.size(); ++i) {
      for (std::size_t j = i + 1; j < bverts.size(); ++j) {
        diameter_ = std::max(diameter_, distance(vertex(bverts[i]), vertex(bverts[j])));
      }
    }
  }

  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> boundary_;
  std::vector<double> areas_;
  std::vector<double> lengths_;
  std::vector<char> on_boundary_;
  std::vector<std::vector<int>> loops_;
  std::vector<std::vector<int>> vertex_tris_;
  std::vector<std::vector<int>> vertex_bedges_;
  double total_area_ = 0.0;
  double perimeter_ = 0.0;
  double max_edge_ = 0.0;
  double diameter_ = 0.0;
};

// ---------------------------------------------------------------------------
// Generators.

/// Concentric-ring disk mesh: ring k (k = 1..n) carries 6k equally spaced
/// vertices at radius k * radius / n, with n = ceil(radius / target_h).
/// Consecutive rings are stitched along the shorter diagonal of each quad,
/// which keeps the mesh invariant under rotations by 60 degrees.
inline MeshDomain make_disk(double radius, double target_h) {
  if (!(radius > 0.0) || !(target_h > 0.0) || !(target_h < radius)) {
    throw DomainError("make_disk: need radius > 0 and 0 < target_h < radius");
  }
  const int n = static_cast<int>(std::ceil(radius / target_h - 1e-12));
  std::vector<Point> v{{0.0, 0.0}};
  auto ring_start = [](int k) { return k == 0 ? 0 : 1 + 3 * k * (k - 1); };
  for (int k = 1; k <= n; ++k) {
    const double r = radius * k / n;
    for (int i = 0; i < 6 * k; ++i) {
      const double th = 2.0 * std::numbers::pi * i / (6 * k);
      v.push_back({r * std::cos(th), r * std::sin(th)});
    }
  }
  std::vector<Triangle> tris;
  auto push_ccw = [&](int a, int b, int c) {
    const Point& pa = v[static_cast<std::size_t>(a)];
    const Point& pb = v[static_cast<std::size_t>(b)];
    const Point& pc = v[static_cast<std::size_t>(c)];
    const double s = (pb.x - pa.x) * (pc.y - pa.y) - (pc.x - pa.x) * (pb.y - pa.y);
    if (s > 0.0) {
      tris.push_back({a, b, c});
    } else {
      tris.push_back({a, c, b});
    }
  };
  for (int j = 0; j < 6; ++j) push_ccw(0, 1 + j, 1 + (j + 1) % 6);
  for (int k = 1; k < n; ++k) {
    const int m_in = 6 * k;
    const int m_out = 6 * (k + 1);
    const int s_in = ring_start(k);
    const int s_out = ring_start(k + 1);
    int i = 0;
    int j = 0;
    while (i < m_in || j < m_out) {
      const int a = s_in + i % m_in;
      const int b = s_out + j % m_out;
      // Take the shorter of the two candidate diagonals; near-ties fall back
      // to the angular order (cross-multiplied to stay exact) so the result
      // does not depend on round-off.
      bool advance_outer = i == m_in;
      if (!advance_outer && j < m_out) {
        const double d_out = distance(v[static_cast<std::size_t>(a)], v[static_cast<std::size_t>(s_out + (j + 1) % m_out)]);
        const double d_in = distance(v[static_cast<std::size_t>(b)], v[static_cast<std::size_t>(s_in + (i + 1) % m_in)]);
        if (std::abs(d_out - d_in) > 1e-9 * radius / n) {
          advance_outer = d_out < d_in;
        } else {
          advance_outer = static_cast<long>(j + 1) * m_in <= static_cast<long>(i + 1) * m_out;
        }
      }
      if (advance_outer) {
        push_ccw(a, b, s_out + (j + 1) % m_out);
        ++j;
      } else {
        push_ccw(a, b, s_in + (i + 1) % m_in);
        ++i;
      }
    }
  }
  std::vector<Edge> boundary;
  const int s_last = ring_start(n);
  for (int j = 0; j < 6 * n; ++j) boundary.push_back({s_last + j, s_last + (j + 1) % (6 * n)});
  return MeshDomain(std::move(v), std::move(tris), std::move(boundary));
}

/// Structured square mesh of [origin, origin + side]^2 with n = ceil(side/h)
/// cells per side, each split along its rising diagonal.
inline MeshDomain make_square(double side, double target_h, Point origin = {0.0, 0.0}) {
  if (!(side > 0.0) || !(target_h > 0.0) || !(target_h <= side)) {
    throw DomainError("make_square: need side > 0 and 0 < target_h <= side");
  }
  const int n = static_cast<int>(std::ceil(side / target_h - 1e-12));
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<Point> v;
  v.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      // Exact endpoints so that the area and perimeter are exact.
      const double x = i == n ? side : side * i / n;
      const double y = j == n ? side : side * j / n;
      v.push_back({origin.x + x, origin.y + y});
    }
  }
  std::vector<Triangle> tris;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  std::vector<Edge> boundary;
  for (int i = 0; i < n; ++i) boundary.push_back({id(i, 0), id(i + 1, 0)});
  for (int j = 0; j < n; ++j) boundary.push_back({id(n, j), id(n, j + 1)});
  for (int i = n; i > 0; --i) boundary.push_back({id(i, n), id(i - 1, n)});
  for (int j = n; j > 0; --j) boundary.push_back({id(0, j), id(0, j - 1)});
  return MeshDomain(std::move(v), std::move(tris), std::move(boundary));
}

// ---------------------------------------------------------------------------
// Subsets.

/// A window: a set of boundary edges (indices into boundary_edges()).
struct BoundarySubset {
  std::vector<int> edges;
  double achieved_measure = 0.0;
  friend bool operator==(const BoundarySubset& a, const BoundarySubset& b) { return a.edges == b.edges; }
};

/// A hole: a set of triangles.
struct InteriorSubset {
  std::vector<int> triangles;
  double achieved_measure = 0.0;
  friend bool operator==(const InteriorSubset& a, const InteriorSubset& b) { return a.triangles == b.triangles; }
};

inline BoundarySubset make_boundary_subset(const MeshDomain& mesh, std::vector<int> edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  double m = 0.0;
  for (int e : edges) {
    if (e < 0 || e >= mesh.boundary_edge_count()) throw DomainError("boundary subset: edge index out of range");
    m += mesh.edge_length(e);
  }
  return {std::move(edges), m};
}

inline InteriorSubset make_interior_subset(const MeshDomain& mesh, std::vector<int> triangles) {
  std::sort(triangles.begin(), triangles.end());
  triangles.erase(std::unique(triangles.begin(), triangles.end()), triangles.end());
  double m = 0.0;
  for (int t : triangles) {
    if (t < 0 || t >= mesh.triangle_count()) throw DomainError("interior subset: triangle index out of range");
    m += mesh.area(t);
  }
  return {std::move(triangles), m};
}

/// Sorted, unique vertices of the triangles in `subset`.
inline std::vector<int> subset_vertices(const MeshDomain& mesh, const InteriorSubset& subset) {
  std::vector<int> out;
  for (int t : subset.triangles) {
    for (int v : mesh.triangle(t)) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::vector<Point> subset_points(const MeshDomain& mesh, const InteriorSubset& subset) {
  std::vector<Point> pts;
  for (int v : subset_vertices(mesh, subset)) pts.push_back(mesh.vertex(v));
  return pts;
}

/// Vertex closest to p (lowest index on ties).
inline int nearest_vertex(const MeshDomain& mesh, Point p) {
  int best = 0;
  double best_d = distance(mesh.vertex(0), p);
  for (int v = 1; v < mesh.vertex_count(); ++v) {
    const double d = distance(mesh.vertex(v), p);
    if (d < best_d) {
      best_d = d;
      best = v;
    }
  }
  return best;
}

/// Triangles whose centroid lies in the closed disk of radius r around c.
inline InteriorSubset triangles_in_disk(const MeshDomain& mesh, Point c, double r) {
  std::vector<int> out;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    if (distance(mesh.centroid(t), c) <= r) out.push_back(t);
  }
  return make_interior_subset(mesh, std::move(out));
}

/// Triangles whose centroid lies in the axis-aligned square of half-side `half` around c.
inline InteriorSubset triangles_in_square(const MeshDomain& mesh, Point c, double half) {
  std::vector<int> out;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const Point p = mesh.centroid(t);
    if (std::abs(p.x - c.x) <= half && std::abs(p.y - c.y) <= half) out.push_back(t);
  }
  return make_interior_subset(mesh, std::move(out));
}

/// A_{eps,delta}: triangles whose centroid distance to the boundary lies in [eps, delta].
inline InteriorSubset annular_band(const MeshDomain& mesh, double eps, double delta) {
  if (!(eps >= 0.0) || !(eps < delta)) throw DomainError("annular_band: need 0 <= eps < delta");
  std::vector<int> out;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double d = mesh.distance_to_boundary(mesh.centroid(t));
    if (d >= eps && d <= delta) out.push_back(t);
  }
  if (out.empty()) throw DomainError("annular_band: empty band");
  return make_interior_subset(mesh, std::move(out));
}

// ---------------------------------------------------------------------------
// Hausdorff distance.

/// max( sup_x inf_y |x-y|, sup_y inf_x |x-y| ) over finite point sets.
/// The directed pass stops scanning a point as soon as it cannot raise the
/// running maximum.
inline double hausdorff_distance(std::span<const Point> X, std::span<const Point> Y) {
  if (X.empty() || Y.empty()) throw DomainError("hausdorff_distance: empty point set");
  auto directed = [](std::span<const Point> A, std::span<const Point> B) {
    double cmax = 0.0;
    for (const Point& a : A) {
      double cmin = std::numeric_limits<double>::infinity();
      for (const Point& b : B) {
        const double d = distance(a, b);
        if (d < cmin) {
          cmin = d;
          if (cmin <= cmax) break;
        }
      }
      cmax = std::max(cmax, cmin);
    }
    return cmax;
  };
  return std::max(directed(X, Y), directed(Y, X));
}

// ---------------------------------------------------------------------------
// Text format:
//   #vertices        one "x y" per line, 17 significant digits
//   #triangles       one "a b c" per line, 0-based
//   #boundary_edges  one "a b" per line, 0-based

inline void write_mesh(std::ostream& os, const MeshDomain& mesh) {
  char buf[96];
  os << "#vertices\n";
  for (const Point& p : mesh.vertices()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x, p.y);
    os << buf;
  }
  os << "#triangles\n";
  for (const auto& t : mesh.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "#boundary_edges\n";
  for (const auto& e : mesh.boundary_edges()) os << e[0] << ' ' << e[1] << '\n';
}

inline MeshDomain read_mesh(std::istream& is) {
  std::vector<Point> v;
  std::vector<Triangle> t;
  std::vector<Edge> b;
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line[0] == '#') {
      section = line.substr(0, line.find_last_not_of(" \t\r") + 1);
      continue;
    }
    std::istringstream ls(line);
    bool ok = false;
    if (section == "#vertices") {
      Point p;
      ok = static_cast<bool>(ls >> p.x >> p.y);
      v.push_back(p);
    } else if (section == "#triangles") {
      Triangle tri{};
      ok = static_cast<bool>(ls >> tri[0] >> tri[1] >> tri[2]);
      t.push_back(tri);
    } else if (section == "#boundary_edges") {
      Edge e{};
      ok = static_cast<bool>(ls >> e[0] >> e[1]);
      b.push_back(e);
    }
    std::string extra;
    if (!ok || (ls >> extra)) throw ParseError("mesh file: bad line " + std::to_string(lineno));
  }
  return MeshDomain(std::move(v), std::move(t), std::move(b));
}

}  // namespace orlicz
