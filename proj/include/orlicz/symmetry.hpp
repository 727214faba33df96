#pragma once

// Distribution functions of P1 fields, the layer-cake integral, circular
// symmetrisation on the disk and the checks built on it.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "orlicz/errors.hpp"
#include "orlicz/mesh.hpp"
#include "orlicz/modular.hpp"
#include "orlicz/parallel.hpp"
#include "orlicz/shape_opt.hpp"
#include "orlicz/trace_solver.hpp"
#include "orlicz/young.hpp"

namespace orlicz {

enum class MeasureKind { area, arclength };

struct DistributionFunction {
  std::vector<double> thresholds;  ///< increasing
  std::vector<double> measures;    ///< rho(t) = |{|u| > t}|
  std::vector<double> measures_ge;  ///< |{|u| >= t}|, the left limit of rho
  MeasureKind kind = MeasureKind::area;
  double total_measure = 0.0;
};

namespace detail {

/// Area of {f > t} (strict) or {f >= t} on a triangle where f is linear with
/// vertex values f0, f1, f2.
inline double superlevel_area(double area, double f0, double f1, double f2, double t, bool strict) {
  double v[3] = {f0, f1, f2};
  std::sort(v, v + 3);
  const double a = v[0], b = v[1], c = v[2];
  if (strict ? t >= c : t > c) return 0.0;
  if (strict ? t < a : t <= a) return area;
  if (t >= b) return area * ((c - t) / (c - a)) * ((c - t) / (c - b));
  return area - area * ((t - a) / (b - a)) * ((t - a) / (c - a));
}

inline double superlevel_length(double length, double f0, double f1, double t, bool strict) {
  const double lo = std::min(f0, f1), hi = std::max(f0, f1);
  if (strict ? t >= hi : t > hi) return 0.0;
  if (strict ? t < lo : t <= lo) return length;
  return length * (hi - t) / (hi - lo);
}

/// Measure of {|u| > t} (or >=): {u > t} and {-u > t} are disjoint for t >= 0.
inline double abs_superlevel(const MeshDomain& mesh, const Eigen::VectorXd& u, MeasureKind kind, double t,
                             bool strict) {
  double m = 0.0;
  if (kind == MeasureKind::area) {
    for (int k = 0; k < mesh.triangle_count(); ++k) {
      const auto& tri = mesh.triangle(k);
      const double f0 = u[tri[0]], f1 = u[tri[1]], f2 = u[tri[2]];
      m += superlevel_area(mesh.area(k), f0, f1, f2, t, strict);
      m += superlevel_area(mesh.area(k), -f0, -f1, -f2, t, strict);
    }
  } else {
    for (int e = 0; e < mesh.boundary_edge_count(); ++e) {
      const auto& [a, b] = mesh.boundary_edge(e);
      m += superlevel_length(mesh.edge_length(e), u[a], u[b], t, strict);
      m += superlevel_length(mesh.edge_length(e), -u[a], -u[b], t, strict);
    }
  }
  return m;
}

}  // namespace detail

/// Exact distribution function of |u_h| at the given nonnegative thresholds.
inline DistributionFunction distribution(const MeshDomain& mesh, const Eigen::VectorXd& u, MeasureKind kind,
                                         std::vector<double> thresholds) {
  DistributionFunction d;
  d.kind = kind;
  d.total_measure = kind == MeasureKind::area ? mesh.total_area() : mesh.perimeter();
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] >= 0.0) || (i > 0 && !(thresholds[i] > thresholds[i - 1]))) {
      throw DomainError("distribution: thresholds must be nonnegative and increasing");
    }
  }
  d.thresholds = std::move(thresholds);
  for (double t : d.thresholds) {
    d.measures.push_back(detail::abs_superlevel(mesh, u, kind, t, true));
    d.measures_ge.push_back(detail::abs_superlevel(mesh, u, kind, t, false));
  }
  return d;
}

/// Thresholds evenly spaced on [0, max |u|].
inline std::vector<double> threshold_grid(const Eigen::VectorXd& u, int count = 256) {
  const double top = u.size() > 0 ? u.cwiseAbs().maxCoeff() : 0.0;
  if (!(top > 0.0)) return {0.0};
  std::vector<double> t(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) t[static_cast<std::size_t>(i)] = top * i / (count - 1);
  t.back() = top;
  return t;
}

inline DistributionFunction distribution(const MeshDomain& mesh, const Eigen::VectorXd& u, MeasureKind kind,
                                         int count = 256) {
  return distribution(mesh, u, kind, threshold_grid(u, count));
}

inline DistributionFunction distribution(const ScalarField& u, MeasureKind kind, int count = 256) {
  return distribution(*u.mesh, u.values, kind, count);
}

/// int_0^inf G'(t) rho(t) dt, as a Stieltjes sum over the threshold grid with
/// endpoint limits of rho on each cell. Requires the last threshold to be
/// max |u| (so rho vanishes beyond it).
inline double layer_cake(const YoungFunction& G, const DistributionFunction& d) {
  double total = 0.0;
  double prev_G = G(d.thresholds.empty() ? 0.0 : d.thresholds.front());
  if (!d.thresholds.empty() && d.thresholds.front() > 0.0) {
    total += (prev_G - G(0.0)) * d.measures_ge.front();
  }
  for (std::size_t i = 0; i + 1 < d.thresholds.size(); ++i) {
    const double g_next = G(d.thresholds[i + 1]);
    total += (g_next - prev_G) * 0.5 * (d.measures[i] + d.measures_ge[i + 1]);
    prev_G = g_next;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Point location and polar meshes.

/// Bucketed point location with P1 interpolation. Points outside the mesh are
/// projected onto the nearest boundary edge.
class PointLocator {
 public:
  explicit PointLocator(const MeshDomain& mesh) : mesh_(mesh) {
    lo_ = hi_ = mesh.vertex(0);
    for (const auto& p : mesh.vertices()) {
      lo_.x = std::min(lo_.x, p.x);
      lo_.y = std::min(lo_.y, p.y);
      hi_.x = std::max(hi_.x, p.x);
      hi_.y = std::max(hi_.y, p.y);
    }
    n_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(mesh.triangle_count()))));
    cells_.assign(static_cast<std::size_t>(n_ * n_), {});
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      const auto& tri = mesh.triangle(t);
      int i0 = n_, i1 = -1, j0 = n_, j1 = -1;
      for (int v : tri) {
        const auto [i, j] = cell(mesh.vertex(v));
        i0 = std::min(i0, i);
        i1 = std::max(i1, i);
        j0 = std::min(j0, j);
        j1 = std::max(j1, j);
      }
      for (int j = j0; j <= j1; ++j) {
        for (int i = i0; i <= i1; ++i) cells_[static_cast<std::size_t>(j * n_ + i)].push_back(t);
      }
    }
  }

  double interpolate(const Eigen::VectorXd& u, Point p) const {
    const auto [i, j] = cell(p);
    if (inside_box(p)) {
      for (int t : cells_[static_cast<std::size_t>(j * n_ + i)]) {
        const auto& tri = mesh_.triangle(t);
        const Point& a = mesh_.vertex(tri[0]);
        const Point& b = mesh_.vertex(tri[1]);
        const Point& c = mesh_.vertex(tri[2]);
        const double inv = 1.0 / (2.0 * mesh_.area(t));
        const double l1 = ((c.y - a.y) * (p.x - a.x) + (a.x - c.x) * (p.y - a.y)) * inv;
        const double l2 = ((a.y - b.y) * (p.x - a.x) + (b.x - a.x) * (p.y - a.y)) * inv;
        double l[3] = {1.0 - l1 - l2, l1, l2};
        constexpr double tol = 1e-12;
        if (l[0] >= -tol && l[1] >= -tol && l[2] >= -tol) {
          // Snap round-off weights so points on vertices and edges reproduce nodal data exactly.
          double sum = 0.0;
          for (double& w : l) sum += (w = w < tol ? 0.0 : w);
          return (l[0] * u[tri[0]] + l[1] * u[tri[1]] + l[2] * u[tri[2]]) / sum;
        }
      }
    }
    double best = std::numeric_limits<double>::infinity();
    double value = 0.0;
    for (const auto& [ia, ib] : mesh_.boundary_edges()) {
      const Point& a = mesh_.vertex(ia);
      const Point& b = mesh_.vertex(ib);
      const double dx = b.x - a.x, dy = b.y - a.y;
      const double s = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / (dx * dx + dy * dy), 0.0, 1.0);
      const double d = std::hypot(a.x + s * dx - p.x, a.y + s * dy - p.y);
      if (d < best) {
        best = d;
        value = (1.0 - s) * u[ia] + s * u[ib];
      }
    }
    return value;
  }

 private:
  bool inside_box(Point p) const { return p.x >= lo_.x && p.x <= hi_.x && p.y >= lo_.y && p.y <= hi_.y; }

  std::pair<int, int> cell(Point p) const {
    auto idx = [&](double v, double lo, double hi) {
      const double w = hi > lo ? (v - lo) / (hi - lo) : 0.0;
      return std::clamp(static_cast<int>(w * n_), 0, n_ - 1);
    };
    return {idx(p.x, lo_.x, hi_.x), idx(p.y, lo_.y, hi_.y)};
  }

  const MeshDomain& mesh_;
  Point lo_{}, hi_{};
  int n_ = 1;
  std::vector<std::vector<int>> cells_;
};

/// Polar mesh: center vertex 0, then `rings` rings of `angles` vertices, ring k
/// at radius R k / rings, vertex j at angle axis_angle + 2 pi j / angles.
inline MeshDomain make_polar(Point center, double R, int rings, int angles, double axis_angle = 0.0) {
  if (!(R > 0.0) || rings < 1 || angles < 3) throw DomainError("make_polar: invalid resolution");
  std::vector<Point> v{center};
  for (int k = 1; k <= rings; ++k) {
    const double r = R * k / rings;
    for (int j = 0; j < angles; ++j) {
      const double th = axis_angle + 2.0 * std::numbers::pi * j / angles;
      v.push_back({center.x + r * std::cos(th), center.y + r * std::sin(th)});
    }
  }
  auto id = [&](int k, int j) { return 1 + (k - 1) * angles + (j % angles); };
  std::vector<Triangle> tris;
  std::vector<Edge> bnd;
  for (int j = 0; j < angles; ++j) tris.push_back({0, id(1, j), id(1, j + 1)});
  for (int k = 1; k < rings; ++k) {
    for (int j = 0; j < angles; ++j) {
      tris.push_back({id(k, j), id(k + 1, j), id(k + 1, j + 1)});
      tris.push_back({id(k, j), id(k + 1, j + 1), id(k, j + 1)});
    }
  }
  for (int j = 0; j < angles; ++j) bnd.push_back({id(rings, j), id(rings, j + 1)});
  return MeshDomain(std::move(v), std::move(tris), std::move(bnd));
}

struct DiskGeometry {
  Point center;
  double radius = 0.0;
};

/// Recognises a disk mesh: one boundary loop with all boundary vertices on a
/// common circle.
inline DiskGeometry disk_geometry(const MeshDomain& mesh) {
  if (mesh.boundary_loops().size() != 1) throw DomainError("symmetrize: domain is not a disk (boundary loops)");
  Point c{0.0, 0.0};
  int nb = 0;
  for (const auto& [a, b] : mesh.boundary_edges()) {
    c.x += mesh.vertex(a).x;
    c.y += mesh.vertex(a).y;
    ++nb;
  }
  c.x /= nb;
  c.y /= nb;
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  for (const auto& [a, b] : mesh.boundary_edges()) {
    const double r = distance(mesh.vertex(a), c);
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  if (!(rmax - rmin <= 1e-6 * rmax)) throw DomainError("symmetrize: domain is not a disk (boundary off circle)");
  return {c, 0.5 * (rmin + rmax)};
}

// ---------------------------------------------------------------------------
// Circular symmetrisation.

struct SymmetrizeOptions {
  int radial_bins = 64;
  int angles = 256;
  int levels = 32;  ///< levels in the per-bin report
  int jobs = 1;
};

struct SymmetrizedField {
  std::vector<double> radii;   ///< ring radii, increasing
  std::vector<double> levels;  ///< report levels
  std::vector<std::vector<double>> original_arc;  ///< [ring][level] arc measure of {u > t} on the ring
  std::vector<std::vector<double>> half_angle;    ///< [ring][level] half-angle of the cap with that measure
  std::shared_ptr<const MeshDomain> polar_mesh;
  ScalarField field;
};

/// Rearranges u on each ring of a polar grid into a profile that is
/// nonincreasing in the angular distance from `axis`.
inline SymmetrizedField symmetrize(const MeshDomain& mesh, const Eigen::VectorXd& u, Point axis,
                                   const SymmetrizeOptions& opts = {}) {
  const double axis_norm = std::hypot(axis.x, axis.y);
  if (!(axis_norm > 0.0)) throw DomainError("symmetrize: zero axis");
  if (opts.radial_bins < 1 || opts.angles < 4 || opts.levels < 1) throw DomainError("symmetrize: invalid options");
  const DiskGeometry disk = disk_geometry(mesh);
  const double axis_angle = std::atan2(axis.y, axis.x);
  auto polar = std::make_shared<const MeshDomain>(
      make_polar(disk.center, disk.radius, opts.radial_bins, opts.angles, axis_angle));
  const PointLocator locate(mesh);
  const int na = opts.angles;

  // Ring positions ordered by angular distance from the axis: 0, 1, na-1, 2, na-2, ...
  std::vector<int> slot_order{0};
  for (int d = 1; static_cast<int>(slot_order.size()) < na; ++d) {
    slot_order.push_back(d);
    if (static_cast<int>(slot_order.size()) < na) slot_order.push_back(na - d);
  }

  Eigen::VectorXd values(polar->vertex_count());
  values[0] = locate.interpolate(u, disk.center);
  SymmetrizedField out{{}, {}, {}, {}, polar, ScalarField(polar, Eigen::VectorXd::Zero(polar->vertex_count()))};
  out.radii.resize(static_cast<std::size_t>(opts.radial_bins));
  out.original_arc.assign(static_cast<std::size_t>(opts.radial_bins), {});
  out.half_angle.assign(static_cast<std::size_t>(opts.radial_bins), {});
  const double umin = u.minCoeff(), umax = u.maxCoeff();
  for (int l = 0; l < opts.levels; ++l) out.levels.push_back(umin + (umax - umin) * (l + 0.5) / opts.levels);

  parallel_for(opts.radial_bins, opts.jobs, [&](int k0) {
    const int k = k0 + 1;
    const auto sk = static_cast<std::size_t>(k0);
    const double r = disk.radius * k / opts.radial_bins;
    out.radii[sk] = r;
    std::vector<double> samples(static_cast<std::size_t>(na));
    for (int j = 0; j < na; ++j) samples[static_cast<std::size_t>(j)] = locate.interpolate(u, polar->vertex(1 + (k - 1) * na + j));
    for (double t : out.levels) {
      const auto above = std::count_if(samples.begin(), samples.end(), [&](double s) { return s > t; });
      out.original_arc[sk].push_back(2.0 * std::numbers::pi * r * static_cast<double>(above) / na);
      out.half_angle[sk].push_back(std::numbers::pi * static_cast<double>(above) / na);
    }
    std::stable_sort(samples.begin(), samples.end(), std::greater<>());
    for (int m = 0; m < na; ++m) {
      values[1 + (k - 1) * na + slot_order[static_cast<std::size_t>(m)]] = samples[static_cast<std::size_t>(m)];
    }
  });
  out.field = ScalarField(polar, values);
  return out;
}

inline SymmetrizedField symmetrize(const ScalarField& u, Point axis, const SymmetrizeOptions& opts = {}) {
  return symmetrize(*u.mesh, u.values, axis, opts);
}

// ---------------------------------------------------------------------------
// Test fields on the disk, in coordinates scaled to the unit disk. r2 is
// exactly 1 on boundary vertices.

struct DiskField {
  std::string name;
  std::function<double(double x, double y, double r2)> f;
};

inline const std::vector<DiskField>& disk_field_suite() {
  static const std::vector<DiskField> suite{
      {"radial_bump", [](double, double, double r2) { return (1.0 - r2) * (1.0 - r2); }},
      {"radial_angular", [](double x, double, double r2) { return (1.0 - r2) * (1.0 + 0.5 * x); }},
      {"bump_angular", [](double x, double y, double r2) { return (1.0 - r2) * (1.0 - r2) * std::exp(x + 0.3 * y); }},
      {"off_gauss",
       [](double x, double y, double) { return std::exp(-4.0 * ((x - 0.3) * (x - 0.3) + (y - 0.2) * (y - 0.2))); }},
      {"affine_trace", [](double x, double y, double) { return 1.0 + x + 0.5 * y * y; }},
      {"cap_exp", [](double x, double, double) { return std::exp(x); }},
      {"two_bump",
       [](double x, double y, double) {
         return std::exp(-8.0 * ((x - 0.4) * (x - 0.4) + y * y)) +
                std::exp(-8.0 * ((x + 0.3) * (x + 0.3) + (y - 0.3) * (y - 0.3)));
       }},
  };
  return suite;
}

inline const DiskField& disk_field(std::string_view name) {
  for (const auto& f : disk_field_suite()) {
    if (f.name == name) return f;
  }
  throw DomainError("unknown field '" + std::string(name) + "'");
}

inline Eigen::VectorXd sample_disk_field(const MeshDomain& mesh, const DiskField& field) {
  const DiskGeometry disk = disk_geometry(mesh);
  Eigen::VectorXd u(mesh.vertex_count());
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    const double x = (mesh.vertex(v).x - disk.center.x) / disk.radius;
    const double y = (mesh.vertex(v).y - disk.center.y) / disk.radius;
    u[v] = field.f(x, y, mesh.on_boundary(v) ? 1.0 : x * x + y * y);
  }
  return u;
}

// ---------------------------------------------------------------------------
// Checks.

/// Length of the level curve {u = t} inside the domain (relative perimeter
/// of {u > t}).
inline double level_curve_length(const MeshDomain& mesh, const Eigen::VectorXd& u, double t) {
  double total = 0.0;
  for (int k = 0; k < mesh.triangle_count(); ++k) {
    const auto& tri = mesh.triangle(k);
    Point cross[3];
    int nc = 0;
    for (int e = 0; e < 3; ++e) {
      const int a = tri[static_cast<std::size_t>(e)], b = tri[static_cast<std::size_t>((e + 1) % 3)];
      const double fa = u[a] - t, fb = u[b] - t;
      if ((fa > 0.0) != (fb > 0.0)) {
        const double s = fa / (fa - fb);
        const Point& pa = mesh.vertex(a);
        const Point& pb = mesh.vertex(b);
        if (nc < 3) cross[nc++] = {pa.x + s * (pb.x - pa.x), pa.y + s * (pb.y - pa.y)};
      }
    }
    if (nc == 2) total += distance(cross[0], cross[1]);
  }
  return total;
}

struct PerimeterHypothesis {
  bool holds = false;
  double worst_ratio = 0.0;  ///< min over levels of P / (gamma rho^{1/2})
};

/// Checks P({u > t}) >= gamma rho(t)^{1/2} with gamma = 2 sqrt(pi) on the
/// interior levels of the threshold grid where rho(t) > 0.
inline PerimeterHypothesis perimeter_hypothesis(const MeshDomain& mesh, const Eigen::VectorXd& u,
                                                int levels = 64) {
  const double gamma = 2.0 * std::sqrt(std::numbers::pi);
  const double umax = u.maxCoeff();
  PerimeterHypothesis out{true, std::numeric_limits<double>::infinity()};
  if (!(umax > 0.0)) return out;
  for (int l = 1; l < levels; ++l) {
    const double t = umax * l / levels;
    double rho = 0.0;
    for (int k = 0; k < mesh.triangle_count(); ++k) {
      const auto& tri = mesh.triangle(k);
      rho += detail::superlevel_area(mesh.area(k), u[tri[0]], u[tri[1]], u[tri[2]], t, true);
    }
    if (!(rho > 0.0)) continue;
    const double ratio = level_curve_length(mesh, u, t) / (gamma * std::sqrt(rho));
    out.worst_ratio = std::min(out.worst_ratio, ratio);
  }
  out.holds = out.worst_ratio >= 1.0 - 1e-9;
  return out;
}

struct PolyaSzegoReport {
  double lhs = 0.0;  ///< gradient modular of the symmetrised field
  double rhs = 0.0;  ///< gradient modular of the original field
  bool holds = false;
};

inline PolyaSzegoReport polya_szego_check(const YoungFunction& G, const ScalarField& u, const ScalarField& u_sharp) {
  PolyaSzegoReport r;
  r.lhs = gradient_modular(G, u_sharp);
  r.rhs = gradient_modular(G, u);
  r.holds = r.lhs <= r.rhs * 1.02;
  return r;
}

struct CapSymmetryReport {
  int contiguity_defect = 0;
  double S_window = 0.0;
  double S_arc = 0.0;
  double gap = 0.0;  ///< (S_window - S_arc) / S_arc
  bool pass = false;
  ShapeOptResult window;
  ArcOracleResult arc;
};

inline CapSymmetryReport cap_symmetry_check(const YoungFunction& G, const YoungFunction& H,
                                            const std::shared_ptr<const MeshDomain>& mesh, double alpha,
                                            const SolverConfig& config, int jobs = 1) {
  disk_geometry(*mesh);
  ShapeOptions opts;
  opts.jobs = jobs;
  ShapeOptResult w = optimize_window(G, H, mesh, alpha, config, opts);
  ArcOracleResult a = arc_oracle(G, H, mesh, alpha, config, jobs);
  CapSymmetryReport r{contiguity_defect(*mesh, w.window), w.S_alpha, a.S, 0.0, false, std::move(w), std::move(a)};
  r.gap = std::abs(r.S_window - r.S_arc) / r.S_arc;
  r.pass = r.contiguity_defect <= 1 && r.gap <= 0.03;
  return r;
}

}  // namespace orlicz
