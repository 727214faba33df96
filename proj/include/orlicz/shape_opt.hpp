#pragma once

// Window and hole optimisation under a measure constraint, the exhaustive
// contiguous-arc oracle on disks, and the annular-band blow-up experiment.
//
// Shapes are updated by rearrangement: the cells (boundary edges or
// triangles) on which the current extremal is smallest are selected, greedily,
// until the requested measure is reached. The target measure is approached by
// geometric continuation from the unconstrained extremal; then rearrangement
// and solve alternate while the constant strictly decreases.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "orlicz/errors.hpp"
#include "orlicz/mesh.hpp"
#include "orlicz/parallel.hpp"
#include "orlicz/trace_solver.hpp"
#include "orlicz/young.hpp"

namespace orlicz {

struct ShapeOptions {
  double continuation_growth = 2.0;  ///< measure ratio between consecutive continuation stages
  int max_outer = 25;
  int jobs = 1;
};

struct ShapeOptResult {
  bool is_window = true;
  BoundarySubset window{};
  InteriorSubset hole{};
  TraceSolve best_solve;
  double S_alpha = 0.0;
  double alpha_requested = 0.0;
  double alpha_achieved = 0.0;
  int outer_iterations = 0;
  std::vector<std::pair<std::uint64_t, double>> history{};  ///< accepted (shape hash, S) at the target measure
};

inline std::uint64_t shape_hash(const std::vector<int>& cells) {
  std::uint64_t h = 1469598103934665603ULL;
  for (int c : cells) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(c));
    h *= 1099511628211ULL;
  }
  return h;
}

namespace detail {

/// Stable greedy prefix of `order` whose cumulative measure reaches alpha.
inline std::vector<int> greedy_prefix(const std::vector<int>& order, std::span<const double> measure, double alpha) {
  std::vector<int> out;
  double acc = 0.0;
  const double tol = 1e-12 * std::max(1.0, alpha);
  for (int i : order) {
    if (acc >= alpha - tol) break;
    out.push_back(i);
    acc += measure[static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace detail

/// Boundary edges sorted by the edge-average of |u| (ties by edge index),
/// selected greedily until the measure reaches alpha.
inline BoundarySubset rearrange_window(const MeshDomain& mesh, const Eigen::VectorXd& u, double alpha) {
  if (!(alpha > 0.0) || !(alpha < mesh.perimeter())) {
    throw DomainError("rearrange_window: need 0 < alpha < perimeter");
  }
  const int ne = mesh.boundary_edge_count();
  std::vector<double> key(static_cast<std::size_t>(ne));
  for (int e = 0; e < ne; ++e) {
    const auto& [a, b] = mesh.boundary_edge(e);
    key[static_cast<std::size_t>(e)] = 0.5 * (std::abs(u[a]) + std::abs(u[b]));
  }
  std::vector<int> order(static_cast<std::size_t>(ne));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return key[static_cast<std::size_t>(x)] < key[static_cast<std::size_t>(y)]; });
  return make_boundary_subset(mesh, detail::greedy_prefix(order, mesh.edge_lengths(), alpha));
}

inline BoundarySubset rearrange_window(const ScalarField& u, double alpha) {
  return rearrange_window(*u.mesh, u.values, alpha);
}

/// Triangles sorted by the triangle-average of |u|; ties are broken by the
/// triangle-average of `tie_break` (when given), then by index.
inline InteriorSubset rearrange_hole(const MeshDomain& mesh, const Eigen::VectorXd& u, double alpha,
                                     const Eigen::VectorXd* tie_break = nullptr) {
  if (!(alpha > 0.0) || !(alpha < mesh.total_area())) throw DomainError("rearrange_hole: need 0 < alpha < area");
  const int nt = mesh.triangle_count();
  auto avg = [&](const Eigen::VectorXd& f, int t) {
    const auto& tri = mesh.triangle(t);
    return (std::abs(f[tri[0]]) + std::abs(f[tri[1]]) + std::abs(f[tri[2]])) / 3.0;
  };
  std::vector<std::pair<double, double>> key(static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) key[static_cast<std::size_t>(t)] = {avg(u, t), tie_break ? avg(*tie_break, t) : 0.0};
  std::vector<int> order(static_cast<std::size_t>(nt));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return key[static_cast<std::size_t>(x)] < key[static_cast<std::size_t>(y)]; });
  return make_interior_subset(mesh, detail::greedy_prefix(order, mesh.areas(), alpha));
}

/// Measure of the discrete zero set: boundary edges (window) or triangles
/// (hole) whose vertices all satisfy |u| <= tol.
inline double boundary_zero_measure(const MeshDomain& mesh, const Eigen::VectorXd& u, double tol = 1e-10) {
  double m = 0.0;
  for (int e = 0; e < mesh.boundary_edge_count(); ++e) {
    const auto& [a, b] = mesh.boundary_edge(e);
    if (std::abs(u[a]) <= tol && std::abs(u[b]) <= tol) m += mesh.edge_length(e);
  }
  return m;
}

inline double interior_zero_measure(const MeshDomain& mesh, const Eigen::VectorXd& u, double tol = 1e-10) {
  double m = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangle(t);
    if (std::abs(u[tri[0]]) <= tol && std::abs(u[tri[1]]) <= tol && std::abs(u[tri[2]]) <= tol) m += mesh.area(t);
  }
  return m;
}

/// Number of maximal runs of selected edges along the (single) boundary loop,
/// minus one. A contiguous arc has defect 0.
inline int contiguity_defect(const MeshDomain& mesh, const BoundarySubset& w) {
  if (w.edges.empty()) return 0;
  const auto& loop = mesh.boundary_loops().front();
  std::vector<char> sel(static_cast<std::size_t>(mesh.boundary_edge_count()), 0);
  for (int e : w.edges) sel[static_cast<std::size_t>(e)] = 1;
  int runs = 0;
  const std::size_t n = loop.size();
  for (std::size_t i = 0; i < n; ++i) {
    const bool cur = sel[static_cast<std::size_t>(loop[i])] != 0;
    const bool prev = sel[static_cast<std::size_t>(loop[(i + n - 1) % n])] != 0;
    if (cur && !prev) ++runs;
  }
  if (runs == 0) return 0;  // the whole loop is selected
  return runs - 1;
}

namespace detail {

inline const std::vector<int>& cells_of(const BoundarySubset& s) { return s.edges; }
inline const std::vector<int>& cells_of(const InteriorSubset& s) { return s.triangles; }

template <class Shape, class Rearrange, class MakeConstraint>
ShapeOptResult optimize_shape(const YoungFunction& G, const YoungFunction& H,
                              const std::shared_ptr<const MeshDomain>& mesh, double alpha, const SolverConfig& config,
                              const ShapeOptions& opts, double max_cell_measure, Rearrange&& rearrange,
                              MakeConstraint&& make_constraint) {
  TraceSolve current = solve(G, H, mesh, VanishingConstraint::none(), config);
  // The first stage selects a single cell; each later stage grows the measure
  // geometrically, so the shape grows from where the extremal is smallest.
  const double growth = opts.continuation_growth;
  if (!(growth > 1.0) || opts.max_outer < 0) throw DomainError("ShapeOptions: need continuation_growth > 1");
  const int stages = 1 + std::max(0, static_cast<int>(std::ceil(std::log(alpha / max_cell_measure) / std::log(growth))));
  Shape shape{};
  for (int k = 1; k <= stages; ++k) {
    shape = rearrange(current.extremal.values, alpha * std::pow(growth, k - stages));
    current = solve(G, H, mesh, make_constraint(shape), config, current.extremal.values);
  }
  std::vector<std::pair<std::uint64_t, double>> history{{shape_hash(cells_of(shape)), current.S_value}};
  int outer = 0;
  for (; outer < opts.max_outer; ++outer) {
    Shape next = rearrange(current.extremal.values, alpha);
    if (next == shape) break;
    TraceSolve trial = solve(G, H, mesh, make_constraint(next), config, current.extremal.values);
    if (!(trial.S_value < current.S_value * (1.0 - 1e-12))) break;
    shape = std::move(next);
    current = std::move(trial);
    history.push_back({shape_hash(cells_of(shape)), current.S_value});
  }
  const double S = current.S_value;
  ShapeOptResult res{.best_solve = std::move(current)};
  res.S_alpha = S;
  res.alpha_requested = alpha;
  res.alpha_achieved = shape.achieved_measure;
  res.outer_iterations = outer;
  res.history = std::move(history);
  if constexpr (std::is_same_v<Shape, BoundarySubset>) {
    res.is_window = true;
    res.window = std::move(shape);
  } else {
    res.is_window = false;
    res.hole = std::move(shape);
  }
  return res;
}

}  // namespace detail

/// Minimises S_{G,H}(W) over windows W with measure ~ alpha.
inline ShapeOptResult optimize_window(const YoungFunction& G, const YoungFunction& H,
                                      const std::shared_ptr<const MeshDomain>& mesh, double alpha,
                                      const SolverConfig& config, const ShapeOptions& opts = {}) {
  if (!(alpha > 0.0) || !(alpha < mesh->perimeter())) throw DomainError("optimize_window: need 0 < alpha < perimeter");
  return detail::optimize_shape<BoundarySubset>(
      G, H, mesh, alpha, config, opts, mesh->max_boundary_edge_length(),
      [&](const Eigen::VectorXd& u, double a) { return rearrange_window(*mesh, u, a); },
      [&](const BoundarySubset& w) { return VanishingConstraint::from_window(*mesh, w); });
}

/// Minimises S_A over holes A (unions of triangles) with area ~ alpha.
inline ShapeOptResult optimize_hole(const YoungFunction& G, const YoungFunction& H,
                                    const std::shared_ptr<const MeshDomain>& mesh, double alpha,
                                    const SolverConfig& config, const ShapeOptions& opts = {}) {
  if (!(alpha > 0.0) || !(alpha < mesh->total_area())) throw DomainError("optimize_hole: need 0 < alpha < area");
  // Ties among vanishing triangles are broken by the unconstrained extremal.
  const Eigen::VectorXd free_extremal = solve(G, H, mesh, VanishingConstraint::none(), config).extremal.values;
  try {
    return detail::optimize_shape<InteriorSubset>(
        G, H, mesh, alpha, config, opts, mesh->max_area(),
        [&](const Eigen::VectorXd& u, double a) { return rearrange_hole(*mesh, u, a, &free_extremal); },
        [&](const InteriorSubset& a) { return VanishingConstraint::from_hole(*mesh, a); });
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(std::string("optimize_hole: alpha too large to leave a free boundary region: ") + e.what());
  }
}

struct ArcOracleResult {
  BoundarySubset best_arc;
  double S = 0.0;
  int best_start = 0;
  std::vector<double> arc_S;  ///< S for the arc starting at each loop position
};

/// Contiguous run of boundary edges starting at loop position `start`,
/// extended until its measure reaches alpha.
inline BoundarySubset contiguous_arc(const MeshDomain& mesh, int start, double alpha) {
  const auto& loop = mesh.boundary_loops().front();
  const int n = static_cast<int>(loop.size());
  std::vector<int> edges;
  double acc = 0.0;
  const double tol = 1e-12 * std::max(1.0, alpha);
  for (int k = 0; k < n && acc < alpha - tol; ++k) {
    const int e = loop[static_cast<std::size_t>((start + k) % n)];
    edges.push_back(e);
    acc += mesh.edge_length(e);
  }
  return make_boundary_subset(mesh, std::move(edges));
}

/// Exhaustive search over contiguous boundary arcs (one per start vertex).
inline ArcOracleResult arc_oracle(const YoungFunction& G, const YoungFunction& H,
                                  const std::shared_ptr<const MeshDomain>& mesh, double alpha,
                                  const SolverConfig& config, int jobs = 1) {
  if (mesh->boundary_loops().size() != 1) throw DomainError("arc_oracle: needs a single boundary loop");
  if (!(alpha > 0.0) || !(alpha < mesh->perimeter())) throw DomainError("arc_oracle: need 0 < alpha < perimeter");
  const int n = static_cast<int>(mesh->boundary_loops().front().size());
  ArcOracleResult res;
  res.arc_S.assign(static_cast<std::size_t>(n), 0.0);
  parallel_for(n, jobs, [&](int i) {
    const auto arc = contiguous_arc(*mesh, i, alpha);
    res.arc_S[static_cast<std::size_t>(i)] =
        solve(G, H, mesh, VanishingConstraint::from_window(*mesh, arc), config).S_value;
  });
  res.best_start = static_cast<int>(std::min_element(res.arc_S.begin(), res.arc_S.end()) - res.arc_S.begin());
  res.S = res.arc_S[static_cast<std::size_t>(res.best_start)];
  res.best_arc = contiguous_arc(*mesh, res.best_start, alpha);
  return res;
}

struct BlowupRow {
  double eps = 0.0;
  double delta = 0.0;
  double alpha_achieved = 0.0;
  double S = 0.0;
  double multiplier = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
};

struct BlowupTable {
  std::vector<BlowupRow> rows;
  bool monotone = false;      ///< S nondecreasing along the (decreasing) eps sequence
  double growth_ratio = 0.0;  ///< last S / first S
};

/// Band A_{eps,delta} with the smallest delta whose area reaches alpha.
inline InteriorSubset band_with_area(const MeshDomain& mesh, double eps, double alpha, double* delta_out = nullptr) {
  std::vector<std::pair<double, int>> by_dist;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double d = mesh.distance_to_boundary(mesh.centroid(t));
    if (d >= eps) by_dist.emplace_back(d, t);
  }
  std::stable_sort(by_dist.begin(), by_dist.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<int> tris;
  double acc = 0.0;
  double delta = eps;
  for (const auto& [d, t] : by_dist) {
    if (acc >= alpha) break;
    tris.push_back(t);
    acc += mesh.area(t);
    delta = d;
  }
  if (acc < alpha) throw InfeasibleError("band_with_area: not enough area beyond eps");
  if (delta_out) *delta_out = delta;
  return make_interior_subset(mesh, std::move(tris));
}

inline BlowupTable blowup_experiment(const YoungFunction& G, const YoungFunction& H,
                                     const std::shared_ptr<const MeshDomain>& mesh, double alpha,
                                     const std::vector<double>& eps_sequence, const SolverConfig& config,
                                     int jobs = 1) {
  if (eps_sequence.empty()) throw DomainError("blowup_experiment: empty eps sequence");
  for (std::size_t i = 1; i < eps_sequence.size(); ++i) {
    if (!(eps_sequence[i] < eps_sequence[i - 1])) throw DomainError("blowup_experiment: eps must decrease");
  }
  BlowupTable table;
  table.rows.resize(eps_sequence.size());
  parallel_for(static_cast<int>(eps_sequence.size()), jobs, [&](int i) {
    auto& row = table.rows[static_cast<std::size_t>(i)];
    row.eps = eps_sequence[static_cast<std::size_t>(i)];
    const auto band = band_with_area(*mesh, row.eps, alpha, &row.delta);
    row.alpha_achieved = band.achieved_measure;
    const auto s = solve(G, H, mesh, VanishingConstraint::from_hole(*mesh, band), config);
    row.S = s.S_value;
    row.multiplier = s.multiplier;
    row.kkt_residual = s.kkt_residual;
    row.iterations = s.iterations;
  });
  table.monotone = true;
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    table.monotone = table.monotone && table.rows[i].S >= table.rows[i - 1].S;
  }
  table.growth_ratio = table.rows.back().S / table.rows.front().S;
  return table;
}

}  // namespace orlicz
