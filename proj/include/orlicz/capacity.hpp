#pragma once

// G-capacity of compact sets on a truncated box, and the experiments relating
// capacity to the trace constant: invisibility of small obstacles and
// continuity of S_A under Hausdorff perturbations of A.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "orlicz/errors.hpp"
#include "orlicz/mesh.hpp"
#include "orlicz/modular.hpp"
#include "orlicz/parallel.hpp"
#include "orlicz/trace_solver.hpp"
#include "orlicz/young.hpp"

namespace orlicz {

enum class ClampMode { equality, inequality };

struct CapacityEstimate {
  double value = 0.0;
  double box_radius = 0.0;
  double mesh_h = 0.0;
  ScalarField potential;
  int iterations = 0;
  bool converged = false;
};

/// Minimises Phi_G(phi) + Phi_G(|grad phi|) over P1 fields on the box mesh with
/// phi = 1 on `obstacle` (equality) or phi >= 1 there (inequality, by
/// projected descent). The box boundary carries the natural condition.
inline CapacityEstimate estimate_capacity(const YoungFunction& G, const std::shared_ptr<const MeshDomain>& box,
                                          std::vector<int> obstacle, double R, double h, const SolverConfig& config,
                                          ClampMode mode = ClampMode::equality) {
  config.validate();
  const MeshDomain& mesh = *box;
  const int n = mesh.vertex_count();
  std::sort(obstacle.begin(), obstacle.end());
  obstacle.erase(std::unique(obstacle.begin(), obstacle.end()), obstacle.end());
  std::vector<char> clamp(static_cast<std::size_t>(n), 0);
  for (int v : obstacle) {
    if (v < 0 || v >= n) throw DomainError("estimate_capacity: obstacle vertex out of range");
    clamp[static_cast<std::size_t>(v)] = 1;
  }
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
  for (int v : obstacle) phi[v] = 1.0;
  CapacityEstimate out{0.0, R, h, ScalarField(box, phi), 0, true};
  if (obstacle.empty()) return out;
  if (static_cast<int>(obstacle.size()) == n) {
    out.value = objective(G, mesh, phi);
    return out;
  }
  for (int v : obstacle) {
    if (mesh.on_boundary(v)) throw DomainError("estimate_capacity: obstacle touches the box boundary");
  }

  const double eps = config.eps_reg * mesh.diameter();
  double J = objective(G, mesh, phi);
  std::vector<double> history{J};
  out.converged = false;
  std::optional<detail::LaggedMetric> fixed_metric;
  if (mode == ClampMode::equality) fixed_metric.emplace(mesh, clamp);

  for (int it = 1; it <= config.max_iters; ++it) {
    const Eigen::VectorXd g = objective_gradient(G, mesh, phi, eps);
    std::optional<detail::LaggedMetric> active_metric;
    detail::LaggedMetric* metric = nullptr;
    if (mode == ClampMode::equality) {
      metric = &*fixed_metric;
    } else {
      // Obstacle vertices sitting on the bound whose gradient pushes them down.
      std::vector<char> active(static_cast<std::size_t>(n), 0);
      for (int v : obstacle) active[static_cast<std::size_t>(v)] = phi[v] <= 1.0 + 1e-12 && g[v] >= 0.0;
      active_metric.emplace(mesh, active);
      metric = &*active_metric;
    }
    metric->assemble(G, phi, eps);
    const Eigen::VectorXd r = metric->restrict(g);
    const Eigen::VectorXd d = metric->extend(-metric->solve(r));
    if (!(g.dot(d) < -1e-15 * J)) {
      out.converged = true;
      break;
    }
    double s = config.step0;
    bool accepted = false;
    Eigen::VectorXd trial;
    double J_trial = J;
    while (s > 1e-14) {
      trial = phi + s * d;
      if (mode == ClampMode::inequality) {
        for (int v : obstacle) trial[v] = std::max(trial[v], 1.0);
      }
      J_trial = objective(G, mesh, trial);
      if (J_trial <= J + config.armijo_c * g.dot(trial - phi)) {
        accepted = true;
        break;
      }
      s *= config.armijo_shrink;
    }
    if (!accepted) {
      out.converged = -g.dot(d) <= 1e-9 * J;
      break;
    }
    phi = trial;
    J = J_trial;
    out.iterations = it;
    history.push_back(J);
    const auto k = history.size();
    if (k > static_cast<std::size_t>(config.stall_window) &&
        history[k - 1 - static_cast<std::size_t>(config.stall_window)] - J <= config.tol_rel * J) {
      out.converged = true;
      break;
    }
  }
  out.value = J;
  out.potential = ScalarField(box, phi);
  return out;
}

inline CapacityEstimate estimate_capacity(const YoungFunction& G, const std::shared_ptr<const MeshDomain>& box,
                                          const InteriorSubset& obstacle, double R, double h,
                                          const SolverConfig& config, ClampMode mode = ClampMode::equality) {
  return estimate_capacity(G, box, subset_vertices(*box, obstacle), R, h, config, mode);
}

/// Disk-shaped obstacle. radius 0 means the single vertex nearest to center.
struct ObstacleSpec {
  std::string id;
  Point center{};
  double radius = 0.0;
  bool empty = false;
};

inline std::vector<int> obstacle_vertices(const MeshDomain& mesh, const ObstacleSpec& o) {
  if (o.empty) return {};
  if (o.radius == 0.0) return {nearest_vertex(mesh, o.center)};
  const auto tris = triangles_in_disk(mesh, o.center, o.radius);
  if (tris.triangles.empty()) throw DomainError("obstacle '" + o.id + "' contains no triangle centroid");
  return subset_vertices(mesh, tris);
}

/// Vanishing constraint used for S_A: the clamped vertex itself for point
/// obstacles, the one-ring closure for disk obstacles.
inline VanishingConstraint obstacle_constraint(const MeshDomain& mesh, const ObstacleSpec& o) {
  if (o.empty) return VanishingConstraint::none();
  if (o.radius == 0.0) return VanishingConstraint::from_vertices(mesh, {nearest_vertex(mesh, o.center)});
  const auto tris = triangles_in_disk(mesh, o.center, o.radius);
  if (tris.triangles.empty()) throw DomainError("obstacle '" + o.id + "' contains no triangle centroid");
  return VanishingConstraint::from_hole(mesh, tris);
}

/// Capacity on the box [c - R, c + R]^2 around the obstacle center.
inline CapacityEstimate obstacle_capacity(const YoungFunction& G, const ObstacleSpec& o, double R, double h,
                                          const SolverConfig& config, ClampMode mode = ClampMode::equality) {
  auto box = std::make_shared<const MeshDomain>(make_square(2.0 * R, h, {o.center.x - R, o.center.y - R}));
  return estimate_capacity(G, box, obstacle_vertices(*box, o), R, h, config, mode);
}

struct InvisibilityCase {
  std::shared_ptr<const MeshDomain> domain;
  double h = 0.0;
  ObstacleSpec obstacle;
};

struct InvisibilityRow {
  std::string obstacle_id;
  double R = 0.0;
  double h = 0.0;
  double capacity = 0.0;
  double S_A = 0.0;
  double S_empty = 0.0;
  double gap = 0.0;
};

struct InvisibilityTable {
  std::vector<InvisibilityRow> rows;
  bool gap_decreasing = false;  ///< gap strictly decreases along the case sequence
};

inline InvisibilityTable invisibility_experiment(const YoungFunction& G, const YoungFunction& H,
                                                 const std::vector<InvisibilityCase>& cases, double R,
                                                 const SolverConfig& config, int jobs = 1) {
  InvisibilityTable table;
  table.rows.resize(cases.size());
  parallel_for(static_cast<int>(cases.size()), jobs, [&](int i) {
    const auto& c = cases[static_cast<std::size_t>(i)];
    auto& row = table.rows[static_cast<std::size_t>(i)];
    row.obstacle_id = c.obstacle.id;
    row.R = R;
    row.h = c.h;
    const TraceSolve s0 = solve(G, H, c.domain, VanishingConstraint::none(), config);
    row.S_empty = s0.S_value;
    if (c.obstacle.empty) {
      row.S_A = s0.S_value;
    } else {
      row.S_A = solve(G, H, c.domain, obstacle_constraint(*c.domain, c.obstacle), config).S_value;
      row.capacity = obstacle_capacity(G, c.obstacle, R, c.h, config).value;
    }
    row.gap = std::abs(row.S_A - row.S_empty);
  });
  table.gap_decreasing = true;
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    table.gap_decreasing = table.gap_decreasing && table.rows[i].gap < table.rows[i - 1].gap;
  }
  return table;
}

struct HausdorffRow {
  int k = 0;
  double dist_H = 0.0;
  double S_Ak = 0.0;
  double S_A = 0.0;
  double gap = 0.0;
};

struct HausdorffTable {
  std::vector<HausdorffRow> rows;
  bool gaps_nonincreasing = false;  ///< within the slack passed to the experiment
};

/// Solves S_{A_k} for each perturbation and tabulates |S_{A_k} - S_A| against
/// the Hausdorff distance of the element-vertex sets.
inline HausdorffTable hausdorff_continuity_experiment(const YoungFunction& G, const YoungFunction& H,
                                                      const std::shared_ptr<const MeshDomain>& mesh,
                                                      const InteriorSubset& A,
                                                      const std::vector<InteriorSubset>& perturbations,
                                                      const SolverConfig& config, int jobs = 1,
                                                      double slack = 1e-3) {
  if (A.triangles.empty()) throw DomainError("hausdorff_continuity_experiment: empty reference set");
  const auto pts_A = subset_points(*mesh, A);
  const int m = static_cast<int>(perturbations.size());
  HausdorffTable table;
  table.rows.resize(perturbations.size());
  for (int k = 0; k < m; ++k) {
    const auto& Ak = perturbations[static_cast<std::size_t>(k)];
    if (Ak.triangles.empty()) throw DomainError("hausdorff_continuity_experiment: empty perturbation");
    table.rows[static_cast<std::size_t>(k)].k = k + 1;
    table.rows[static_cast<std::size_t>(k)].dist_H = hausdorff_distance(pts_A, subset_points(*mesh, Ak));
    if (k > 0 && table.rows[static_cast<std::size_t>(k)].dist_H > table.rows[static_cast<std::size_t>(k - 1)].dist_H) {
      throw DomainError("hausdorff_continuity_experiment: Hausdorff distances must not increase");
    }
  }
  std::vector<double> S(static_cast<std::size_t>(m + 1));
  parallel_for(m + 1, jobs, [&](int i) {
    const InteriorSubset& set = i == 0 ? A : perturbations[static_cast<std::size_t>(i - 1)];
    S[static_cast<std::size_t>(i)] = solve(G, H, mesh, VanishingConstraint::from_hole(*mesh, set), config).S_value;
  });
  table.gaps_nonincreasing = true;
  for (int k = 0; k < m; ++k) {
    auto& row = table.rows[static_cast<std::size_t>(k)];
    row.S_A = S[0];
    row.S_Ak = S[static_cast<std::size_t>(k + 1)];
    row.gap = std::abs(row.S_Ak - row.S_A);
    if (k > 0 && row.gap > table.rows[static_cast<std::size_t>(k - 1)].gap + slack) table.gaps_nonincreasing = false;
  }
  return table;
}

}  // namespace orlicz
