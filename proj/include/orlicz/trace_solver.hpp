#pragma once

// Discrete trace constant
//
//   S_{G,H}(constraint) = inf { Phi_G(|grad u|) + Phi_G(u) : Phi_H(u) = 1 on the boundary,
//                                u = 0 on the constrained vertices }
//
// computed by a preconditioned projected-gradient descent on the constraint
// manifold. Each step takes the tangential gradient in the metric of the
// lagged operator
//
//   A(u) = int g(q)/q grad(phi_i).grad(phi_j) + g(|u|)/|u| phi_i phi_j,
//
// backtracks on J along the step, and maps back to the manifold by exact
// scalar rescaling.

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "orlicz/errors.hpp"
#include "orlicz/mesh.hpp"
#include "orlicz/modular.hpp"
#include "orlicz/young.hpp"

namespace orlicz {

/// Vertices on which admissible fields vanish.
struct VanishingConstraint {
  enum class Kind { none, window, hole, vertices };

  Kind kind = Kind::none;
  BoundarySubset window;
  InteriorSubset hole;
  std::vector<int> zero_dofs;  ///< sorted, unique

  double achieved_measure() const {
    switch (kind) {
      case Kind::window:
        return window.achieved_measure;
      case Kind::hole:
        return hole.achieved_measure;
      default:
        return 0.0;
    }
  }

  static VanishingConstraint none() { return {}; }

  /// Zero on both endpoints of every selected boundary edge.
  static VanishingConstraint from_window(const MeshDomain& mesh, BoundarySubset w) {
    VanishingConstraint c;
    c.kind = Kind::window;
    for (int e : w.edges) {
      if (e < 0 || e >= mesh.boundary_edge_count()) throw DomainError("window edge out of range");
      c.zero_dofs.push_back(mesh.boundary_edge(e)[0]);
      c.zero_dofs.push_back(mesh.boundary_edge(e)[1]);
    }
    c.window = std::move(w);
    c.finish();
    return c;
  }

  /// Zero on the one-ring closure of the hole: every vertex of every triangle
  /// that shares a vertex with a selected triangle.
  static VanishingConstraint from_hole(const MeshDomain& mesh, InteriorSubset a) {
    VanishingConstraint c;
    c.kind = Kind::hole;
    for (int v : subset_vertices(mesh, a)) {
      for (int t : mesh.vertex_triangles()[static_cast<std::size_t>(v)]) {
        for (int w : mesh.triangle(t)) c.zero_dofs.push_back(w);
      }
    }
    c.hole = std::move(a);
    c.finish();
    return c;
  }

  static VanishingConstraint from_vertices(const MeshDomain& mesh, std::vector<int> vertices) {
    VanishingConstraint c;
    c.kind = Kind::vertices;
    for (int v : vertices) {
      if (v < 0 || v >= mesh.vertex_count()) throw DomainError("clamped vertex out of range");
    }
    c.zero_dofs = std::move(vertices);
    c.finish();
    return c;
  }

  std::vector<char> mask(int n) const {
    std::vector<char> m(static_cast<std::size_t>(n), 0);
    for (int v : zero_dofs) m[static_cast<std::size_t>(v)] = 1;
    return m;
  }

 private:
  void finish() {
    std::sort(zero_dofs.begin(), zero_dofs.end());
    zero_dofs.erase(std::unique(zero_dofs.begin(), zero_dofs.end()), zero_dofs.end());
  }
};

struct SolverConfig {
  double eps_reg = 1e-8;  ///< regularisation, relative to the mesh diameter
  double step0 = 1.0;
  double armijo_c = 1e-4;
  double armijo_shrink = 0.5;
  int max_iters = 400;
  double tol_rel = 1e-10;  ///< relative J-decrease over `stall_window` iterations
  int stall_window = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(eps_reg > 0.0) || !(step0 > 0.0) || !(armijo_c > 0.0 && armijo_c <= 0.5) ||
        !(armijo_shrink > 0.0 && armijo_shrink < 1.0) || max_iters <= 0 || !(tol_rel > 0.0) || stall_window <= 0) {
      throw DomainError("SolverConfig: parameters out of range");
    }
  }
};

struct TraceSolve {
  ScalarField extremal;
  double S_value = 0.0;
  double multiplier = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  double eps_used = 0.0;
  double achieved_measure = 0.0;
  std::vector<double> history;  ///< J after each accepted step
};

// ---------------------------------------------------------------------------
// Functional and its first variation.

inline double objective(const YoungFunction& G, const MeshDomain& mesh, const Eigen::VectorXd& u) {
  return gradient_modular(G, mesh, u) + bulk_modular(G, mesh, u);
}

inline double objective(const YoungFunction& G, const ScalarField& u) { return objective(G, *u.mesh, u.values); }

namespace detail {
inline double regularized_quotient(const YoungFunction& G, double t, double eps) {
  const double te = std::sqrt(t * t + eps * eps);
  return G.derivative_unchecked(te) / te;
}
}  // namespace detail

/// Nodal covector <J'(u), phi_i> with g(q)/q evaluated at q_eps = sqrt(q^2 + eps^2)
/// and g(|u|)/|u| at sqrt(u^2 + eps^2). Entries flagged in `zero_mask` are 0.
inline Eigen::VectorXd objective_gradient(const YoungFunction& G, const MeshDomain& mesh, const Eigen::VectorXd& u,
                                          double eps, const std::vector<char>* zero_mask = nullptr) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(mesh.vertex_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangle(t);
    const auto grads = p1_basis_gradients(mesh, t);
    const auto gu = p1_gradient(mesh, t, u);
    const double area = mesh.area(t);
    const double coef = area * detail::regularized_quotient(G, std::hypot(gu[0], gu[1]), eps);
    const double ua = u[tri[0]], ub = u[tri[1]], uc = u[tri[2]];
    std::array<double, 3> mass{0.0, 0.0, 0.0};
    for (const auto& q : quadrature::kTriangle4) {
      const double uq = q.l0 * ua + q.l1 * ub + q.l2 * uc;
      const double f = area * q.w * detail::regularized_quotient(G, std::abs(uq), eps) * uq;
      mass[0] += f * q.l0;
      mass[1] += f * q.l1;
      mass[2] += f * q.l2;
    }
    for (int i = 0; i < 3; ++i) {
      const auto& gi = grads[static_cast<std::size_t>(i)];
      r[tri[static_cast<std::size_t>(i)]] += coef * (gi[0] * gu[0] + gi[1] * gu[1]) + mass[static_cast<std::size_t>(i)];
    }
  }
  if (zero_mask) {
    for (int v = 0; v < mesh.vertex_count(); ++v) {
      if ((*zero_mask)[static_cast<std::size_t>(v)]) r[v] = 0.0;
    }
  }
  return r;
}

/// Nodal covector of the boundary constraint: int h(|u|)/|u| u phi_i ds.
inline Eigen::VectorXd constraint_gradient(const YoungFunction& H, const MeshDomain& mesh, const Eigen::VectorXd& u,
                                           double eps, const std::vector<char>* zero_mask = nullptr) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(mesh.vertex_count());
  for (int e = 0; e < mesh.boundary_edge_count(); ++e) {
    const auto& [va, vb] = mesh.boundary_edge(e);
    const double len = mesh.edge_length(e);
    for (const auto& q : quadrature::kEdge3) {
      const double uq = (1.0 - q.s) * u[va] + q.s * u[vb];
      const double f = len * q.w * detail::regularized_quotient(H, std::abs(uq), eps) * uq;
      b[va] += f * (1.0 - q.s);
      b[vb] += f * q.s;
    }
  }
  if (zero_mask) {
    for (int v = 0; v < mesh.vertex_count(); ++v) {
      if ((*zero_mask)[static_cast<std::size_t>(v)]) b[v] = 0.0;
    }
  }
  return b;
}

namespace detail {

/// Lagged-coefficient operator restricted to free vertices, refactorised per
/// iteration on a fixed sparsity pattern.
class LaggedMetric {
 public:
  LaggedMetric(const MeshDomain& mesh, const std::vector<char>& zero_mask) : mesh_(mesh) {
    free_index_.assign(static_cast<std::size_t>(mesh.vertex_count()), -1);
    for (int v = 0; v < mesh.vertex_count(); ++v) {
      if (!zero_mask[static_cast<std::size_t>(v)]) {
        free_index_[static_cast<std::size_t>(v)] = static_cast<int>(free_vertices_.size());
        free_vertices_.push_back(v);
      }
    }
  }

  int free_count() const { return static_cast<int>(free_vertices_.size()); }
  const std::vector<int>& free_vertices() const { return free_vertices_; }

  Eigen::VectorXd restrict(const Eigen::VectorXd& full) const {
    Eigen::VectorXd out(free_count());
    for (int i = 0; i < free_count(); ++i) out[i] = full[free_vertices_[static_cast<std::size_t>(i)]];
    return out;
  }

  Eigen::VectorXd extend(const Eigen::VectorXd& reduced) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(mesh_.vertex_count());
    for (int i = 0; i < free_count(); ++i) out[free_vertices_[static_cast<std::size_t>(i)]] = reduced[i];
    return out;
  }

  void assemble(const YoungFunction& G, const Eigen::VectorXd& u, double eps) {
    std::vector<double> stiff(static_cast<std::size_t>(mesh_.triangle_count()));
    std::vector<std::array<double, quadrature::kTriangle4.size()>> mass(stiff.size());
    double scale = 0.0;
    for (int t = 0; t < mesh_.triangle_count(); ++t) {
      const auto gu = p1_gradient(mesh_, t, u);
      const auto st = static_cast<std::size_t>(t);
      stiff[st] = regularized_quotient(G, std::hypot(gu[0], gu[1]), eps);
      scale = std::max(scale, stiff[st]);
      const auto& tri = mesh_.triangle(t);
      for (std::size_t k = 0; k < quadrature::kTriangle4.size(); ++k) {
        const auto& q = quadrature::kTriangle4[k];
        const double uq = q.l0 * u[tri[0]] + q.l1 * u[tri[1]] + q.l2 * u[tri[2]];
        mass[st][k] = regularized_quotient(G, std::abs(uq), eps);
        scale = std::max(scale, mass[st][k]);
      }
    }
    const double floor = 1e-6 * scale;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(mesh_.triangle_count()) * 9);
    for (int t = 0; t < mesh_.triangle_count(); ++t) {
      const auto st = static_cast<std::size_t>(t);
      const auto& tri = mesh_.triangle(t);
      const auto grads = p1_basis_gradients(mesh_, t);
      const double area = mesh_.area(t);
      const double c = std::max(stiff[st], floor);
      for (int i = 0; i < 3; ++i) {
        const int fi = free_index_[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
        if (fi < 0) continue;
        for (int j = 0; j < 3; ++j) {
          const int fj = free_index_[static_cast<std::size_t>(tri[static_cast<std::size_t>(j)])];
          if (fj < 0) continue;
          const auto& gi = grads[static_cast<std::size_t>(i)];
          const auto& gj = grads[static_cast<std::size_t>(j)];
          double val = area * c * (gi[0] * gj[0] + gi[1] * gj[1]);
          for (std::size_t k = 0; k < quadrature::kTriangle4.size(); ++k) {
            const auto& q = quadrature::kTriangle4[k];
            const double li = i == 0 ? q.l0 : (i == 1 ? q.l1 : q.l2);
            const double lj = j == 0 ? q.l0 : (j == 1 ? q.l1 : q.l2);
            val += area * q.w * std::max(mass[st][k], floor) * li * lj;
          }
          trip.emplace_back(fi, fj, val);
        }
      }
    }
    Eigen::SparseMatrix<double> A(free_count(), free_count());
    A.setFromTriplets(trip.begin(), trip.end());
    if (!analyzed_) {
      solver_.analyzePattern(A);
      analyzed_ = true;
    }
    solver_.factorize(A);
    if (solver_.info() != Eigen::Success) throw NumericError("lagged metric factorisation failed");
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return solver_.solve(rhs); }

 private:
  const MeshDomain& mesh_;
  std::vector<int> free_index_;
  std::vector<int> free_vertices_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
  bool analyzed_ = false;
};

inline bool has_free_boundary_edge(const MeshDomain& mesh, const std::vector<char>& zero_mask) {
  for (const auto& [a, b] : mesh.boundary_edges()) {
    if (!zero_mask[static_cast<std::size_t>(a)] && !zero_mask[static_cast<std::size_t>(b)]) return true;
  }
  return false;
}

}  // namespace detail

struct KktReport {
  double multiplier = 0.0;
  double residual = 0.0;
};

/// Least-squares multiplier mu = <r,b>/<b,b> over free vertices and the
/// relative residual |r - mu b| / |r|, where r = J'(u) and b is the
/// boundary-constraint covector.
inline KktReport kkt_report(const YoungFunction& G, const YoungFunction& H, const MeshDomain& mesh,
                            const Eigen::VectorXd& u, const VanishingConstraint& constraint, double eps) {
  const auto mask = constraint.mask(mesh.vertex_count());
  const Eigen::VectorXd r = objective_gradient(G, mesh, u, eps, &mask);
  const Eigen::VectorXd b = constraint_gradient(H, mesh, u, eps, &mask);
  const double bb = b.squaredNorm();
  if (!(bb > 1e-300)) throw NumericError("kkt_report: degenerate constraint gradient");
  KktReport k;
  k.multiplier = r.dot(b) / bb;
  const double rn = r.norm();
  k.residual = rn > 0.0 ? (r - k.multiplier * b).norm() / rn : 0.0;
  return k;
}

inline KktReport kkt_report(const YoungFunction& G, const YoungFunction& H, const TraceSolve& s,
                            const VanishingConstraint& constraint) {
  return kkt_report(G, H, *s.extremal.mesh, s.extremal.values, constraint, s.eps_used);
}

/// Minimises J on { Phi_H(u) = 1, u = 0 on constraint.zero_dofs }.
/// `initial`, when given, replaces the default start (1 on free vertices).
inline TraceSolve solve(const YoungFunction& G, const YoungFunction& H, std::shared_ptr<const MeshDomain> mesh_ptr,
                        const VanishingConstraint& constraint, const SolverConfig& config,
                        const std::optional<Eigen::VectorXd>& initial = std::nullopt) {
  config.validate();
  const MeshDomain& mesh = *mesh_ptr;
  const int n = mesh.vertex_count();
  const auto mask = constraint.mask(n);
  if (!detail::has_free_boundary_edge(mesh, mask)) {
    throw InfeasibleError("solve: no boundary edge is free of the vanishing constraint (empty admissible class)");
  }
  const double eps = config.eps_reg * mesh.diameter();

  Eigen::VectorXd u(n);
  if (initial) {
    if (initial->size() != n) throw DomainError("solve: initial field has the wrong size");
    u = *initial;
  } else {
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> jitter(-1e-6, 1e-6);
    for (int v = 0; v < n; ++v) u[v] = 1.0 + jitter(rng);
  }
  for (int v : constraint.zero_dofs) u[v] = 0.0;
  u *= trace_scale(H, mesh, u);

  detail::LaggedMetric metric(mesh, mask);
  double J = objective(G, mesh, u);
  TraceSolve out{ScalarField(mesh_ptr, u), J, 0.0, 0.0, 0, false, eps, constraint.achieved_measure(), {J}};
  Eigen::VectorXd best = u;
  double best_J = J;

  for (int it = 1; it <= config.max_iters; ++it) {
    const Eigen::VectorXd r = metric.restrict(objective_gradient(G, mesh, u, eps));
    const Eigen::VectorXd b = metric.restrict(constraint_gradient(H, mesh, u, eps));
    metric.assemble(G, u, eps);
    const Eigen::VectorXd zr = metric.solve(r);
    const Eigen::VectorXd zb = metric.solve(b);
    const double mu = b.dot(zr) / b.dot(zb);
    const Eigen::VectorXd d = metric.extend(-(zr - mu * zb));
    const double slope = metric.extend(r).dot(d);
    if (!(slope < -1e-15 * J)) {
      out.converged = true;
      break;
    }
    double s = config.step0;
    bool accepted = false;
    Eigen::VectorXd trial;
    double J_trial = J;
    while (s > 1e-14) {
      trial = u + s * d;
      try {
        trial *= trace_scale(H, mesh, trial);
        J_trial = objective(G, mesh, trial);
        if (J_trial <= J + config.armijo_c * s * slope) {
          accepted = true;
          break;
        }
      } catch (const InfeasibleError&) {
      }
      s *= config.armijo_shrink;
    }
    if (!accepted) {
      // Backtracking exhausted: stationary up to round-off, or stuck.
      out.converged = -slope <= 1e-9 * J;
      break;
    }
    u = trial;
    J = J_trial;
    out.iterations = it;
    out.history.push_back(J);
    if (J < best_J) {
      best_J = J;
      best = u;
    }
    const auto k = out.history.size();
    if (k > static_cast<std::size_t>(config.stall_window)) {
      const double past = out.history[k - 1 - static_cast<std::size_t>(config.stall_window)];
      if (past - J <= config.tol_rel * J) {
        out.converged = true;
        break;
      }
    }
  }

  // |u| is a minimiser whenever u is; keep the nonnegative representative.
  best = best.cwiseAbs();
  best *= trace_scale(H, mesh, best);
  out.extremal = ScalarField(mesh_ptr, best);
  out.S_value = objective(G, mesh, best);
  const KktReport k = kkt_report(G, H, mesh, best, constraint, eps);
  out.multiplier = k.multiplier;
  out.kkt_residual = k.residual;
  return out;
}

/// Structured-text report, one `key = value` per line.
inline void write_solve_report(std::ostream& os, const TraceSolve& s, const SolverConfig& c) {
  auto num = numeric::format_double;
  os << "S_value = " << num(s.S_value) << '\n'
     << "multiplier = " << num(s.multiplier) << '\n'
     << "kkt_residual = " << num(s.kkt_residual) << '\n'
     << "iterations = " << s.iterations << '\n'
     << "converged = " << (s.converged ? "true" : "false") << '\n'
     << "achieved_measure = " << num(s.achieved_measure) << '\n'
     << "eps_used = " << num(s.eps_used) << '\n'
     << "config.eps_reg = " << num(c.eps_reg) << '\n'
     << "config.step0 = " << num(c.step0) << '\n'
     << "config.armijo_c = " << num(c.armijo_c) << '\n'
     << "config.armijo_shrink = " << num(c.armijo_shrink) << '\n'
     << "config.max_iters = " << c.max_iters << '\n'
     << "config.tol_rel = " << num(c.tol_rel) << '\n'
     << "config.seed = " << c.seed << '\n';
}

}  // namespace orlicz
