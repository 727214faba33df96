#pragma once

// Modulars of P1 fields: Phi_G(u) over the domain, Phi_G(|grad u|), and
// Phi_H(u) over the boundary, plus Luxemburg norms and trace normalisation.

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <memory>
#include <ostream>
#include <string>

#include "orlicz/errors.hpp"
#include "orlicz/mesh.hpp"
#include "orlicz/numeric.hpp"
#include "orlicz/young.hpp"

namespace orlicz {

/// Nodal P1 function on a mesh.
struct ScalarField {
  std::shared_ptr<const MeshDomain> mesh;
  Eigen::VectorXd values;

  ScalarField(std::shared_ptr<const MeshDomain> m, Eigen::VectorXd v) : mesh(std::move(m)), values(std::move(v)) {
    if (!mesh) throw DomainError("ScalarField: null mesh");
    if (values.size() != mesh->vertex_count()) throw DomainError("ScalarField: value count != vertex count");
    if (!values.allFinite()) throw DomainError("ScalarField: non-finite nodal value");
  }
};

namespace quadrature {

/// Degree-4 symmetric rule on the reference triangle (6 points, barycentric
/// coordinates, weights sum to 1).
struct TrianglePoint {
  double l0, l1, l2, w;
};
inline constexpr std::array<TrianglePoint, 6> kTriangle4{{
    {0.445948490915965, 0.445948490915965, 0.108103018168070, 0.223381589678011},
    {0.445948490915965, 0.108103018168070, 0.445948490915965, 0.223381589678011},
    {0.108103018168070, 0.445948490915965, 0.445948490915965, 0.223381589678011},
    {0.091576213509771, 0.091576213509771, 0.816847572980459, 0.109951743655322},
    {0.091576213509771, 0.816847572980459, 0.091576213509771, 0.109951743655322},
    {0.816847572980459, 0.091576213509771, 0.091576213509771, 0.109951743655322},
}};

/// 3-point Gauss-Legendre on [0, 1].
struct EdgePoint {
  double s, w;
};
inline constexpr double kGaussOffset = 0.3872983346207417;  // sqrt(3/5) / 2
inline constexpr std::array<EdgePoint, 3> kEdge3{{
    {0.5 - kGaussOffset, 5.0 / 18.0},
    {0.5, 8.0 / 18.0},
    {0.5 + kGaussOffset, 5.0 / 18.0},
}};

}  // namespace quadrature

/// Constant gradient of the P1 interpolant on triangle t.
inline std::array<double, 2> p1_gradient(const MeshDomain& mesh, int t, const Eigen::VectorXd& u) {
  const auto& tri = mesh.triangle(t);
  const Point& a = mesh.vertex(tri[0]);
  const Point& b = mesh.vertex(tri[1]);
  const Point& c = mesh.vertex(tri[2]);
  const double inv2a = 1.0 / (2.0 * mesh.area(t));
  const double ua = u[tri[0]], ub = u[tri[1]], uc = u[tri[2]];
  return {inv2a * ((b.y - c.y) * ua + (c.y - a.y) * ub + (a.y - b.y) * uc),
          inv2a * ((c.x - b.x) * ua + (a.x - c.x) * ub + (b.x - a.x) * uc)};
}

/// Gradients of the three barycentric basis functions on triangle t.
inline std::array<std::array<double, 2>, 3> p1_basis_gradients(const MeshDomain& mesh, int t) {
  const auto& tri = mesh.triangle(t);
  const Point& a = mesh.vertex(tri[0]);
  const Point& b = mesh.vertex(tri[1]);
  const Point& c = mesh.vertex(tri[2]);
  const double inv2a = 1.0 / (2.0 * mesh.area(t));
  return {{{inv2a * (b.y - c.y), inv2a * (c.x - b.x)},
           {inv2a * (c.y - a.y), inv2a * (a.x - c.x)},
           {inv2a * (a.y - b.y), inv2a * (b.x - a.x)}}};
}

inline double bulk_modular(const YoungFunction& G, const MeshDomain& mesh, const Eigen::VectorXd& u) {
  double total = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangle(t);
    const double ua = u[tri[0]], ub = u[tri[1]], uc = u[tri[2]];
    double s = 0.0;
    for (const auto& q : quadrature::kTriangle4) s += q.w * G(std::abs(q.l0 * ua + q.l1 * ub + q.l2 * uc));
    total += mesh.area(t) * s;
  }
  return total;
}

inline double gradient_modular(const YoungFunction& G, const MeshDomain& mesh, const Eigen::VectorXd& u) {
  double total = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto g = p1_gradient(mesh, t, u);
    total += mesh.area(t) * G(std::hypot(g[0], g[1]));
  }
  return total;
}

inline double trace_modular(const YoungFunction& H, const MeshDomain& mesh, const Eigen::VectorXd& u) {
  double total = 0.0;
  for (int e = 0; e < mesh.boundary_edge_count(); ++e) {
    const auto& [a, b] = mesh.boundary_edge(e);
    const double ua = u[a], ub = u[b];
    double s = 0.0;
    for (const auto& q : quadrature::kEdge3) s += q.w * H(std::abs((1.0 - q.s) * ua + q.s * ub));
    total += mesh.edge_length(e) * s;
  }
  return total;
}

inline double bulk_modular(const YoungFunction& G, const ScalarField& u) { return bulk_modular(G, *u.mesh, u.values); }
inline double gradient_modular(const YoungFunction& G, const ScalarField& u) {
  return gradient_modular(G, *u.mesh, u.values);
}
inline double trace_modular(const YoungFunction& H, const ScalarField& u) {
  return trace_modular(H, *u.mesh, u.values);
}

struct ModularReport {
  double grad_modular = 0.0;
  double bulk_modular = 0.0;
  double trace_modular = 0.0;
  double objective = 0.0;  ///< grad_modular + bulk_modular
};

inline ModularReport modular_report(const YoungFunction& G, const YoungFunction& H, const ScalarField& u) {
  ModularReport r;
  r.grad_modular = gradient_modular(G, u);
  r.bulk_modular = bulk_modular(G, u);
  r.trace_modular = trace_modular(H, u);
  r.objective = r.grad_modular + r.bulk_modular;
  return r;
}

enum class ModularDomain { bulk, trace };

/// inf{ lambda > 0 : Phi(u / lambda) <= 1 }; under the doubling condition the
/// infimum is attained with Phi(u / lambda*) = 1.
inline double luxemburg_norm(const YoungFunction& G, const MeshDomain& mesh, const Eigen::VectorXd& u,
                             ModularDomain domain) {
  auto phi = [&](double scale) {
    const Eigen::VectorXd v = scale * u;
    return domain == ModularDomain::bulk ? bulk_modular(G, mesh, v) : trace_modular(G, mesh, v);
  };
  if (phi(1.0) == 0.0) return 0.0;
  // Phi(s u) is increasing in s; solve Phi(s u) = 1 and return 1 / s.
  const double s = numeric::monotone_inverse(phi, 1.0, 50);
  return 1.0 / s;
}

inline double luxemburg_norm(const YoungFunction& G, const ScalarField& u, ModularDomain domain) {
  return luxemburg_norm(G, *u.mesh, u.values, domain);
}

/// Scale t* with Phi_H(t* u) = 1 on the boundary.
inline double trace_scale(const YoungFunction& H, const MeshDomain& mesh, const Eigen::VectorXd& u) {
  if (trace_modular(H, mesh, u) == 0.0) {
    throw InfeasibleError("normalize_trace: field vanishes on the boundary (normalization impossible)");
  }
  return numeric::monotone_inverse([&](double t) { return trace_modular(H, mesh, Eigen::VectorXd(t * u)); }, 1.0, 52);
}

inline ScalarField normalize_trace(const YoungFunction& H, const ScalarField& u) {
  const double t = trace_scale(H, *u.mesh, u.values);
  return ScalarField(u.mesh, t * u.values);
}

// ---------------------------------------------------------------------------
// Text format: first line is the vertex count, then one value per line.

inline void write_field(std::ostream& os, const Eigen::VectorXd& values) {
  os << values.size() << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", values[i]);
    os << buf;
  }
}

inline Eigen::VectorXd read_field(std::istream& is) {
  long n = -1;
  if (!(is >> n) || n < 0) throw ParseError("field file: missing vertex count header");
  Eigen::VectorXd v(n);
  for (long i = 0; i < n; ++i) {
    if (!(is >> v[i])) throw ParseError("field file: expected " + std::to_string(n) + " values");
  }
  double extra = 0.0;
  if (is >> extra) throw ParseError("field file: trailing values");
  return v;
}

}  // namespace orlicz
