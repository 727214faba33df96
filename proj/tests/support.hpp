#pragma once

#include <memory>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "orlicz/mesh.hpp"

namespace testing_support {

inline oracle::Mesh to_oracle(const orlicz::MeshDomain& m) {
  oracle::Mesh o;
  for (const auto& p : m.vertices()) o.v.push_back({p.x, p.y});
  for (const auto& t : m.triangles()) o.t.push_back({t[0], t[1], t[2]});
  for (const auto& e : m.boundary_edges()) o.b.push_back({e[0], e[1]});
  return o;
}

inline std::shared_ptr<const orlicz::MeshDomain> disk(double h, double r = 1.0) {
  return std::make_shared<const orlicz::MeshDomain>(orlicz::make_disk(r, h));
}

inline std::shared_ptr<const orlicz::MeshDomain> unit_square(double h) {
  return std::make_shared<const orlicz::MeshDomain>(orlicz::make_square(1.0, h));
}

inline Eigen::VectorXd random_field(int n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(lo, hi);
  Eigen::VectorXd u(n);
  for (int i = 0; i < n; ++i) u[i] = U(rng);
  return u;
}

template <class F>
Eigen::VectorXd sample(const orlicz::MeshDomain& m, F f) {
  Eigen::VectorXd u(m.vertex_count());
  for (int v = 0; v < m.vertex_count(); ++v) u[v] = f(m.vertex(v).x, m.vertex(v).y);
  return u;
}

}  // namespace testing_support
