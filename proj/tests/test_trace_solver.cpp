#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "orlicz/trace_solver.hpp"
#include "support.hpp"

using namespace orlicz;
using namespace testing_support;

namespace {

const YoungFunction kQuad = YoungFunction::power(2);
const YoungFunction kCubic = YoungFunction::power(3);

BoundarySubset first_edges(const MeshDomain& m, int count) {
  const auto& loop = m.boundary_loops().front();
  return make_boundary_subset(m, std::vector<int>(loop.begin(), loop.begin() + count));
}

}  // namespace

TEST(TraceSolver, ObjectiveValues) {
  const auto sq = unit_square(0.1);
  EXPECT_EQ(objective(kQuad, *sq, Eigen::VectorXd::Zero(sq->vertex_count())), 0.0);
  const Eigen::VectorXd x = sample(*sq, [](double x, double) { return x; });
  EXPECT_NEAR(objective(kQuad, *sq, x), 2.0 / 3.0, 1e-10);
  const auto m = disk(0.1);
  const Eigen::VectorXd u = random_field(m->vertex_count(), 1);
  EXPECT_EQ(objective(kCubic, *m, u), objective(kCubic, *m, Eigen::VectorXd(-u)));
}

TEST(TraceSolver, GradientOfZeroFieldVanishes) {
  const auto m = disk(0.2);
  EXPECT_EQ(objective_gradient(kCubic, *m, Eigen::VectorXd::Zero(m->vertex_count()), 1e-12).norm(), 0.0);
}

TEST(TraceSolver, GradientMatchesFiniteDifferences) {
  const auto m = disk(0.1);
  for (int s = 0; s < 5; ++s) {
    const Eigen::VectorXd u = random_field(m->vertex_count(), 20 + s);
    const Eigen::VectorXd v = random_field(m->vertex_count(), 40 + s);
    const double step = 1e-6;
    const double fd = (objective(kCubic, *m, Eigen::VectorXd(u + step * v)) -
                       objective(kCubic, *m, Eigen::VectorXd(u - step * v))) / (2 * step);
    const double an = objective_gradient(kCubic, *m, u, 1e-12).dot(v);
    EXPECT_NEAR(an, fd, 1e-4 * std::abs(fd));
  }
}

TEST(TraceSolver, QuadraticGradientEqualsLinearFemOracle) {
  const auto m = disk(0.15);
  const Eigen::MatrixXd A = oracle::stiffness_plus_mass(to_oracle(*m));
  const Eigen::VectorXd u = random_field(m->vertex_count(), 3);
  const Eigen::VectorXd ref = A * u;
  const Eigen::VectorXd got = objective_gradient(kQuad, *m, u, 1e-8);
  EXPECT_LE((got - ref).cwiseAbs().maxCoeff(), 1e-10 * ref.cwiseAbs().maxCoeff());
}

TEST(TraceSolver, SteklovConstantOnUnitDisk) {
  const double ref = oracle::unit_disk_steklov();
  const auto m = disk(0.05);
  const auto s = solve(kQuad, kQuad, m, VanishingConstraint::none(), SolverConfig{});
  EXPECT_TRUE(s.converged);
  EXPECT_NEAR(s.S_value, ref, 0.02 * ref);
  EXPECT_NEAR(s.multiplier, ref, 0.02 * ref);
  EXPECT_NEAR(trace_modular(kQuad, s.extremal), 1.0, 1e-8);
}

TEST(TraceSolver, WarmStartNeedsFewerIterations) {
  const auto m = disk(0.05);
  const auto cold = solve(kCubic, kCubic, m, VanishingConstraint::none(), SolverConfig{});
  const Eigen::VectorXd guess =
      sample(*m, [](double x, double y) { return oracle::bessel_i(0, std::hypot(x, y)); });
  const auto warm = solve(kCubic, kCubic, m, VanishingConstraint::none(), SolverConfig{}, guess);
  EXPECT_LT(warm.iterations, cold.iterations);
  EXPECT_NEAR(warm.S_value, cold.S_value, 1e-6 * cold.S_value);
}

TEST(TraceSolver, LargeWindowRaisesTheConstant) {
  const auto m = disk(0.1);
  const auto s0 = solve(kQuad, kQuad, m, VanishingConstraint::none(), SolverConfig{});
  const int n = m->boundary_edge_count();
  const auto w = first_edges(*m, n - 3);
  const auto s = solve(kQuad, kQuad, m, VanishingConstraint::from_window(*m, w), SolverConfig{});
  EXPECT_GT(s.S_value, s0.S_value);
  EXPECT_THROW(solve(kQuad, kQuad, m, VanishingConstraint::from_window(*m, first_edges(*m, n - 1)), SolverConfig{}),
               InfeasibleError);
}

TEST(TraceSolver, MultiplierEqualsConstantForPowers) {
  const auto m = disk(0.05);
  for (const auto& G : {kQuad, kCubic}) {
    for (int edges : {0, 20}) {
      const auto c = edges ? VanishingConstraint::from_window(*m, first_edges(*m, edges)) : VanishingConstraint::none();
      const auto s = solve(G, G, m, c, SolverConfig{});
      EXPECT_TRUE(s.converged);
      EXPECT_NEAR(s.multiplier, s.S_value, 1e-3 * s.S_value) << G.expression() << " edges=" << edges;
      EXPECT_LT(s.kkt_residual, 0.05);
    }
  }
}

TEST(TraceSolver, InvariantsOnWindowSolve) {
  const auto m = disk(0.1);
  const auto G = parse_young("powlog(2,1,1)");
  const auto c = VanishingConstraint::from_window(*m, first_edges(*m, 12));
  const auto s = solve(G, kQuad, m, c, SolverConfig{});
  EXPECT_NEAR(trace_modular(kQuad, s.extremal), 1.0, 1e-8);
  for (int v : c.zero_dofs) EXPECT_EQ(s.extremal.values[v], 0.0);
  EXPECT_GE(s.S_value, 0.0);
  for (std::size_t k = 1; k < s.history.size(); ++k) EXPECT_LE(s.history[k], s.history[k - 1] + 1e-12);
  const auto mask = c.mask(m->vertex_count());
  for (int v = 0; v < m->vertex_count(); ++v) {
    EXPECT_GE(s.extremal.values[v], 0.0);
    if (m->on_boundary(v) && !mask[static_cast<std::size_t>(v)]) {
      EXPECT_GT(s.extremal.values[v], 1e-10);
    }
  }
  EXPECT_NEAR(s.achieved_measure, c.window.achieved_measure, 0.0);
}

TEST(TraceSolver, LargerVanishingSetNeverLowersTheConstant) {
  const auto m = disk(0.1);
  double prev = 0.0;
  for (int edges : {0, 4, 10, 20, 40}) {
    const auto c = edges ? VanishingConstraint::from_window(*m, first_edges(*m, edges)) : VanishingConstraint::none();
    const double S = solve(kCubic, kCubic, m, c, SolverConfig{}).S_value;
    EXPECT_GE(S, prev * (1 - 1e-9)) << edges;
    prev = S;
  }
}

TEST(TraceSolver, RefinementIsConsistent) {
  std::vector<double> S;
  for (double h : {0.2, 0.1, 0.05}) S.push_back(solve(kQuad, kQuad, disk(h), VanishingConstraint::none(), {}).S_value);
  EXPECT_LT(std::abs(S[1] - S[2]), 3 * std::abs(S[0] - S[1]));
}

TEST(TraceSolver, RegularisationSensitivity) {
  const auto m = disk(0.1);
  SolverConfig a;
  SolverConfig b;
  b.eps_reg = a.eps_reg / 10;
  const auto c = VanishingConstraint::from_window(*m, first_edges(*m, 10));
  const double Sa = solve(kCubic, kCubic, m, c, a).S_value;
  const double Sb = solve(kCubic, kCubic, m, c, b).S_value;
  EXPECT_LT(std::abs(Sa - Sb), 1e-3 * Sb);
}

TEST(TraceSolver, DeterministicForFixedSeed) {
  const auto m = disk(0.1);
  SolverConfig cfg;
  cfg.seed = 42;
  const auto a = solve(kCubic, kQuad, m, VanishingConstraint::none(), cfg);
  const auto b = solve(kCubic, kQuad, m, VanishingConstraint::none(), cfg);
  EXPECT_EQ(a.S_value, b.S_value);
  EXPECT_EQ(a.extremal.values, b.extremal.values);
}

TEST(TraceSolver, HoleConstraintIsTheOneRingClosure) {
  const auto m = disk(0.1);
  const auto A = triangles_in_disk(*m, {0.2, 0.1}, 0.2);
  const auto c = VanishingConstraint::from_hole(*m, A);
  std::vector<int> ref;
  std::vector<char> inA(static_cast<std::size_t>(m->vertex_count()), 0);
  for (int t : A.triangles) {
    for (int v : m->triangle(t)) inA[static_cast<std::size_t>(v)] = 1;
  }
  for (int t = 0; t < m->triangle_count(); ++t) {
    const auto& tri = m->triangle(t);
    if (inA[static_cast<std::size_t>(tri[0])] || inA[static_cast<std::size_t>(tri[1])] ||
        inA[static_cast<std::size_t>(tri[2])]) {
      ref.insert(ref.end(), tri.begin(), tri.end());
    }
  }
  std::sort(ref.begin(), ref.end());
  ref.erase(std::unique(ref.begin(), ref.end()), ref.end());
  EXPECT_EQ(c.zero_dofs, ref);
  EXPECT_EQ(c.achieved_measure(), A.achieved_measure);
}

TEST(TraceSolver, ConfigValidation) {
  SolverConfig c;
  c.armijo_shrink = 1.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = {};
  c.max_iters = 0;
  EXPECT_THROW(solve(kQuad, kQuad, disk(0.2), VanishingConstraint::none(), c), DomainError);
}

TEST(TraceSolver, ReportListsResultAndConfig) {
  const auto s = solve(kQuad, kQuad, disk(0.2), VanishingConstraint::none(), SolverConfig{});
  std::ostringstream os;
  write_solve_report(os, s, SolverConfig{});
  for (const char* key : {"S_value = ", "multiplier = ", "kkt_residual = ", "iterations = ", "converged = ",
                          "config.eps_reg = ", "config.seed = 0"}) {
    EXPECT_NE(os.str().find(key), std::string::npos) << key;
  }
}
