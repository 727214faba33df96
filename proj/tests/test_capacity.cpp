#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "orlicz/capacity.hpp"
#include "support.hpp"

using namespace orlicz;
using namespace testing_support;

namespace {

const YoungFunction kQuad = YoungFunction::power(2);
constexpr double kPi = std::numbers::pi;

/// Upper bound for the quadratic capacity of a disk of radius r: the best
/// radial competitor log(rho1/rho)/log(rho1/r) over rho1 in (r, R].
double log_cutoff_bound(double r, double R) {
  double best = 1e300;
  for (int i = 1; i <= 400; ++i) {
    const double rho1 = r * std::pow(R / r, i / 400.0);
    const double L = std::log(rho1 / r);
    auto f = [&](double rho) {
      const double phi = std::log(rho1 / rho) / L;
      const double dphi = 1.0 / (rho * L);
      return 0.5 * (dphi * dphi + phi * phi) * 2 * kPi * rho;
    };
    best = std::min(best, 0.5 * kPi * r * r + oracle::simpson(f, r, rho1, 1e-10));
  }
  return best;
}

double effective_radius(const MeshDomain& box, const std::vector<int>& verts, Point c) {
  double r = 0.0;
  for (int v : verts) r = std::max(r, distance(box.vertex(v), c));
  return r;
}

}  // namespace

TEST(Capacity, WholeBoxIsTheBulkModularOfOne) {
  const auto box = std::make_shared<const MeshDomain>(make_square(2.0, 0.25, {-1, -1}));
  std::vector<int> all(static_cast<std::size_t>(box->vertex_count()));
  for (int v = 0; v < box->vertex_count(); ++v) all[static_cast<std::size_t>(v)] = v;
  const auto est = estimate_capacity(kQuad, box, all, 1.0, 0.25, SolverConfig{});
  EXPECT_NEAR(est.value, 0.5 * 4.0, 1e-12);
}

TEST(Capacity, EmptyObstacleHasZeroCapacity) {
  const auto box = std::make_shared<const MeshDomain>(make_square(2.0, 0.25, {-1, -1}));
  EXPECT_EQ(estimate_capacity(kQuad, box, std::vector<int>{}, 1.0, 0.25, SolverConfig{}).value, 0.0);
}

TEST(Capacity, RejectsObstacleOnTheBoxBoundary) {
  const auto box = std::make_shared<const MeshDomain>(make_square(2.0, 0.25, {-1, -1}));
  EXPECT_THROW(estimate_capacity(kQuad, box, std::vector<int>{0}, 1.0, 0.25, SolverConfig{}), DomainError);
}

TEST(Capacity, ShrinkingDisksStayBelowLogCutoffBound) {
  const double R = 4.0;
  const double h = 0.05;
  double prev = 1e300;
  for (double r : {0.4, 0.2, 0.1}) {
    const ObstacleSpec o{"disk", {0, 0}, r, false};
    const auto est = obstacle_capacity(kQuad, o, R, h, SolverConfig{});
    auto box = std::make_shared<const MeshDomain>(make_square(2 * R, h, {-R, -R}));
    const double r_eff = effective_radius(*box, obstacle_vertices(*box, o), {0, 0});
    EXPECT_LT(est.value, prev) << r;
    EXPECT_LE(est.value, 1.05 * log_cutoff_bound(r_eff, R)) << r;
    EXPECT_GE(est.value, 0.0);
    for (int v : obstacle_vertices(*box, o)) EXPECT_GE(est.potential.values[v], 1 - 1e-8);
    prev = est.value;
  }
}

TEST(Capacity, MatchesBesselCapacityOfAnEnclosingDisk) {
  const double R = 3.0;
  const double h = 0.05;
  const ObstacleSpec o{"disk", {0, 0}, 0.3, false};
  const auto est = obstacle_capacity(kQuad, o, R, h, SolverConfig{});
  auto box = std::make_shared<const MeshDomain>(make_square(2 * R, h, {-R, -R}));
  const double r_eff = effective_radius(*box, obstacle_vertices(*box, o), {0, 0});
  EXPECT_LE(est.value, oracle::disk_capacity_quadratic(r_eff) * 1.05);
  EXPECT_GE(est.value, oracle::disk_capacity_quadratic(0.3 - h) * 0.95);
}

TEST(Capacity, MonotoneUnderInclusion) {
  const double R = 2.0;
  const double h = 0.05;
  auto box = std::make_shared<const MeshDomain>(make_square(2 * R, h, {-R, -R}));
  const auto small = triangles_in_disk(*box, {0.1, 0}, 0.2);
  const auto big = triangles_in_disk(*box, {0.1, 0}, 0.35);
  const double a = estimate_capacity(kQuad, box, small, R, h, SolverConfig{}).value;
  const double b = estimate_capacity(kQuad, box, big, R, h, SolverConfig{}).value;
  EXPECT_LE(a, b + 1e-9);
}

TEST(Capacity, ClampIsOptimal) {
  for (const char* expr : {"pow(2)", "pow(3)", "powlog(2,1,1)"}) {
    const auto G = parse_young(expr);
    const ObstacleSpec o{"disk", {0, 0}, 0.2, false};
    const double eq = obstacle_capacity(G, o, 1.5, 0.1, SolverConfig{}, ClampMode::equality).value;
    const double ineq = obstacle_capacity(G, o, 1.5, 0.1, SolverConfig{}, ClampMode::inequality).value;
    EXPECT_LT(std::abs(eq - ineq), 1e-3 * eq) << expr;
  }
}

TEST(Capacity, TruncationGrowsTowardThePlaneValue) {
  // Natural conditions on the box make each truncation a relaxation of the
  // next larger one on the same lattice.
  const ObstacleSpec o{"disk", {0, 0}, 0.2, false};
  const double a = obstacle_capacity(kQuad, o, 1.0, 0.05, SolverConfig{}).value;
  const double b = obstacle_capacity(kQuad, o, 2.0, 0.05, SolverConfig{}).value;
  const double c = obstacle_capacity(kQuad, o, 4.0, 0.05, SolverConfig{}).value;
  EXPECT_LE(a, b + 1e-9);
  EXPECT_LE(b, c + 1e-9);
  RecordProperty("relative_change_R2_to_R4", std::to_string((c - b) / c));
}

TEST(Invisibility, PointGapShrinksUnderRefinement) {
  std::vector<InvisibilityCase> cases;
  for (double h : {0.1, 0.05, 0.025}) cases.push_back({disk(h), h, ObstacleSpec{"point", {0, 0}, 0.0, false}});
  const auto t = invisibility_experiment(kQuad, kQuad, cases, 1.0, SolverConfig{});
  EXPECT_TRUE(t.gap_decreasing);
  for (const auto& r : t.rows) EXPECT_GT(r.capacity, 0.0);
  EXPECT_LT(t.rows[2].capacity, t.rows[0].capacity);
}

TEST(Invisibility, DiskGapStaysPositive) {
  std::vector<InvisibilityCase> cases;
  for (double h : {0.1, 0.05, 0.025}) cases.push_back({disk(h), h, ObstacleSpec{"disk", {0, 0}, 0.25, false}});
  const auto t = invisibility_experiment(kQuad, kQuad, cases, 1.0, SolverConfig{});
  EXPECT_GT(t.rows[2].gap, 1e-3);
  EXPECT_LT(std::abs(t.rows[2].gap - t.rows[1].gap), std::abs(t.rows[1].gap - t.rows[0].gap));
}

TEST(Invisibility, EmptyObstacleHasZeroGap) {
  const auto t = invisibility_experiment(kQuad, kQuad, {{disk(0.1), 0.1, ObstacleSpec{"none", {}, 0.0, true}}}, 1.0,
                                         SolverConfig{});
  EXPECT_EQ(t.rows[0].gap, 0.0);
  EXPECT_EQ(t.rows[0].capacity, 0.0);
}

TEST(Hausdorff, IdenticalPerturbationsGiveZeroGaps) {
  const auto m = disk(0.1);
  const auto A = triangles_in_square(*m, {0, 0}, 0.25);
  const auto t = hausdorff_continuity_experiment(kQuad, kQuad, m, A, {A, A, A}, SolverConfig{});
  for (const auto& r : t.rows) {
    EXPECT_EQ(r.gap, 0.0);
    EXPECT_EQ(r.dist_H, 0.0);
  }
}

TEST(Hausdorff, TranslatedSquareGapsDecrease) {
  const auto m = disk(0.05);
  const auto A = triangles_in_square(*m, {0, 0}, 0.25);
  std::vector<InteriorSubset> P;
  for (int k = 1; k <= 4; ++k) P.push_back(triangles_in_square(*m, {std::ldexp(1.0, -k), 0}, 0.25));
  const auto t = hausdorff_continuity_experiment(kQuad, kQuad, m, A, P, SolverConfig{});
  EXPECT_TRUE(t.gaps_nonincreasing);
  EXPECT_LT(t.rows.back().gap, t.rows.front().gap);
  for (std::size_t k = 1; k < t.rows.size(); ++k) EXPECT_LT(t.rows[k].dist_H, t.rows[k - 1].dist_H);
}

TEST(Hausdorff, DilatedSquareGapsDecreaseAndDominate) {
  const auto m = disk(0.05);
  const auto A = triangles_in_square(*m, {0, 0}, 0.25);
  std::vector<InteriorSubset> P;
  for (int k = 1; k <= 4; ++k) P.push_back(triangles_in_square(*m, {0, 0}, 0.25 * (1 + std::ldexp(1.0, -k))));
  const auto t = hausdorff_continuity_experiment(kQuad, kQuad, m, A, P, SolverConfig{});
  EXPECT_TRUE(t.gaps_nonincreasing);
  for (const auto& r : t.rows) EXPECT_GE(r.S_Ak, r.S_A - 1e-9);
}

TEST(Hausdorff, IncreasingDistancesAreRejected) {
  const auto m = disk(0.1);
  const auto A = triangles_in_square(*m, {0, 0}, 0.25);
  EXPECT_THROW(hausdorff_continuity_experiment(kQuad, kQuad, m, A,
                                               {triangles_in_square(*m, {0.1, 0}, 0.25),
                                                triangles_in_square(*m, {0.3, 0}, 0.25)},
                                               SolverConfig{}),
               DomainError);
}
