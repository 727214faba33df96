#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "orlicz/modular.hpp"
#include "support.hpp"

using namespace orlicz;
using namespace testing_support;

namespace {
const YoungFunction kQuad = YoungFunction::power(2);
}

TEST(Modular, BulkValues) {
  const auto sq = unit_square(0.1);
  EXPECT_EQ(bulk_modular(kQuad, *sq, Eigen::VectorXd::Zero(sq->vertex_count())), 0.0);
  EXPECT_NEAR(bulk_modular(kQuad, *sq, Eigen::VectorXd::Constant(sq->vertex_count(), 3.0)), 4.5, 1e-12);
  EXPECT_NEAR(bulk_modular(kQuad, *sq, sample(*sq, [](double x, double) { return x; })), 1.0 / 6.0, 1e-10);
}

TEST(Modular, GradientValues) {
  const auto sq = unit_square(0.1);
  EXPECT_NEAR(gradient_modular(kQuad, *sq, Eigen::VectorXd::Constant(sq->vertex_count(), 2.0)), 0.0, 1e-20);
  EXPECT_NEAR(gradient_modular(kQuad, *sq, sample(*sq, [](double x, double) { return 3 * x; })), 4.5, 1e-10);
}

TEST(Modular, GradientMatchesEdgeFormulaOracle) {
  const auto m = disk(0.15);
  const auto o = to_oracle(*m);
  for (const char* expr : {"pow(2)", "pow(3)", "powlog(2,1,1)"}) {
    const auto G = parse_young(expr);
    const Eigen::VectorXd u = random_field(m->vertex_count(), 11);
    const std::vector<double> uv(u.data(), u.data() + u.size());
    const double ref = oracle::gradient_integral(o, uv, [&](double t) { return G.eval(t); });
    EXPECT_NEAR(gradient_modular(G, *m, u), ref, 1e-12 * ref) << expr;
  }
}

TEST(Modular, TraceValues) {
  const auto sq = unit_square(0.1);
  EXPECT_EQ(trace_modular(kQuad, *sq, Eigen::VectorXd::Zero(sq->vertex_count())), 0.0);
  EXPECT_NEAR(trace_modular(kQuad, *sq, Eigen::VectorXd::Constant(sq->vertex_count(), 1.0)), 2.0, 1e-12);
  EXPECT_NEAR(trace_modular(kQuad, *sq, sample(*sq, [](double x, double) { return x; })), 5.0 / 6.0, 1e-12);
}

TEST(Modular, LuxemburgNorm) {
  const auto sq = unit_square(0.1);
  const double c = 1.7;
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(sq->vertex_count(), c);
  EXPECT_NEAR(luxemburg_norm(kQuad, *sq, u, ModularDomain::bulk), c / std::sqrt(2.0), 1e-10);
  EXPECT_EQ(luxemburg_norm(kQuad, *sq, Eigen::VectorXd::Zero(sq->vertex_count()), ModularDomain::bulk), 0.0);
  const auto m = disk(0.1);
  const auto G = parse_young("powlog(2,1,1)");
  for (int s = 0; s < 5; ++s) {
    const Eigen::VectorXd v = random_field(m->vertex_count(), 100 + s);
    for (auto dom : {ModularDomain::bulk, ModularDomain::trace}) {
      const double n = luxemburg_norm(G, *m, v, dom);
      const Eigen::VectorXd w = v / n;
      const double phi = dom == ModularDomain::bulk ? bulk_modular(G, *m, w) : trace_modular(G, *m, w);
      EXPECT_NEAR(phi, 1.0, 1e-8);
      EXPECT_NEAR(luxemburg_norm(G, *m, Eigen::VectorXd(-2.5 * v), dom), 2.5 * n, 1e-9 * n);
    }
  }
}

TEST(Modular, NormalizeTrace) {
  const auto sq = unit_square(0.1);
  const Eigen::VectorXd x = sample(*sq, [](double x, double y) { return 1.0 + x * y; });
  const ScalarField u(sq, x);
  const auto un = normalize_trace(kQuad, u);
  EXPECT_NEAR(trace_modular(kQuad, un), 1.0, 1e-12);
  EXPECT_NEAR(trace_scale(kQuad, *sq, un.values), 1.0, 1e-10);
  EXPECT_NEAR(trace_scale(kQuad, *sq, x), std::pow(trace_modular(kQuad, u), -0.5), 1e-10);
  // Phi_H(u) = 16 for u = 2 on the unit square with H = t^4/4.
  const auto quart = YoungFunction::power(4);
  EXPECT_NEAR(trace_scale(quart, *sq, Eigen::VectorXd::Constant(sq->vertex_count(), 2.0)), 0.5, 1e-10);
}

TEST(Modular, NormalizeTraceRejectsVanishingTrace) {
  const auto sq = unit_square(0.25);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(sq->vertex_count());
  for (int v = 0; v < sq->vertex_count(); ++v) {
    if (!sq->on_boundary(v)) u[v] = 1.0;
  }
  EXPECT_THROW(normalize_trace(kQuad, ScalarField(sq, u)), InfeasibleError);
}

TEST(Modular, ModularsAreMonotoneInScale) {
  const auto m = disk(0.1);
  const auto G = parse_young("max(pow(2),pow(4))");
  const Eigen::VectorXd u = random_field(m->vertex_count(), 5);
  double pb = 0, pg = 0, pt = 0;
  for (double t : {0.1, 0.5, 1.0, 2.0, 8.0}) {
    const Eigen::VectorXd v = t * u;
    const double b = bulk_modular(G, *m, v);
    const double g = gradient_modular(G, *m, v);
    const double tr = trace_modular(G, *m, v);
    EXPECT_GT(b, pb);
    EXPECT_GT(g, pg);
    EXPECT_GT(tr, pt);
    pb = b;
    pg = g;
    pt = tr;
  }
}

TEST(Modular, ScalarFieldValidation) {
  const auto m = disk(0.2);
  EXPECT_THROW(ScalarField(m, Eigen::VectorXd::Zero(3)), DomainError);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(m->vertex_count());
  bad[2] = std::nan("");
  EXPECT_THROW(ScalarField(m, bad), DomainError);
  EXPECT_THROW(ScalarField(nullptr, bad), DomainError);
}

TEST(Modular, FieldFileRoundTrip) {
  const Eigen::VectorXd u = random_field(57, 9, -1e3, 1e3);
  std::stringstream ss;
  write_field(ss, u);
  const Eigen::VectorXd back = read_field(ss);
  ASSERT_EQ(back.size(), u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) EXPECT_EQ(back[i], u[i]);
  std::stringstream shortfile("3\n1\n2\n");
  EXPECT_THROW(read_field(shortfile), ParseError);
  std::stringstream longfile("1\n1\n2\n");
  EXPECT_THROW(read_field(longfile), ParseError);
}
