#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "orlicz/young.hpp"

using namespace orlicz;

namespace {

std::vector<YoungFunction> convex_family() {
  return {parse_young("pow(1.5)"),
          parse_young("pow(2)"),
          parse_young("pow(3)"),
          parse_young("powdivlog(3,1,1)"),
          parse_young("max(pow(2),pow(4))"),
          parse_young("sum(0.5*pow(2),2*pow(3))"),
          parse_young("compose(pow(2),pow(1.5))")};
}

std::vector<YoungFunction> all_family() {
  auto out = convex_family();
  out.push_back(parse_young("powlog(2,1,1)"));
  return out;
}

}  // namespace

TEST(Young, EvaluatesPowerAndPowerLog) {
  EXPECT_DOUBLE_EQ(YoungFunction::power(2).eval(2.0), 2.0);
  EXPECT_DOUBLE_EQ(YoungFunction::power_log(2, 1, 1).eval(1.0), 1.0);
  EXPECT_DOUBLE_EQ(YoungFunction::power(3).derivative(3.0), 9.0);
  EXPECT_DOUBLE_EQ(YoungFunction::power(2).derivative(3.0), 3.0);
  EXPECT_THROW(YoungFunction::power(2).eval(-1.0), DomainError);
  EXPECT_THROW(YoungFunction::power(2).derivative(-0.5), DomainError);
}

TEST(Young, VanishesAtZero) {
  for (const auto& G : all_family()) {
    EXPECT_EQ(G.eval(0.0), 0.0) << G.expression();
    EXPECT_EQ(G.derivative(0.0), 0.0) << G.expression();
  }
}

TEST(Young, DerivativeMatchesCentralDifference) {
  const auto G = YoungFunction::power(3);
  const double t = 1.5;
  const double h = 1e-5;
  const double fd = (G.eval(t + h) - G.eval(t - h)) / (2 * h);
  EXPECT_NEAR(G.derivative(t), fd, 1e-6 * std::abs(fd));

  for (const auto& F : all_family()) {
    for (double s : numeric::log_grid(1e-3, 1e3, 40)) {
      const double step = 1e-6 * s;
      const double d = (F.eval(s + step) - F.eval(s - step)) / (2 * step);
      EXPECT_NEAR(F.derivative(s), d, 1e-5 * std::max(1.0, std::abs(d))) << F.expression() << " at " << s;
    }
  }
}

TEST(Young, PowerIndicesAreExact) {
  for (double p : {1.5, 2.0, 3.7}) {
    const auto idx = growth_indices(YoungFunction::power(p));
    EXPECT_EQ(idx.g_minus, p);
    EXPECT_EQ(idx.g_plus, p);
    EXPECT_TRUE(idx.delta2);
  }
}

TEST(Young, PowerLogIndicesMatchDenseGridOracle) {
  // t G'(t) / G(t) = 2 + sign(log t) / (|log t| + 1) for t^2 (|log t| + 1).
  double lo = 1e300;
  double hi = 0.0;
  const int n = 200001;
  for (int i = 0; i < n; ++i) {
    const double t = std::exp(std::log(1e-6) + (std::log(1e6) - std::log(1e-6)) * i / (n - 1));
    const double L = std::log(t);
    const double r = 2.0 + (L > 0 ? 1.0 : (L < 0 ? -1.0 : 0.0)) / (std::abs(L) + 1.0);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  const auto idx = growth_indices(parse_young("powlog(2,1,1)"));
  EXPECT_NEAR(idx.g_minus, lo, 1e-2);
  EXPECT_NEAR(idx.g_plus, hi, 1e-2);
  EXPECT_GT(idx.g_minus, 1.0);
  EXPECT_LE(idx.g_plus, 3.0 + 1e-9);
}

TEST(Young, MaxOfPowersIndices) {
  const auto idx = growth_indices(parse_young("max(pow(2),pow(4))"));
  EXPECT_NEAR(idx.g_minus, 2.0, 1e-6);
  EXPECT_NEAR(idx.g_plus, 4.0, 1e-6);
}

TEST(Young, ConjugateOfPowerIsConjugatePower) {
  for (double p : {2.0, 3.0, 1.5}) {
    const double q = p / (p - 1.0);
    const auto Gs = conjugate(YoungFunction::power(p));
    for (double t : {0.5, 1.0, 2.0}) {
      EXPECT_NEAR(Gs(t), std::pow(t, q) / q, 1e-8) << "p=" << p << " t=" << t;
    }
  }
}

TEST(Young, YoungInequalityAndEquality) {
  const auto G = YoungFunction::power(3);
  const auto Gs = conjugate(G);
  const double s = 1.7;
  EXPECT_NEAR(s * G.derivative(s), G.eval(s) + Gs(G.derivative(s)), 1e-8);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double a = U(rng);
    const double b = U(rng);
    EXPECT_LE(a * b, G.eval(a) + Gs(b) + 1e-9);
  }
}

TEST(Young, ConjugateRejectsNonMonotoneDerivative) {
  EXPECT_THROW(conjugate(parse_young("powlog(2,1,1)")), NumericError);
}

TEST(Young, SobolevInverseAgainstQuadrature) {
  const auto G = parse_young("pow(1.5)");
  EXPECT_EQ(sobolev_conjugate_inverse(G, 2, 0.0), 0.0);
  // int_0^t (1.5 s)^{2/3} s^{-3/2} ds with s = t w^6.
  const double t = 1.0;
  auto f = [&](double w) {
    if (w == 0.0) return 0.0;
    const double s = t * std::pow(w, 6);
    return std::pow(1.5 * s, 2.0 / 3.0) * std::pow(s, -1.5) * 6.0 * t * std::pow(w, 5);
  };
  const double ref = oracle::simpson(f, 0.0, 1.0);
  EXPECT_NEAR(sobolev_conjugate_inverse(G, 2, t), ref, 1e-6);
}

TEST(Young, SobolevInverseDetectsDivergence) {
  EXPECT_THROW(sobolev_conjugate_inverse(YoungFunction::power(2), 2, 1.0), DomainError);
  EXPECT_FALSE(lower_compactness_integral_finite(YoungFunction::power(3), 2));
  EXPECT_TRUE(lower_compactness_integral_finite(YoungFunction::power(1.5), 2));
}

TEST(Young, SobolevInverseIsIncreasing) {
  const auto G = YoungFunction::power(3);
  EXPECT_GT(sobolev_conjugate_inverse(G, 4, 2.0), sobolev_conjugate_inverse(G, 4, 1.0));
  double prev = 0.0;
  for (double t : {0.1, 0.5, 1.0, 4.0, 20.0}) {
    const double v = sobolev_conjugate_inverse(YoungFunction::power(1.5), 2, t);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(Young, TraceCompatibility) {
  const auto G = YoungFunction::power(2);
  EXPECT_EQ(check_trace_compatibility(G, G, 2).verdict, Compatibility::compatible);
  const auto linear = check_trace_compatibility(G, [](double t) { return t; }, 2);
  EXPECT_EQ(linear.verdict, Compatibility::compatible);
  // H = e^t - 1 outgrows the trace embedding.
  const auto fast = check_trace_compatibility(G, [](double t) { return std::log1p(t); }, 2);
  EXPECT_EQ(fast.verdict, Compatibility::incompatible);
}

TEST(Young, TraceCompatibilitySlopeInThreeDimensions) {
  // N = 3, G = t^2/2: the ratio grows like t^{1/4 - 1/5}.
  const auto rep = check_trace_compatibility(YoungFunction::power(2), YoungFunction::power(5), 3);
  EXPECT_EQ(rep.verdict, Compatibility::incompatible);
  EXPECT_NEAR(rep.tail_slope, std::log(10.0) * 0.05, 1e-2);
  EXPECT_EQ(check_trace_compatibility(YoungFunction::power(2), YoungFunction::power(2), 3).verdict,
            Compatibility::compatible);
}

TEST(Young, ConvexityDoublingAndTriangleBound) {
  for (const auto& G : convex_family()) {
    EXPECT_TRUE(is_convex_on_grid(G)) << G.expression();
    const double C = doubling_constant(G);
    EXPECT_TRUE(std::isfinite(C)) << G.expression();
    for (double a : numeric::log_grid(1e-3, 1e3, 25)) {
      for (double b : numeric::log_grid(1e-3, 1e3, 25)) {
        EXPECT_LE(G.eval(a + b), 0.5 * C * (G.eval(a) + G.eval(b)) * (1 + 1e-12)) << G.expression();
      }
    }
  }
  EXPECT_FALSE(is_convex_on_grid(parse_young("powlog(2,1,1)")));
}

TEST(Young, SuperlinearAtInfinityAndSublinearAtZero) {
  for (const auto& G : all_family()) {
    EXPECT_LT(G.eval(1e-6) / 1e-6, 1e-2) << G.expression();
    EXPECT_GT(G.eval(1e6) / 1e6, 1e2) << G.expression();
  }
}

TEST(Young, InverseRoundTrip) {
  for (const auto& G : all_family()) {
    for (double t : {1e-3, 0.3, 1.0, 7.0, 1e3}) {
      EXPECT_NEAR(G.inverse(G.eval(t)), t, 1e-9 * t) << G.expression();
    }
  }
}

TEST(Young, ParserRoundTrip) {
  for (const auto& G : all_family()) {
    const auto F = parse_young(G.expression());
    EXPECT_EQ(F.expression(), G.expression());
    for (double t : {0.1, 1.0, 10.0}) EXPECT_EQ(F.eval(t), G.eval(t));
  }
  EXPECT_EQ(parse_young(" pow( 2 ) ").family(), YoungFamily::power);
}

TEST(Young, ParserRejectsMalformedInput) {
  for (std::string bad : {"pow(", "pow(2", "pow(2))", "powl(2)", "sum()", "2*pow(2)", "sum(pow(2),,pow(3))", ""}) {
    EXPECT_THROW(parse_young(bad), ParseError) << bad;
  }
  EXPECT_THROW(parse_young("pow(1)"), ParseError);
  EXPECT_THROW(parse_young("powlog(2,-1,1)"), ParseError);
  EXPECT_THROW(YoungFunction::power(1.0), DomainError);
}
