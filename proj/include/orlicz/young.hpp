#pragma once

// Young functions G : [0, inf) -> [0, inf), their derivatives g = G',
// Lieberman growth indices, Young conjugates, the Orlicz-Sobolev conjugate
// and the trace-compatibility test H << (G*)^{(N-1)/N}.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "orlicz/errors.hpp"
#include "orlicz/numeric.hpp"

namespace orlicz {

enum class YoungFamily { power, power_log, power_div_log, compose, combination, max_of };

/// Numeric inf/sup of t G'(t) / G(t) over the sample grid.
struct GrowthIndices {
  double g_minus = 0.0;
  double g_plus = 0.0;
  bool delta2 = true;  ///< false when the ratio diverges on the grid (g_plus = +inf)
};

namespace detail {
struct YoungNode;
}

/// Immutable, cheaply copyable handle to a validated Young function.
///
/// Leaf families (p > 1; a, b > 0):
///   power(p)            G(t) = t^p / p
///   power_log(p,a,b)    G(t) = t^p (a |log t| + b)
///   power_div_log(p,a,b) G(t) = t^p / (a log(t + e) + b)
/// Composites: outer(inner(t)), nonnegative linear combinations, pointwise max.
///
/// Construction computes the growth indices and rejects functions with
/// g_minus <= 1 or without the doubling property.
class YoungFunction {
 public:
  static YoungFunction power(double p);
  static YoungFunction power_log(double p, double a, double b);
  static YoungFunction power_div_log(double p, double a, double b);
  static YoungFunction compose(const YoungFunction& outer, const YoungFunction& inner);
  static YoungFunction combination(std::vector<double> coeffs, std::vector<YoungFunction> parts);
  static YoungFunction max_of(std::vector<YoungFunction> parts);

  double operator()(double t) const { return eval_unchecked(t); }
  double eval(double t) const;
  double derivative(double t) const;
  /// G^{-1}(s) by monotone root-finding (closed form for power leaves).
  double inverse(double s) const;

  const GrowthIndices& indices() const { return indices_; }
  YoungFamily family() const;
  std::string expression() const;

  // Unchecked evaluation for hot loops; t must be >= 0.
  double eval_unchecked(double t) const;
  double derivative_unchecked(double t) const;

 private:
  explicit YoungFunction(std::shared_ptr<const detail::YoungNode> node);
  std::shared_ptr<const detail::YoungNode> node_;
  GrowthIndices indices_;
};

namespace detail {

struct YoungNode {
  YoungFamily family = YoungFamily::power;
  double p = 2.0;
  double a = 0.0;
  double b = 0.0;
  std::vector<double> coeffs;
  std::vector<YoungFunction> parts;
};

inline constexpr double kIndexGridLo = 1e-6;
inline constexpr double kIndexGridHi = 1e6;
inline constexpr int kIndexGridPoints = 600;
inline constexpr double kDelta2Cap = 1e6;

inline GrowthIndices numeric_indices(const YoungFunction& G) {
  const auto grid = numeric::log_grid(kIndexGridLo, kIndexGridHi, kIndexGridPoints);
  auto ratio = [&](double t) {
    const double val = G.eval_unchecked(t);
    const double der = G.derivative_unchecked(t);
    return t * der / val;
  };
  std::vector<double> r(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) r[i] = ratio(grid[i]);

  GrowthIndices out;
  for (double v : r) {
    if (!std::isfinite(v) || v > kDelta2Cap) {
      out.delta2 = false;
    }
  }
  const auto imin = static_cast<std::size_t>(std::min_element(r.begin(), r.end()) - r.begin());
  const auto imax = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());

  // Refine each extremum by golden-section search in log t on the
  // neighbouring grid cells.
  auto refine = [&](std::size_t i, double sign) {
    const double lo = std::log(grid[i == 0 ? 0 : i - 1]);
    const double hi = std::log(grid[std::min(i + 1, grid.size() - 1)]);
    auto obj = [&](double x) { return sign * ratio(std::exp(x)); };
    const auto best = numeric::golden_min(obj, lo, hi);
    return std::min(sign * r[i], best.second) * sign;
  };
  out.g_minus = refine(imin, 1.0);
  out.g_plus = out.delta2 ? refine(imax, -1.0) : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace detail

inline YoungFunction::YoungFunction(std::shared_ptr<const detail::YoungNode> node)
    : node_(std::move(node)) {
  if (node_->family == YoungFamily::power) {
    indices_ = {node_->p, node_->p, true};
  } else {
    indices_ = detail::numeric_indices(*this);
  }
  if (!indices_.delta2) {
    throw DomainError("Young function " + expression() + " fails the doubling condition on the sample grid");
  }
  if (!(indices_.g_minus > 1.0)) {
    throw DomainError("Young function " + expression() + " has g_minus <= 1");
  }
  const auto grid = numeric::log_grid(detail::kIndexGridLo, detail::kIndexGridHi, 64);
  double prev = 0.0;
  for (double t : grid) {
    const double v = eval_unchecked(t);
    if (!(v > prev)) {
      throw DomainError("Young function " + expression() + " is not strictly increasing");
    }
    prev = v;
  }
}

inline YoungFunction YoungFunction::power(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("power: need p > 1");
  auto n = std::make_shared<detail::YoungNode>();
  n->family = YoungFamily::power;
  n->p = p;
  return YoungFunction(std::move(n));
}

inline YoungFunction YoungFunction::power_log(double p, double a, double b) {
  if (!(p > 1.0) || !(a > 0.0) || !(b > 0.0)) throw DomainError("powlog: need p > 1, a > 0, b > 0");
  auto n = std::make_shared<detail::YoungNode>();
  n->family = YoungFamily::power_log;
  n->p = p;
  n->a = a;
  n->b = b;
  return YoungFunction(std::move(n));
}

inline YoungFunction YoungFunction::power_div_log(double p, double a, double b) {
  if (!(p > 1.0) || !(a > 0.0) || !(b > 0.0)) throw DomainError("powdivlog: need p > 1, a > 0, b > 0");
  auto n = std::make_shared<detail::YoungNode>();
  n->family = YoungFamily::power_div_log;
  n->p = p;
  n->a = a;
  n->b = b;
  return YoungFunction(std::move(n));
}

inline YoungFunction YoungFunction::compose(const YoungFunction& outer, const YoungFunction& inner) {
  auto n = std::make_shared<detail::YoungNode>();
  n->family = YoungFamily::compose;
  n->parts = {outer, inner};
  return YoungFunction(std::move(n));
}

inline YoungFunction YoungFunction::combination(std::vector<double> coeffs, std::vector<YoungFunction> parts) {
  if (coeffs.size() != parts.size() || parts.empty()) {
    throw DomainError("combination: coefficient/part count mismatch");
  }
  bool any_positive = false;
  for (double c : coeffs) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw DomainError("combination: coefficients must be >= 0");
    any_positive = any_positive || c > 0.0;
  }
  if (!any_positive) throw DomainError("combination: all coefficients are zero");
  auto n = std::make_shared<detail::YoungNode>();
  n->family = YoungFamily::combination;
  n->coeffs = std::move(coeffs);
  n->parts = std::move(parts);
  return YoungFunction(std::move(n));
}

inline YoungFunction YoungFunction::max_of(std::vector<YoungFunction> parts) {
  if (parts.empty()) throw DomainError("max: needs at least one part");
  auto n = std::make_shared<detail::YoungNode>();
  n->family = YoungFamily::max_of;
  n->parts = std::move(parts);
  return YoungFunction(std::move(n));
}

inline YoungFamily YoungFunction::family() const { return node_->family; }

inline double YoungFunction::eval(double t) const {
  if (!(t >= 0.0)) throw DomainError("Young function evaluated at negative argument");
  return eval_unchecked(t);
}

inline double YoungFunction::derivative(double t) const {
  if (!(t >= 0.0)) throw DomainError("Young function derivative at negative argument");
  return derivative_unchecked(t);
}

inline double YoungFunction::eval_unchecked(double t) const {
  const auto& n = *node_;
  if (t == 0.0) return 0.0;
  switch (n.family) {
    case YoungFamily::power:
      return std::pow(t, n.p) / n.p;
    case YoungFamily::power_log:
      return std::pow(t, n.p) * (n.a * std::abs(std::log(t)) + n.b);
    case YoungFamily::power_div_log:
      return std::pow(t, n.p) / (n.a * std::log(t + std::numbers::e) + n.b);
    case YoungFamily::compose:
      return n.parts[0].eval_unchecked(n.parts[1].eval_unchecked(t));
    case YoungFamily::combination: {
      double s = 0.0;
      for (std::size_t i = 0; i < n.parts.size(); ++i) s += n.coeffs[i] * n.parts[i].eval_unchecked(t);
      return s;
    }
    case YoungFamily::max_of: {
      double m = 0.0;
      for (const auto& part : n.parts) m = std::max(m, part.eval_unchecked(t));
      return m;
    }
  }
  return 0.0;
}

inline double YoungFunction::derivative_unchecked(double t) const {
  const auto& n = *node_;
  if (t == 0.0) return 0.0;
  switch (n.family) {
    case YoungFamily::power:
      return std::pow(t, n.p - 1.0);
    case YoungFamily::power_log: {
      // Right derivative at t = 1, where |log t| has a kink.
      const double lg = std::log(t);
      const double sgn = lg < 0.0 ? -1.0 : 1.0;
      const double tp1 = std::pow(t, n.p - 1.0);
      return n.p * tp1 * (n.a * std::abs(lg) + n.b) + tp1 * n.a * sgn;
    }
    case YoungFamily::power_div_log: {
      const double den = n.a * std::log(t + std::numbers::e) + n.b;
      return n.p * std::pow(t, n.p - 1.0) / den -
             std::pow(t, n.p) * n.a / ((t + std::numbers::e) * den * den);
    }
    case YoungFamily::compose: {
      const double inner = n.parts[1].eval_unchecked(t);
      return n.parts[0].derivative_unchecked(inner) * n.parts[1].derivative_unchecked(t);
    }
    case YoungFamily::combination: {
      double s = 0.0;
      for (std::size_t i = 0; i < n.parts.size(); ++i) s += n.coeffs[i] * n.parts[i].derivative_unchecked(t);
      return s;
    }
    case YoungFamily::max_of: {
      std::size_t best = 0;
      double m = -1.0;
      for (std::size_t i = 0; i < n.parts.size(); ++i) {
        const double v = n.parts[i].eval_unchecked(t);
        if (v > m) {
          m = v;
          best = i;
        }
      }
      return n.parts[best].derivative_unchecked(t);
    }
  }
  return 0.0;
}

inline double YoungFunction::inverse(double s) const {
  if (!(s >= 0.0)) throw DomainError("G^{-1} of a negative value");
  if (s == 0.0) return 0.0;
  if (node_->family == YoungFamily::power) return std::pow(node_->p * s, 1.0 / node_->p);
  return numeric::monotone_inverse([this](double t) { return eval_unchecked(t); }, s);
}

inline std::string YoungFunction::expression() const {
  const auto& n = *node_;
  auto num = numeric::format_double;
  switch (n.family) {
    case YoungFamily::power:
      return "pow(" + num(n.p) + ")";
    case YoungFamily::power_log:
      return "powlog(" + num(n.p) + "," + num(n.a) + "," + num(n.b) + ")";
    case YoungFamily::power_div_log:
      return "powdivlog(" + num(n.p) + "," + num(n.a) + "," + num(n.b) + ")";
    case YoungFamily::compose:
      return "compose(" + n.parts[0].expression() + "," + n.parts[1].expression() + ")";
    case YoungFamily::combination: {
      std::string s = "sum(";
      for (std::size_t i = 0; i < n.parts.size(); ++i) {
        if (i) s += ",";
        s += num(n.coeffs[i]) + "*" + n.parts[i].expression();
      }
      return s + ")";
    }
    case YoungFamily::max_of: {
      std::string s = "max(";
      for (std::size_t i = 0; i < n.parts.size(); ++i) {
        if (i) s += ",";
        s += n.parts[i].expression();
      }
      return s + ")";
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Free-function surface.

inline double eval(const YoungFunction& G, double t) { return G.eval(t); }
inline double derivative(const YoungFunction& G, double t) { return G.derivative(t); }
inline GrowthIndices growth_indices(const YoungFunction& G) { return G.indices(); }

/// sup over the sample grid of G(2t) / G(t).
inline double doubling_constant(const YoungFunction& G) {
  double c = 0.0;
  for (double t : numeric::log_grid(detail::kIndexGridLo, detail::kIndexGridHi, detail::kIndexGridPoints)) {
    c = std::max(c, G(2.0 * t) / G(t));
  }
  return c;
}

/// True when all second differences of G on a log grid are >= -tol (relative).
inline bool is_convex_on_grid(const YoungFunction& G, double lo = 1e-3, double hi = 1e3, int n = 2000,
                              double tol = 1e-9) {
  const auto grid = numeric::log_grid(lo, hi, n);
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double t0 = grid[i - 1], t1 = grid[i], t2 = grid[i + 1];
    // Slopes of consecutive chords must be nondecreasing.
    const double s01 = (G(t1) - G(t0)) / (t1 - t0);
    const double s12 = (G(t2) - G(t1)) / (t2 - t1);
    if (s12 < s01 - tol * std::max(1.0, std::abs(s01))) return false;
  }
  return true;
}

/// Young conjugate G~(t) = sup_s { s t - G(s) }, evaluated at the maximiser
/// s* = g^{-1}(t).
class ConjugatePair {
 public:
  explicit ConjugatePair(YoungFunction primal) : primal_(std::move(primal)) {
    if (!(primal_.indices().g_minus > 1.0)) throw DomainError("conjugate: need g_minus > 1");
    const auto grid = numeric::log_grid(detail::kIndexGridLo, detail::kIndexGridHi, detail::kIndexGridPoints);
    double prev = 0.0;
    for (double s : grid) {
      const double g = primal_.derivative_unchecked(s);
      if (g < prev * (1.0 - 1e-12)) {
        throw NumericError("conjugate: g = G' is not monotone on the grid for " + primal_.expression());
      }
      prev = g;
    }
  }

  const YoungFunction& primal() const { return primal_; }

  /// The maximiser s* with g(s*) = t.
  double argmax(double t) const {
    if (!(t >= 0.0)) throw DomainError("conjugate evaluated at negative argument");
    return numeric::monotone_inverse([this](double s) { return primal_.derivative_unchecked(s); }, t, 52);
  }

  double operator()(double t) const {
    if (t == 0.0) return 0.0;
    const double s = argmax(t);
    return s * t - primal_(s);
  }

 private:
  YoungFunction primal_;
};

inline ConjugatePair conjugate(const YoungFunction& G) { return ConjugatePair(G); }

namespace detail {

/// Integrand of (G*)^{-1} after the substitution s = e^x:
/// G^{-1}(e^x) e^{-x/N}.
inline double sobolev_integrand(const YoungFunction& G, int N, double x) {
  const double s = std::exp(x);
  if (s == 0.0) return 0.0;
  return G.inverse(s) * std::exp(-x / N);
}

/// Exponential decay rate of the integrand as x -> -inf; <= 0 means the
/// lower integral of the compactness condition diverges.
inline double lower_decay_rate(const YoungFunction& G, int N) {
  const double x1 = -40.0;
  const double x2 = -80.0;
  return (std::log(sobolev_integrand(G, N, x1)) - std::log(sobolev_integrand(G, N, x2))) / (x1 - x2);
}

inline constexpr double kMinDecayRate = 1e-3;

/// int_1^tau G^{-1}(s) s^{-1-1/N} ds; the divergence at infinity is the
/// part that matters for trace compatibility.
inline double sobolev_tail_integral(const YoungFunction& G, int N, double tau) {
  if (tau <= 1.0) return 0.0;
  auto f = [&](double x) { return sobolev_integrand(G, N, x); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, std::log(tau), 15, 1e-11);
}

}  // namespace detail

/// True when int_0^1 G^{-1}(s) / s^{1+1/N} ds is finite (numerically).
inline bool lower_compactness_integral_finite(const YoungFunction& G, int N) {
  return detail::lower_decay_rate(G, N) > detail::kMinDecayRate;
}

/// (G*)^{-1}(t) = int_0^t G^{-1}(s) / s^{1+1/N} ds.
inline double sobolev_conjugate_inverse(const YoungFunction& G, int N, double t) {
  if (N < 2) throw DomainError("sobolev_conjugate_inverse: need N >= 2");
  if (!(t >= 0.0)) throw DomainError("sobolev_conjugate_inverse: need t >= 0");
  if (!lower_compactness_integral_finite(G, N)) {
    throw DomainError("compactness condition violated: int_0^1 G^{-1}(s) s^{-1-1/N} ds diverges for " +
                      G.expression());
  }
  if (t == 0.0) return 0.0;
  auto f = [&](double x) { return detail::sobolev_integrand(G, N, x); };
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate(f, -std::numeric_limits<double>::infinity(), std::log(t), 1e-12);
}

enum class Compatibility { compatible, incompatible, inconclusive };

inline const char* to_string(Compatibility c) {
  switch (c) {
    case Compatibility::compatible:
      return "compatible";
    case Compatibility::incompatible:
      return "incompatible";
    case Compatibility::inconclusive:
      return "inconclusive";
  }
  return "?";
}

struct CompatibilityReport {
  Compatibility verdict = Compatibility::inconclusive;
  bool lower_integral_finite = false;
  std::vector<double> t_values;
  std::vector<double> ratios;  ///< Psi^{-1}(t) / H^{-1}(t)
  double tail_slope = 0.0;     ///< log-log slope of the ratio over the last three decades
};

namespace detail {
inline constexpr int kCompatFirstDecade = 1;
inline constexpr int kCompatLastDecade = 40;
inline constexpr double kCompatTol = 1e-3;
}  // namespace detail

/// Decides H << Psi with Psi = (G*)^{(N-1)/N}, through the equivalent
/// inverse-function limit Psi^{-1}(t) / H^{-1}(t) -> 0. Psi^{-1}(t) is
/// (G*)^{-1}(t^{N/(N-1)}) anchored at s = 1, which leaves the limit unchanged.
/// The ratio is sampled at t = 10^k; "compatible" requires strict decay over
/// the last three decades ending below 1e-3, "incompatible" a nondecreasing
/// tail.
inline CompatibilityReport check_trace_compatibility(const YoungFunction& G,
                                                     const std::function<double(double)>& h_inverse, int N) {
  if (N < 2) throw DomainError("check_trace_compatibility: need N >= 2");
  CompatibilityReport rep;
  rep.lower_integral_finite = lower_compactness_integral_finite(G, N);
  const double expo = static_cast<double>(N) / (N - 1);
  for (int k = detail::kCompatFirstDecade; k <= detail::kCompatLastDecade; ++k) {
    const double t = std::pow(10.0, k);
    const double num = detail::sobolev_tail_integral(G, N, std::pow(t, expo));
    const double den = h_inverse(t);
    if (!std::isfinite(num) || !std::isfinite(den) || den <= 0.0) break;
    rep.t_values.push_back(t);
    rep.ratios.push_back(num / den);
  }
  const std::size_t n = rep.ratios.size();
  if (n < 4) return rep;
  const auto tail = std::span(rep.ratios).last(4);
  rep.tail_slope = (std::log(tail[3]) - std::log(tail[0])) / 3.0;
  bool decreasing = true;
  bool nondecreasing = true;
  for (std::size_t i = 1; i < tail.size(); ++i) {
    decreasing = decreasing && tail[i] < tail[i - 1];
    nondecreasing = nondecreasing && tail[i] >= tail[i - 1] * (1.0 - 1e-12);
  }
  if (decreasing && tail[3] < detail::kCompatTol) {
    rep.verdict = Compatibility::compatible;
  } else if (nondecreasing) {
    rep.verdict = Compatibility::incompatible;
  }
  return rep;
}

inline CompatibilityReport check_trace_compatibility(const YoungFunction& G, const YoungFunction& H, int N) {
  return check_trace_compatibility(G, [&H](double t) { return H.inverse(t); }, N);
}

// ---------------------------------------------------------------------------
// Expression grammar:
//   expr := pow(p) | powlog(p,a,b) | powdivlog(p,a,b) | compose(expr,expr)
//         | max(expr,...) | sum(c*expr,...)

namespace detail {

class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view text) : s_(text) {}

  YoungFunction parse() {
    auto f = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("Young expression '" + std::string(s_) + "' at offset " + std::to_string(pos_) + ": " + what);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  std::string ident() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected a function name");
    return std::string(s_.substr(start, pos_ - start));
  }

  double number() {
    skip_ws();
    const std::string rest(s_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str()) fail("expected a number");
    pos_ += static_cast<std::size_t>(end - rest.c_str());
    if (!std::isfinite(v)) fail("non-finite number");
    return v;
  }

  template <class Factory>
  YoungFunction guarded(Factory&& make) {
    try {
      return make();
    } catch (const DomainError& e) {
      fail(e.what());
    }
  }

  YoungFunction expr() {
    const std::string name = ident();
    expect('(');
    if (name == "pow") {
      const double p = number();
      expect(')');
      return guarded([&] { return YoungFunction::power(p); });
    }
    if (name == "powlog" || name == "powdivlog") {
      const double p = number();
      expect(',');
      const double a = number();
      expect(',');
      const double b = number();
      expect(')');
      return guarded([&] {
        return name == "powlog" ? YoungFunction::power_log(p, a, b) : YoungFunction::power_div_log(p, a, b);
      });
    }
    if (name == "compose") {
      auto outer = expr();
      expect(',');
      auto inner = expr();
      expect(')');
      return guarded([&] { return YoungFunction::compose(outer, inner); });
    }
    if (name == "max") {
      std::vector<YoungFunction> parts{expr()};
      while (accept(',')) parts.push_back(expr());
      expect(')');
      return guarded([&] { return YoungFunction::max_of(std::move(parts)); });
    }
    if (name == "sum") {
      std::vector<double> coeffs;
      std::vector<YoungFunction> parts;
      do {
        skip_ws();
        double c = 1.0;
        if (pos_ < s_.size() && !std::isalpha(static_cast<unsigned char>(s_[pos_]))) {
          c = number();
          expect('*');
        }
        coeffs.push_back(c);
        parts.push_back(expr());
      } while (accept(','));
      expect(')');
      return guarded([&] { return YoungFunction::combination(std::move(coeffs), std::move(parts)); });
    }
    fail("unknown function '" + name + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline YoungFunction parse_young(std::string_view text) { return detail::ExpressionParser(text).parse(); }

}  // namespace orlicz
