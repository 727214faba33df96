#pragma once

// Small numeric helpers shared by the modules: monotone root-finding,
// log-spaced grids, golden-section search and round-trip number formatting.

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "orlicz/errors.hpp"

namespace orlicz::numeric {

inline std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> grid(static_cast<std::size_t>(n));
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < n; ++i) {
    grid[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  }
  return grid;
}

/// Solves f(x) = target for a continuous nondecreasing f on [0, inf) with
/// f(0) <= target. Brackets geometrically, then runs TOMS 748.
template <class F>
double monotone_inverse(F&& f, double target, int bits = 42) {
  if (!(target >= 0.0) || !std::isfinite(target)) {
    throw DomainError("monotone_inverse: target must be finite and >= 0");
  }
  if (target == 0.0) return 0.0;
  double lo = 0.5;
  double hi = 1.0;
  if (f(hi) < target) {
    int guard = 0;
    while (f(hi) < target) {
      lo = hi;
      hi *= 2.0;
      if (++guard > 2000 || !std::isfinite(hi)) {
        throw NumericError("monotone_inverse: no upper bracket");
      }
    }
  } else {
    int guard = 0;
    while (f(lo) > target) {
      hi = lo;
      lo *= 0.5;
      if (++guard > 2000 || lo == 0.0) {
        throw NumericError("monotone_inverse: no lower bracket");
      }
    }
  }
  const double flo = f(lo) - target;
  const double fhi = f(hi) - target;
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  std::uintmax_t max_iter = 200;
  auto r = boost::math::tools::toms748_solve(
      [&](double x) { return f(x) - target; }, lo, hi, flo, fhi,
      boost::math::tools::eps_tolerance<double>(bits), max_iter);
  return 0.5 * (r.first + r.second);
}

/// Golden-section search for the minimum of f on [a, b].
template <class F>
std::pair<double, double> golden_min(F&& f, double a, double b, int iters = 60) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? std::pair{c, fc} : std::pair{d, fd};
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer a shorter representation when it round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[64];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

}  // namespace orlicz::numeric
