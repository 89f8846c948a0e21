#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "error.hpp"

namespace normfield::numerics {

/// Root of a monotone function bracketed by [lo, hi]. Endpoint values may be
/// passed in when already known.
template <class F>
double bracketed_root(F&& f, double lo, double hi, double f_lo, double f_hi) {
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  require((f_lo < 0.0) != (f_hi < 0.0), "bracketed_root: no sign change");
  std::uintmax_t max_iter = 200;
  auto tol = [](double a, double b) { return std::fabs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::fmax(1.0, std::fabs(a)); };
  auto r = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, tol, max_iter);
  return 0.5 * (r.first + r.second);
}

template <class F>
double bracketed_root(F&& f, double lo, double hi) {
  return bracketed_root(f, lo, hi, f(lo), f(hi));
}

struct Minimum {
  double arg;
  double value;
};

/// Local minimum of f on [lo, hi] (Brent: golden section plus parabolic steps).
template <class F>
Minimum minimize(F&& f, double lo, double hi, int bits = 40) {
  std::uintmax_t max_iter = 200;
  auto r = boost::math::tools::brent_find_minima(f, lo, hi, bits, max_iter);
  return {r.first, r.second};
}

/// Coarse scan over `args` followed by a bracketed local refinement around
/// the best sample. Suited to objectives that are unimodal at the coarse
/// grid scale.
template <class F>
Minimum scan_and_refine(F&& f, std::span<const double> args, bool periodic_wrap = false) {
  const std::size_t n = args.size();
  require(n >= 3, "scan_and_refine: need at least 3 samples");
  std::size_t best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = f(args[i]);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  double lo, hi;
  if (best == 0) {
    lo = periodic_wrap ? args[0] - (args[1] - args[0]) : args[0];
    hi = args[1];
  } else if (best == n - 1) {
    lo = args[n - 2];
    hi = periodic_wrap ? args[n - 1] + (args[n - 1] - args[n - 2]) : args[n - 1];
  } else {
    lo = args[best - 1];
    hi = args[best + 1];
  }
  Minimum m = minimize(f, lo, hi);
  if (m.value <= best_val) return m;
  return {args[best], best_val};
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n = 0;
};

/// Ordinary least squares y = slope * x + intercept.
inline LineFit least_squares(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size() && xs.size() >= 2, "least_squares: need >= 2 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  require(sxx > 0.0, "least_squares: abscissae are all equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.n = xs.size();
  return fit;
}

}  // namespace normfield::numerics
