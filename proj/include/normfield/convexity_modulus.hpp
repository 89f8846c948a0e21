#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "boundary_atlas.hpp"
#include "error.hpp"
#include "numerics.hpp"
#include "planar_norm.hpp"

namespace normfield {

enum class ModulusKind { omega, rho };

inline const char* to_string(ModulusKind k) { return k == ModulusKind::omega ? "omega" : "rho"; }

struct ModulusCurve {
  ModulusKind kind = ModulusKind::omega;
  std::vector<double> deltas;
  std::vector<double> values;
};

struct PowerTypeFit {
  double p_hat = 0.0;
  double K_hat = 0.0;
  double r_squared = 0.0;
  double delta_min = 0.0;
  double delta_max = 0.0;
  std::size_t n_points = 0;
};

namespace detail {

// Boundary angle phi on the half-arc starting at theta (side = +1 ccw,
// -1 cw) with ||r(phi) - r(theta)|| = delta. The distance is monotone along
// the half-arc, so the root is bracketed by the arc endpoints.
inline double partner_angle(const PlanarNorm& norm, double theta, Vec2 x, double delta, int side) {
  auto f = [&](double phi) { return norm(norm.boundary_point(phi) - x) - delta; };
  const double far = theta + side * kPi;
  const double f_far = f(far);
  if (f_far <= 0.0) return far;
  return side > 0 ? numerics::bracketed_root(f, theta, far, -delta, f_far)
                  : numerics::bracketed_root(f, far, theta, f_far, -delta);
}

inline std::vector<double> half_turn_angles(std::size_t n_samples) {
  const std::size_t m = std::max<std::size_t>(n_samples / 2, 8);
  std::vector<double> a(m);
  for (std::size_t i = 0; i < m; ++i) a[i] = kPi * static_cast<double>(i) / static_cast<double>(m);
  return a;
}

inline void require_delta(double delta) {
  require(delta > 0.0 && delta <= 2.0, "delta must lie in (0, 2]");
}

}  // namespace detail

/// omega_B(delta): inf of 1 - ||(x+y)/2|| over unit vectors at distance
/// delta. Sweeps x over a half turn (the pair (-x,-y) has the same value),
/// solves for the partner y on the counterclockwise half-arc, then refines
/// the coarse minimizer.
inline double omega(const PlanarNorm& norm, double delta, std::size_t n_samples = 4096) {
  detail::require_delta(delta);
  auto value = [&](double theta) {
    const Vec2 x = norm.boundary_point(theta);
    const Vec2 y = norm.boundary_point(detail::partner_angle(norm, theta, x, delta, +1));
    return 0.5 * (norm(x) + norm(y)) - norm(0.5 * (x + y));
  };
  const auto angles = detail::half_turn_angles(n_samples);
  return std::clamp(numerics::scan_and_refine(value, angles, true).value, 0.0, 1.0);
}

/// rho_B(delta): inf over x on the sphere, y on the sphere with
/// ||y - x|| = delta and dual-unit normals u at x of u.(x - y). Along each
/// half-arc from x the quantity is nondecreasing in the distance, so this is
/// already the greatest nondecreasing minorant.
inline double rho(const PlanarNorm& norm, double delta, std::size_t n_samples = 4096) {
  detail::require_delta(delta);
  auto value = [&](double theta) {
    const Vec2 x = norm.boundary_point(theta);
    const auto us = norm.normal_functionals(x);
    double best = std::numeric_limits<double>::infinity();
    for (int side : {+1, -1}) {
      const Vec2 y = norm.boundary_point(detail::partner_angle(norm, theta, x, delta, side));
      for (Vec2 u : us) best = std::min(best, dot(u, x - y));
    }
    return best;
  };
  const auto angles = detail::half_turn_angles(n_samples);
  return std::max(0.0, numerics::scan_and_refine(value, angles, true).value);
}

inline void require_increasing(const std::vector<double>& deltas) {
  require(!deltas.empty(), "delta grid must not be empty");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    detail::require_delta(deltas[i]);
    require(i == 0 || deltas[i] > deltas[i - 1], "delta grid must be strictly increasing");
  }
}

inline ModulusCurve omega_curve(const PlanarNorm& norm, const std::vector<double>& deltas, std::size_t n_samples = 4096) {
  require_increasing(deltas);
  ModulusCurve c{ModulusKind::omega, deltas, {}};
  for (double d : deltas) c.values.push_back(omega(norm, d, n_samples));
  return c;
}

/// rho on a grid with the running-inf-from-the-right envelope applied.
inline ModulusCurve rho_curve(const PlanarNorm& norm, const std::vector<double>& deltas, std::size_t n_samples = 4096) {
  require_increasing(deltas);
  ModulusCurve c{ModulusKind::rho, deltas, {}};
  for (double d : deltas) c.values.push_back(rho(norm, d, n_samples));
  for (std::size_t i = c.values.size(); i-- > 1;) c.values[i - 1] = std::min(c.values[i - 1], c.values[i]);
  return c;
}

/// n log-spaced deltas on [lo, hi].
inline std::vector<double> log_deltas(double lo, double hi, std::size_t n) {
  require(lo > 0.0 && hi > lo && n >= 2, "log_deltas: need 0 < lo < hi and n >= 2");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i)
    d[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
  return d;
}

/// Least-squares fit of log value = p log delta + log K on the samples in
/// [delta_min, delta_max] whose value exceeds 1e-12.
inline PowerTypeFit fit_power_type(const ModulusCurve& curve, double delta_min = 1e-3, double delta_max = 1e-1) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < curve.deltas.size(); ++i) {
    const double d = curve.deltas[i], v = curve.values[i];
    if (d >= delta_min && d <= delta_max && v > 1e-12) {
      lx.push_back(std::log(d));
      ly.push_back(std::log(v));
    }
  }
  if (lx.size() < 8) throw DegenerateModulus();
  const auto fit = numerics::least_squares(lx, ly);
  return {fit.slope, std::exp(fit.intercept), fit.r_squared, delta_min, delta_max, fit.n};
}

struct SandwichRow {
  double delta;
  double omega;
  double rho_half;      // rho(delta / 2)
  double rho_full;      // rho(delta)
  double lower_margin;  // omega - rho(delta/2)
  double upper_margin;  // rho(delta)/2 - omega
};

struct SandwichReport {
  std::vector<SandwichRow> rows;
  double slack = 1e-3;
  bool passed = true;
};

/// rho(delta/2) <= omega(delta) <= rho(delta)/2 on every grid point, up to slack.
inline SandwichReport sandwich_check(const PlanarNorm& norm, const std::vector<double>& deltas,
                                     std::size_t n_samples = 4096, double slack = 1e-3) {
  require_increasing(deltas);
  SandwichReport rep;
  rep.slack = slack;
  for (double d : deltas) {
    SandwichRow r{d, omega(norm, d, n_samples), rho(norm, d / 2, n_samples), rho(norm, d, n_samples), 0, 0};
    r.lower_margin = r.omega - r.rho_half;
    r.upper_margin = r.rho_full / 2 - r.omega;
    rep.passed = rep.passed && r.lower_margin >= -slack && r.upper_margin >= -slack;
    rep.rows.push_back(r);
  }
  return rep;
}

struct NordlanderRow {
  double delta;
  double omega;
  double omega_euclidean;
  double margin;  // omega_euclidean - omega
};

struct NordlanderReport {
  std::vector<NordlanderRow> rows;
  double slack = 1e-6;
  bool passed = true;
};

/// omega_B <= omega_2 on the grid, the euclidean modulus computed by the same pipeline.
inline NordlanderReport nordlander_check(const PlanarNorm& norm, const std::vector<double>& deltas,
                                         std::size_t n_samples = 4096, double slack = 1e-6) {
  require_increasing(deltas);
  const PlanarNorm euclid;
  NordlanderReport rep;
  rep.slack = slack;
  for (double d : deltas) {
    NordlanderRow r{d, omega(norm, d, n_samples), omega(euclid, d, n_samples), 0};
    r.margin = r.omega_euclidean - r.omega;
    rep.passed = rep.passed && r.margin >= -slack;
    rep.rows.push_back(r);
  }
  return rep;
}

/// Boundary near x written in the frame (tau, nu) of the tangent and inner
/// normal at x: gamma = x + a tau + b nu, sampled by signed arclength t.
struct LocalGraph {
  Vec2 base;
  Vec2 tau;
  Vec2 nu;
  std::vector<double> t;
  std::vector<double> a;
  std::vector<double> b;
};

inline LocalGraph local_graph(const PlanarNorm& norm, Vec2 x, double window, std::size_t n_per_side = 400) {
  require(window > 0.0, "local_graph: window must be positive");
  const auto at = boundary_atlas(norm, 1024);
  require(window <= at.perimeter() / 4, "local_graph: window exceeds half the boundary");
  require(std::fabs(norm(x) - 1.0) <= 1e-6, "local_graph: base point is not on the unit sphere");
  LocalGraph g;
  g.base = x;
  const Vec2 n = norm.unit_normal(x);
  g.nu = -n;
  g.tau = perp(n);
  const double theta0 = angle_of(x);
  const double dtheta = window * norm.c_low() / (4.0 * static_cast<double>(n_per_side));
  std::vector<std::array<double, 3>> rows{{0.0, 0.0, 0.0}};
  for (int side : {+1, -1}) {
    double s = 0.0;
    Vec2 prev = x;
    for (std::size_t k = 1; s < window; ++k) {
      const Vec2 y = norm.boundary_point(theta0 + side * dtheta * static_cast<double>(k));
      s += length(y - prev);
      prev = y;
      if (s > window) break;
      rows.push_back({side * s, dot(y - x, g.tau), dot(y - x, g.nu)});
    }
  }
  std::sort(rows.begin(), rows.end());
  for (const auto& r : rows) {
    g.t.push_back(r[0]);
    g.a.push_back(r[1]);
    g.b.push_back(r[2]);
  }
  return g;
}

/// Whether b >= C |a|^p on every sample of the graph.
inline bool graph_power_check(const LocalGraph& g, double p, double C) {
  for (std::size_t i = 0; i < g.t.size(); ++i) {
    if (g.a[i] == 0.0) continue;
    if (g.b[i] < C * std::pow(std::fabs(g.a[i]), p) - 1e-13) return false;
  }
  return true;
}

namespace detail {

inline double circumcurvature(Vec2 a, Vec2 b, Vec2 c) {
  return 2.0 * cross(b - a, c - a) / (length(b - a) * length(c - b) * length(c - a));
}

inline void require_curvature_atlas(const BoundaryAtlas& atlas) {
  require(atlas.norm.has_value() && atlas.norm->is_c1(),
          "curvature is not representable on polygon or corner atlases");
}

}  // namespace detail

/// Discrete curvature at x from the circle through three consecutive atlas points.
inline double curvature(const BoundaryAtlas& atlas, Vec2 x) {
  detail::require_curvature_atlas(atlas);
  require_on_boundary(atlas, x, "curvature");
  std::size_t i = atlas.segment_of(x);
  if (length(atlas.points[atlas.next(i)] - x) < length(atlas.points[i] - x)) i = atlas.next(i);
  return detail::circumcurvature(atlas.points[atlas.prev(i)], atlas.points[i], atlas.points[atlas.next(i)]);
}

inline double min_curvature(const BoundaryAtlas& atlas) {
  detail::require_curvature_atlas(atlas);
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < atlas.size(); ++i)
    m = std::min(m, detail::circumcurvature(atlas.points[atlas.prev(i)], atlas.points[i], atlas.points[atlas.next(i)]));
  return m;
}

/// Whether the discrete curvature stays above `threshold` on the whole sphere.
inline bool elliptic_check(const PlanarNorm& norm, std::size_t n_samples = 4096, double threshold = 1e-3) {
  return min_curvature(boundary_atlas(norm, n_samples)) > threshold;
}

}  // namespace normfield
