#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "boundary_atlas.hpp"
#include "error.hpp"
#include "numerics.hpp"
#include "planar_norm.hpp"

namespace normfield {

/// Midpoint rule on the polyline of a perp atlas: segment i runs from
/// points[i] to points[i+1], with midpoint s_i, length dl_i and outward unit
/// normal n_i.
struct QuadratureRule {
  BoundaryAtlas atlas;  // is_perp
  std::vector<Vec2> midpoints;
  std::vector<double> weights;
  std::vector<Vec2> normals;
  double quad_tol = 1e-6;

  std::size_t size() const { return weights.size(); }
  /// Gauge of the body B whose rotation the rule integrates over.
  double body_gauge(Vec2 x) const { return atlas.body_gauge(perp(x)); }
  Vec2 body_boundary_point(double theta) const {
    const Vec2 u = unit_from_angle(theta);
    return u / body_gauge(u);
  }
  Vec2 perp_boundary_point(double theta) const {
    const Vec2 u = unit_from_angle(theta);
    return u / atlas.body_gauge(u);
  }
};

inline double default_quad_tol(std::size_t n_samples) {
  return std::max(1e-6, 10.0 / static_cast<double>(n_samples));
}

inline QuadratureRule quadrature_rule(const BoundaryAtlas& perp_atlas) {
  require(perp_atlas.is_perp, "quadrature rule needs a perp atlas");
  QuadratureRule r;
  r.atlas = perp_atlas;
  const std::size_t n = perp_atlas.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = perp_atlas.points[i], b = perp_atlas.points[perp_atlas.next(i)];
    const double len = length(b - a);
    r.midpoints.push_back(0.5 * (a + b));
    r.weights.push_back(len);
    r.normals.push_back(perp_inv(b - a) / len);
  }
  r.quad_tol = default_quad_tol(n);
  return r;
}

inline QuadratureRule quadrature_rule(const PlanarNorm& norm, std::size_t n_samples) {
  return quadrature_rule(atlas_perp(boundary_atlas(norm, n_samples)));
}

/// Minkowski functional of the translated body B + c (requires ||c|| < 1):
/// the t with ||x - t c|| = t.
inline std::function<double(Vec2)> shifted_body_gauge(const PlanarNorm& norm, Vec2 c) {
  require(norm(c) < 1.0, "shifted body must contain the origin in its interior");
  return [norm, c](Vec2 x) {
    if (x.x == 0.0 && x.y == 0.0) return 0.0;
    const double hi = norm(x) / (1.0 - norm(c));
    return numerics::bracketed_root([&](double t) { return norm(x - t * c) - t; }, 0.0, hi);
  };
}

/// Atlas of the boundary of B + c, for the non-symmetric negative test.
inline BoundaryAtlas shifted_body_atlas(const PlanarNorm& norm, Vec2 c, std::size_t n_samples) {
  BoundaryAtlas at = trace_boundary(shifted_body_gauge(norm, c), n_samples);
  detail::finish_atlas(at);
  return at;
}

/// 1/2 sum_i 1{x.s > 0} n_i dl_i, with the segments where x.s changes sign
/// split at the exact zero crossing.
inline Vec2 reconstruct_point(const QuadratureRule& rule, Vec2 x) {
  const auto& pts = rule.atlas.points;
  Vec2 acc{};
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double a = dot(x, pts[i]), b = dot(x, pts[rule.atlas.next(i)]);
    double frac = 0.0;
    if (a > 0.0 && b > 0.0) frac = 1.0;
    else if (a > 0.0) frac = a / (a - b);
    else if (b > 0.0) frac = b / (b - a);
    if (frac > 0.0) acc += (frac * rule.weights[i]) * rule.normals[i];
  }
  return 0.5 * acc;
}

/// m(x) = 1/2 sum_i chi(x, i) n_i dl_i for every point; chi sees segment i
/// through rule.midpoints[i].
template <class Chi>
std::vector<Vec2> reconstruct_field(const QuadratureRule& rule, Chi&& chi, const std::vector<Vec2>& points) {
  std::vector<Vec2> out;
  out.reserve(points.size());
  for (Vec2 x : points) {
    Vec2 acc{};
    for (std::size_t i = 0; i < rule.size(); ++i)
      if (chi(x, i)) acc += rule.weights[i] * rule.normals[i];
    out.push_back(0.5 * acc);
  }
  return out;
}

/// chi_m(x, s_i) = 1{m(x).s_i > 0} for a field given as a callable; m is
/// evaluated once per point.
template <class Field>
auto chi_of_field(const QuadratureRule& rule, Field m) {
  return [&rule, m, last = Vec2{NAN, NAN}, value = Vec2{}](Vec2 x, std::size_t i) mutable {
    if (!(x == last)) {
      value = m(x);
      last = x;
    }
    return dot(value, rule.midpoints[i]) > 0.0;
  };
}

/// Quadrature of 1/2 n dH^1 over the counterclockwise arc ]u, v] of the
/// polyline, u and v projected radially onto it.
inline Vec2 arc_measure(const QuadratureRule& rule, Vec2 u, Vec2 v) {
  require_on_boundary(rule.atlas, u, "arc_measure");
  require_on_boundary(rule.atlas, v, "arc_measure");
  const auto& at = rule.atlas;
  const std::size_t iu = at.segment_of(u), iv = at.segment_of(v);
  auto param = [&](std::size_t i, Vec2 hit) {
    return std::clamp(length(hit - at.points[i]) / rule.weights[i], 0.0, 1.0);
  };
  const double tu = param(iu, at.radial_hit(u)), tv = param(iv, at.radial_hit(v));
  Vec2 acc{};
  auto add = [&](std::size_t i, double t0, double t1) { acc += ((t1 - t0) * rule.weights[i]) * rule.normals[i]; };
  if (iu == iv && tv >= tu) {
    add(iu, tu, tv);
  } else {
    add(iu, tu, 1.0);
    for (std::size_t i = at.next(iu); i != iv; i = at.next(i)) add(i, 0.0, 1.0);
    add(iv, 0.0, tv);
  }
  return 0.5 * acc;
}

/// Measure of the whole curve.
inline Vec2 loop_measure(const QuadratureRule& rule) {
  Vec2 acc{};
  for (std::size_t i = 0; i < rule.size(); ++i) acc += rule.weights[i] * rule.normals[i];
  return 0.5 * acc;
}

struct ReconstructionReport {
  std::vector<Vec2> points;
  std::vector<double> residuals;
  double max_error = 0.0;
  double mean_error = 0.0;
  std::size_t n_samples = 0;
  double quad_tol = 0.0;
  bool passed = false;
};

/// Reconstructs n_points random boundary points of B and compares with the
/// points themselves.
inline ReconstructionReport verify_reconstruction(const QuadratureRule& rule, std::size_t n_points = 64,
                                                  std::uint64_t seed = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ang(0.0, kTwoPi);
  ReconstructionReport rep;
  rep.n_samples = rule.size();
  rep.quad_tol = rule.quad_tol;
  for (std::size_t k = 0; k < n_points; ++k) {
    const Vec2 x = rule.body_boundary_point(ang(rng));
    const double err = length(reconstruct_point(rule, x) - x);
    rep.points.push_back(x);
    rep.residuals.push_back(err);
    rep.max_error = std::max(rep.max_error, err);
    rep.mean_error += err / static_cast<double>(n_points);
  }
  rep.passed = rep.max_error <= rep.quad_tol;
  return rep;
}

struct ConvergenceReport {
  std::size_t n_samples = 0;
  double error_n = 0.0;
  double error_2n = 0.0;
  double ratio = 0.0;
  bool passed = false;
};

/// error(2N) <= 0.6 error(N), or both at roundoff level (1e-12) as happens
/// for polygons where the rule is exact.
inline ConvergenceReport reconstruction_convergence(const PlanarNorm& norm, std::size_t n_samples,
                                                    std::size_t n_points = 64, std::uint64_t seed = 0) {
  ConvergenceReport rep;
  rep.n_samples = n_samples;
  rep.error_n = verify_reconstruction(quadrature_rule(norm, n_samples), n_points, seed).max_error;
  rep.error_2n = verify_reconstruction(quadrature_rule(norm, 2 * n_samples), n_points, seed).max_error;
  rep.ratio = rep.error_n > 0.0 ? rep.error_2n / rep.error_n : 0.0;
  rep.passed = rep.error_2n <= 0.6 * rep.error_n || rep.error_2n <= 1e-12;
  return rep;
}

struct ArcReport {
  std::size_t n_arcs = 0;
  double max_defect = 0.0;
  double quad_tol = 0.0;
  bool passed = false;
};

namespace detail {

template <class Defect>
ArcReport random_arc_report(const QuadratureRule& rule, std::size_t n_arcs, std::uint64_t seed, Defect defect) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ang(0.0, kTwoPi);
  ArcReport rep;
  rep.n_arcs = n_arcs;
  rep.quad_tol = rule.quad_tol;
  for (std::size_t k = 0; k < n_arcs; ++k) {
    const Vec2 u = rule.perp_boundary_point(ang(rng));
    const Vec2 v = rule.perp_boundary_point(ang(rng));
    rep.max_defect = std::max(rep.max_defect, defect(u, v));
  }
  rep.passed = rep.max_defect <= rep.quad_tol;
  return rep;
}

}  // namespace detail

/// mu(]u,v]) = 1/2 R^{-1}(v - u) on random arcs.
inline ArcReport stieltjes_check(const QuadratureRule& rule, std::size_t n_arcs = 64, std::uint64_t seed = 0) {
  return detail::random_arc_report(rule, n_arcs, seed, [&](Vec2 u, Vec2 v) {
    return length(arc_measure(rule, u, v) - 0.5 * perp_inv(v - u));
  });
}

/// mu(-A) = -mu(A) on random arcs A = ]u,v].
inline ArcReport antisymmetry_check(const QuadratureRule& rule, std::size_t n_arcs = 64, std::uint64_t seed = 0) {
  return detail::random_arc_report(rule, n_arcs, seed, [&](Vec2 u, Vec2 v) {
    return length(arc_measure(rule, u, v) + arc_measure(rule, -u, -v));
  });
}

}  // namespace normfield
