#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "error.hpp"
#include "numerics.hpp"
#include "planar_norm.hpp"
#include "vec2.hpp"

namespace normfield {

/// Rotation by k quarter turns (k may be negative).
inline Vec2 rotate_quarter(Vec2 v, int k) {
  switch (((k % 4) + 4) % 4) {
    case 1: return perp(v);
    case 2: return -v;
    case 3: return perp_inv(v);
    default: return v;
  }
}

/// Counterclockwise closed polyline on the boundary of a body. The closing
/// segment from points.back() to points.front() is implicit.
struct BoundaryAtlas {
  std::vector<Vec2> points;
  std::vector<double> thetas;         // radial angle of each point (increasing)
  std::vector<double> cum_arclength;  // size points.size() + 1; back() is the perimeter
  std::vector<Vec2> tangents;
  std::vector<Vec2> normals;
  bool is_perp = false;
  int quarter_turns = 0;
  double atlas_tol = 1e-6;
  std::optional<PlanarNorm> norm;          // absent for bodies that are not unit balls
  std::function<double(Vec2)> body_gauge;  // Minkowski functional of the traced body

  std::size_t size() const { return points.size(); }
  double perimeter() const { return cum_arclength.back(); }
  std::size_t next(std::size_t i) const { return i + 1 == points.size() ? 0 : i + 1; }
  std::size_t prev(std::size_t i) const { return i == 0 ? points.size() - 1 : i - 1; }

  /// Index of the segment [i, i+1] crossed by the ray from 0 through x.
  std::size_t segment_of(Vec2 x) const {
    const double t0 = thetas.front();
    double a = wrap_angle(angle_of(x) - t0) + t0;
    auto it = std::upper_bound(thetas.begin(), thetas.end(), a);
    if (it == thetas.begin()) return points.size() - 1;
    return static_cast<std::size_t>(it - thetas.begin()) - 1;
  }

  /// Intersection of the ray through x with the polyline.
  Vec2 radial_hit(Vec2 x) const {
    const std::size_t i = segment_of(x);
    const Vec2 a = points[i], b = points[next(i)];
    const Vec2 d = b - a;
    const double den = cross(x, d);
    const double t = den == 0.0 ? 0.0 : std::clamp(cross(a, x) / den, 0.0, 1.0);
    return a + t * d;
  }
};

namespace detail {

inline void finish_atlas(BoundaryAtlas& at) {
  const std::size_t n = at.points.size();
  at.cum_arclength.assign(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    at.cum_arclength[i + 1] = at.cum_arclength[i] + length(at.points[at.next(i)] - at.points[i]);
  if (at.tangents.empty()) {
    at.tangents.resize(n);
    at.normals.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      at.tangents[i] = normalized(at.points[at.next(i)] - at.points[at.prev(i)]);
      at.normals[i] = perp_inv(at.tangents[i]);
    }
  }
}

}  // namespace detail

/// Traces the boundary of a star-shaped body given its Minkowski functional:
/// points theta_hat / gauge(theta_hat) for uniform theta, plus the given
/// exact corner points.
template <class Gauge>
BoundaryAtlas trace_boundary(Gauge gauge, std::size_t n_samples, const std::vector<Vec2>& corners = {},
                             double atlas_tol = 1e-6) {
  require(n_samples >= 64, "boundary atlas needs at least 64 samples");
  std::vector<std::pair<double, Vec2>> pts;
  pts.reserve(n_samples + corners.size());
  const double dtheta = kTwoPi / static_cast<double>(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double th = dtheta * static_cast<double>(i);
    const Vec2 u = unit_from_angle(th);
    pts.emplace_back(th, u / gauge(u));
  }
  for (Vec2 c : corners) {
    const double th = wrap_angle(angle_of(c));
    // A corner replaces a uniform sample sitting on top of it.
    auto near = std::find_if(pts.begin(), pts.end(), [&](const auto& q) {
      return std::fabs(q.first - th) <= 1e-12 || std::fabs(q.first - th) >= kTwoPi - 1e-12;
    });
    if (near != pts.end()) *near = {th, c};
    else pts.emplace_back(th, c);
  }
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  BoundaryAtlas at;
  at.atlas_tol = atlas_tol;
  for (const auto& [th, p] : pts) {
    at.thetas.push_back(th);
    at.points.push_back(p);
  }
  at.body_gauge = [gauge](Vec2 x) { return gauge(x); };
  return at;
}

/// Radial atlas of the unit sphere of `norm`. Polygon corners are inserted
/// exactly; polygon normals are the exact edge normals (angular midpoint at
/// corners), other normals come from centered differences.
inline BoundaryAtlas boundary_atlas(const PlanarNorm& norm, std::size_t n_samples = 4096,
                                    double atlas_tol = 1e-6) {
  BoundaryAtlas at = trace_boundary([norm](Vec2 x) { return norm(x); }, n_samples, norm.corners(), atlas_tol);
  at.norm = norm;
  if (!norm.corners().empty()) {
    for (Vec2 p : at.points) {
      const Vec2 nn = norm.unit_normal(p);
      at.normals.push_back(nn);
      at.tangents.push_back(perp(nn));
    }
  }
  detail::finish_atlas(at);
  return at;
}

/// Atlas of the rotated body B^perp: every point, tangent and normal turned
/// by +pi/2. Applying it four times restores the original atlas.
inline BoundaryAtlas atlas_perp(const BoundaryAtlas& atlas) {
  BoundaryAtlas out = atlas;
  for (auto* vs : {&out.points, &out.tangents, &out.normals})
    for (Vec2& v : *vs) v = perp(v);
  out.quarter_turns = (atlas.quarter_turns + 1) % 4;
  out.is_perp = out.quarter_turns % 2 == 1;
  const double shift = out.quarter_turns == 0 ? -1.5 * kPi : 0.5 * kPi;
  for (double& th : out.thetas) th += shift;
  out.body_gauge = [g = atlas.body_gauge](Vec2 x) { return g(perp_inv(x)); };
  return out;
}

inline void require_on_boundary(const BoundaryAtlas& atlas, Vec2 x, const char* who) {
  const double g = atlas.body_gauge(x);
  require(std::fabs(g - 1.0) <= atlas.atlas_tol,
          std::string(who) + ": point is not on the boundary (|gauge - 1| = " + std::to_string(std::fabs(g - 1.0)) + ")");
}

/// Outward unit normal at a boundary point. Uses the normal map of the
/// underlying norm when available (angular midpoint at corners), otherwise
/// interpolates the atlas normals.
inline Vec2 normal_at(const BoundaryAtlas& atlas, Vec2 x) {
  require_on_boundary(atlas, x, "normal_at");
  if (atlas.norm) {
    const Vec2 y = rotate_quarter(x, -atlas.quarter_turns);
    return rotate_quarter(atlas.norm->unit_normal(y), atlas.quarter_turns);
  }
  const std::size_t i = atlas.segment_of(x);
  const std::size_t j = atlas.next(i);
  const Vec2 a = atlas.points[i], b = atlas.points[j];
  const Vec2 hit = atlas.radial_hit(x);
  const double seg = length(b - a);
  const double t = seg > 0.0 ? length(hit - a) / seg : 0.0;
  return normalized((1.0 - t) * atlas.normals[i] + t * atlas.normals[j]);
}

/// n_B^{-1}(u): the unique boundary point of a strictly convex C1 unit ball
/// whose outward normal is u.
inline Vec2 inverse_normal(const PlanarNorm& norm, Vec2 u) {
  require(norm.is_c1() && norm.is_strictly_convex(),
          "inverse_normal requires a strictly convex C1 norm (the normal map of this norm is set-valued)");
  require(length(u) > 0.0, "inverse_normal: direction must be nonzero");
  u = normalized(u);
  // The normal rotates monotonically with the radial angle and always makes
  // an acute angle with the position, so the preimage lies within pi/2 of u.
  auto f = [&](double th) {
    const Vec2 g = norm.normal_functionals(unit_from_angle(th)).front();
    return cross(g, u);
  };
  const double tu = angle_of(u);
  const double lo = tu - 0.5 * kPi, hi = tu + 0.5 * kPi;
  const double th = numerics::bracketed_root(f, lo, hi);
  return norm.boundary_point(th);
}

inline Vec2 inverse_normal(const BoundaryAtlas& atlas, Vec2 u) {
  require(atlas.norm.has_value(), "inverse_normal: atlas has no underlying norm");
  const Vec2 v = rotate_quarter(u, -atlas.quarter_turns);
  return rotate_quarter(inverse_normal(*atlas.norm, v), atlas.quarter_turns);
}

/// Convex cone {a u + b v : a, b >= 0}.
struct Cone {
  Vec2 u;
  Vec2 v;

  Cone(Vec2 u_, Vec2 v_) : u(u_), v(v_) {
    require(length(u) > 0.0 && length(v) > 0.0, "cone generators must be nonzero");
    require(std::fabs(cross(u, v)) > 1e-14 * length(u) * length(v), "cone generators must not be collinear");
  }
};

inline bool cone_contains(const Cone& c, Vec2 w) {
  const double det = cross(c.u, c.v);
  const double a = cross(w, c.v) / det;
  const double b = cross(c.u, w) / det;
  return a >= -1e-12 && b >= -1e-12;
}

}  // namespace normfield
