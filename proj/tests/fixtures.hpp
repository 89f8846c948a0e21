#pragma once

#include <algorithm>
#include <cmath>

#include "normfield/field_grid.hpp"
#include "normfield/vortex_field.hpp"

namespace fixtures {

using namespace normfield;

/// (0,1) left of x = x0, (1,0) right of it.
inline FieldGrid jump_grid(const PlanarNorm& norm, std::size_t n = 256, double x0 = -0.2) {
  FieldGrid g = square_grid(norm, n);
  fill(g, [x0](Vec2 x) { return x.x < x0 ? Vec2{0, 1} : Vec2{1, 0}; });
  return g;
}

/// Rotated euclidean vortex x^perp/|x|.
inline FieldGrid rotated_vortex_grid(std::size_t n = 256) {
  FieldGrid g = vortex_grid({PlanarNorm(), {0, 0}, 1}, n);
  for (auto& m : g.values) m = perp(m);
  return g;
}

/// +V(x - p) for x.x < 0 and -V(x - q) for x.x >= 0, p = (-0.5, 0), q = (0.5, 0).
inline FieldGrid glued_vortices_grid(const PlanarNorm& norm, std::size_t n = 128) {
  FieldGrid g = square_grid(norm, n);
  const VortexField a{norm, {-0.5, 0.0}, 1}, b{norm, {0.5, 0.0}, -1};
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 c = g.center(i, j);
      for (Vec2 p : {a.center, b.center})
        if (std::fabs(c.x - p.x) <= 0.5 * g.h && std::fabs(c.y - p.y) <= 0.5 * g.h) g.mask[g.index(i, j)] = 0;
    }
  fill(g, [&](Vec2 x) { return x.x < 0.0 ? vortex_eval(a, x) : vortex_eval(b, x); });
  return g;
}

inline double segment_distance(Vec2 a, Vec2 b, Vec2 p) {
  const Vec2 d = b - a;
  const double l2 = dot(d, d);
  const double t = l2 > 0.0 ? std::clamp(dot(p - a, d) / l2, 0.0, 1.0) : 0.0;
  return length(a + t * d - p);
}

}  // namespace fixtures
