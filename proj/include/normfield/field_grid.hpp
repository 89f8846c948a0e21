#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "planar_norm.hpp"
#include "vec2.hpp"
#include "vortex_field.hpp"

namespace normfield {

/// Cell-centered samples of a unit-norm field: cell (i, j) has center
/// origin + h (i, j). mask = 1 marks cells inside the domain.
struct FieldGrid {
  Vec2 origin{};
  double h = 1.0;
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<Vec2> values;
  std::vector<std::uint8_t> mask;
  PlanarNorm norm;

  std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }
  Vec2 center(std::size_t i, std::size_t j) const {
    return origin + h * Vec2{static_cast<double>(i), static_cast<double>(j)};
  }
  Vec2 at(std::size_t i, std::size_t j) const { return values[index(i, j)]; }
  bool inside(std::size_t i, std::size_t j) const { return mask[index(i, j)] != 0; }
  bool inside(long i, long j) const {
    return i >= 0 && j >= 0 && static_cast<std::size_t>(i) < nx && static_cast<std::size_t>(j) < ny &&
           mask[index(static_cast<std::size_t>(i), static_cast<std::size_t>(j))] != 0;
  }
  /// Extent of the covered rectangle (cell edges, not centers).
  Vec2 lower() const { return origin - Vec2{0.5 * h, 0.5 * h}; }
  Vec2 upper() const { return origin + h * Vec2{nx - 0.5, ny - 0.5}; }

  /// Bilinear interpolation between the four surrounding cell centers; empty
  /// when the stencil leaves the grid or touches a masked cell.
  std::optional<Vec2> bilinear(Vec2 x) const {
    const double fx = (x.x - origin.x) / h, fy = (x.y - origin.y) / h;
    if (!(fx >= 0.0 && fy >= 0.0)) return std::nullopt;
    const long i0 = static_cast<long>(std::floor(fx)), j0 = static_cast<long>(std::floor(fy));
    long i1 = i0 + 1, j1 = j0 + 1;
    const double tx = fx - static_cast<double>(i0), ty = fy - static_cast<double>(j0);
    // Points on the last row or column use a degenerate stencil.
    if (static_cast<std::size_t>(i1) == nx && tx == 0.0) i1 = i0;
    if (static_cast<std::size_t>(j1) == ny && ty == 0.0) j1 = j0;
    if (!inside(i0, j0) || !inside(i1, j0) || !inside(i0, j1) || !inside(i1, j1)) return std::nullopt;
    auto v = [&](long i, long j) { return values[index(static_cast<std::size_t>(i), static_cast<std::size_t>(j))]; };
    return (1 - tx) * (1 - ty) * v(i0, j0) + tx * (1 - ty) * v(i1, j0) + (1 - tx) * ty * v(i0, j1) +
           tx * ty * v(i1, j1);
  }

  /// Cell containing x, if any.
  std::optional<std::pair<std::size_t, std::size_t>> cell_of(Vec2 x) const {
    const double fx = std::floor((x.x - origin.x) / h + 0.5), fy = std::floor((x.y - origin.y) / h + 0.5);
    if (fx < 0 || fy < 0 || fx >= static_cast<double>(nx) || fy >= static_cast<double>(ny)) return std::nullopt;
    return std::make_pair(static_cast<std::size_t>(fx), static_cast<std::size_t>(fy));
  }
};

/// Square grid of n x n cells covering [-half_width, half_width]^2 (shifted
/// by `offset`), every cell unmasked and all values zero.
inline FieldGrid square_grid(const PlanarNorm& norm, std::size_t n, double half_width = 1.0, Vec2 offset = {}) {
  require(n >= 3, "grid needs at least 3 cells per side");
  require(half_width > 0.0, "grid half width must be positive");
  FieldGrid g;
  g.h = 2.0 * half_width / static_cast<double>(n);
  g.origin = offset + Vec2{-half_width + 0.5 * g.h, -half_width + 0.5 * g.h};
  g.nx = g.ny = n;
  g.values.assign(n * n, Vec2{});
  g.mask.assign(n * n, 1);
  g.norm = norm;
  return g;
}

/// Fills every unmasked cell with f(center); cells where f throws are masked.
template <class F>
void fill(FieldGrid& g, F&& f) {
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      if (!g.inside(i, j)) continue;
      try {
        g.values[g.index(i, j)] = f(g.center(i, j));
      } catch (const Error&) {
        g.mask[g.index(i, j)] = 0;
      }
    }
}

/// Vortex sampled on a square grid; the cells whose closed square contains
/// the center are masked.
inline FieldGrid vortex_grid(const VortexField& v, std::size_t n = 256, double half_width = 1.0) {
  FieldGrid g = square_grid(v.norm, n, half_width);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 c = g.center(i, j);
      if (std::fabs(c.x - v.center.x) <= 0.5 * g.h && std::fabs(c.y - v.center.y) <= 0.5 * g.h) g.mask[g.index(i, j)] = 0;
    }
  fill(g, [&](Vec2 x) { return vortex_eval(v, x); });
  return g;
}

inline FieldGrid constant_grid(const PlanarNorm& norm, Vec2 value, std::size_t n = 256, double half_width = 1.0) {
  FieldGrid g = square_grid(norm, n, half_width);
  fill(g, [&](Vec2) { return value; });
  return g;
}

/// Checks the grid invariants: |‖m‖ - 1| <= field_tol on unmasked cells and
/// at least one unmasked 3x3 block.
inline void validate_grid(const FieldGrid& g, double field_tol = 1e-6) {
  require(g.h > 0.0 && std::isfinite(g.h), "grid spacing must be positive");
  require(g.nx >= 3 && g.ny >= 3, "grid needs at least 3 cells per side");
  require(g.values.size() == g.nx * g.ny && g.mask.size() == g.nx * g.ny, "grid arrays do not match nx * ny");
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      if (!g.inside(i, j)) continue;
      const double d = std::fabs(g.norm(g.at(i, j)) - 1.0);
      require(d <= field_tol, "field value at cell (" + std::to_string(i) + ", " + std::to_string(j) +
                                  ") is not of unit norm (|norm - 1| = " + std::to_string(d) + ")");
    }
  bool block = false;
  for (std::size_t j = 1; j + 1 < g.ny && !block; ++j)
    for (std::size_t i = 1; i + 1 < g.nx && !block; ++i) {
      bool all = true;
      for (int dj = -1; dj <= 1 && all; ++dj)
        for (int di = -1; di <= 1 && all; ++di) all = g.inside(static_cast<long>(i) + di, static_cast<long>(j) + dj);
      block = all;
    }
  require(block, "mask has no unmasked 3x3 block");
}

}  // namespace normfield
