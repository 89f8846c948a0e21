#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "boundary_atlas.hpp"
#include "error.hpp"
#include "field_grid.hpp"
#include "planar_norm.hpp"

namespace normfield {

/// chi_m(., s) = 1{m(x).s > 0} per cell; ties and masked cells give 0.
inline std::vector<std::uint8_t> chi_slice(const FieldGrid& g, Vec2 s) {
  std::vector<std::uint8_t> out(g.nx * g.ny, 0);
  for (std::size_t k = 0; k < out.size(); ++k)
    if (g.mask[k] && dot(g.values[k], s) > 0.0) out[k] = 1;
  return out;
}

/// Tensor bump phi(x) = b((x - c)/w), b(z) = (1 - z1^2)^3 (1 - z2^2)^3 on |z_i| < 1.
struct TestFunction {
  Vec2 center;
  double width;
};

inline Vec2 bump_gradient(const TestFunction& f, Vec2 x) {
  const double z1 = (x.x - f.center.x) / f.width, z2 = (x.y - f.center.y) / f.width;
  if (std::fabs(z1) >= 1.0 || std::fabs(z2) >= 1.0) return {};
  const double a1 = 1.0 - z1 * z1, a2 = 1.0 - z2 * z2;
  return {-6.0 * z1 * a1 * a1 * a2 * a2 * a2 / f.width, -6.0 * z2 * a2 * a2 * a1 * a1 * a1 / f.width};
}

inline double bump_value(const TestFunction& f, Vec2 x) {
  const double z1 = (x.x - f.center.x) / f.width, z2 = (x.y - f.center.y) / f.width;
  if (std::fabs(z1) >= 1.0 || std::fabs(z2) >= 1.0) return 0.0;
  const double a1 = 1.0 - z1 * z1, a2 = 1.0 - z2 * z2;
  return a1 * a1 * a1 * a2 * a2 * a2;
}

/// Default widths: 0.1, 0.2 and 0.4 of the half extent of the grid.
inline std::vector<double> default_widths(const FieldGrid& g) {
  const double half = 0.5 * g.h * static_cast<double>(std::min(g.nx, g.ny));
  return {0.1 * half, 0.2 * half, 0.4 * half};
}

/// Cell integrals of the gradient of one test function over the cells that
/// meet its support.
struct TestStencil {
  TestFunction fn;
  std::vector<std::size_t> cells;
  std::vector<Vec2> grads;  // int_cell grad phi
  double grad_l1 = 0.0;     // sum |int_cell grad phi|
};

namespace detail {

/// int_cell grad phi as differences of phi across opposite edges, 4-point
/// Gauss along each edge. Shared edges are evaluated identically, so the
/// sum over any union of cells telescopes.
inline Vec2 cell_gradient_integral(const FieldGrid& g, const TestFunction& fn, std::size_t i, std::size_t j) {
  static constexpr double kGx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                    0.8611363115940526};
  static constexpr double kGw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                    0.3478548451374538};
  const double di = static_cast<double>(i), dj = static_cast<double>(j);
  const double xl = g.origin.x + g.h * (di - 0.5), xr = g.origin.x + g.h * (di + 0.5);
  const double yb = g.origin.y + g.h * (dj - 0.5), yt = g.origin.y + g.h * (dj + 0.5);
  const double cx = g.origin.x + g.h * di, cy = g.origin.y + g.h * dj;
  Vec2 acc{};
  for (int q = 0; q < 4; ++q) {
    const double y = cy + 0.5 * g.h * kGx[q], x = cx + 0.5 * g.h * kGx[q];
    acc.x += kGw[q] * (bump_value(fn, {xr, y}) - bump_value(fn, {xl, y}));
    acc.y += kGw[q] * (bump_value(fn, {x, yt}) - bump_value(fn, {x, yb}));
  }
  return (0.5 * g.h) * acc;
}

}  // namespace detail

/// 4x4 lattice of centers per width; functions whose support meets a masked
/// cell are dropped.
inline std::vector<TestStencil> test_family(const FieldGrid& g, const std::vector<double>& widths) {
  require(!widths.empty(), "test family needs at least one width");
  const Vec2 lo = g.lower(), hi = g.upper();
  std::vector<TestStencil> family;
  for (double w : widths) {
    require(w > 0.0, "test function width must be positive");
    if (2.0 * w > hi.x - lo.x || 2.0 * w > hi.y - lo.y) continue;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        const Vec2 c{lo.x + w + a * (hi.x - lo.x - 2 * w) / 3.0, lo.y + w + b * (hi.y - lo.y - 2 * w) / 3.0};
        TestStencil st{{c, w}, {}, {}, 0.0};
        const long i0 = std::max(0L, static_cast<long>(std::floor((c.x - w - g.origin.x) / g.h)));
        const long i1 = std::min(static_cast<long>(g.nx) - 1, static_cast<long>(std::ceil((c.x + w - g.origin.x) / g.h)));
        const long j0 = std::max(0L, static_cast<long>(std::floor((c.y - w - g.origin.y) / g.h)));
        const long j1 = std::min(static_cast<long>(g.ny) - 1, static_cast<long>(std::ceil((c.y + w - g.origin.y) / g.h)));
        bool fits = true;
        for (long j = j0; j <= j1 && fits; ++j)
          for (long i = i0; i <= i1; ++i) {
            const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
            const Vec2 x = g.center(ui, uj);
            if (std::fabs(x.x - c.x) >= w + 0.5 * g.h || std::fabs(x.y - c.y) >= w + 0.5 * g.h) continue;
            if (!g.inside(ui, uj)) {
              fits = false;
              break;
            }
            const Vec2 d = detail::cell_gradient_integral(g, st.fn, ui, uj);
            st.cells.push_back(g.index(ui, uj));
            st.grads.push_back(d);
            st.grad_l1 += length(d);
          }
        if (fits && st.grad_l1 > 0.0) family.push_back(std::move(st));
      }
  }
  require(!family.empty(), "no test function fits inside the mask");
  return family;
}

/// tau_s = n_{B^perp}(s)^perp for s on the boundary of B^perp.
inline Vec2 kinetic_tangent(const BoundaryAtlas& perp_atlas, Vec2 s) { return perp(normal_at(perp_atlas, s)); }

/// n points on the boundary of B^perp, equispaced in arclength.
inline std::vector<Vec2> kinetic_directions(const BoundaryAtlas& perp_atlas, std::size_t n = 64) {
  require(n >= 1, "need at least one direction");
  const auto& cum = perp_atlas.cum_arclength;
  std::vector<Vec2> out;
  for (std::size_t k = 0; k < n; ++k) {
    const double target = perp_atlas.perimeter() * static_cast<double>(k) / static_cast<double>(n);
    const auto it = std::upper_bound(cum.begin(), cum.end(), target);
    const std::size_t i = std::min(static_cast<std::size_t>(it - cum.begin()) - 1, perp_atlas.size() - 1);
    const double seg = cum[i + 1] - cum[i];
    const double t = seg > 0.0 ? (target - cum[i]) / seg : 0.0;
    const Vec2 p = perp_atlas.points[i] + t * (perp_atlas.points[perp_atlas.next(i)] - perp_atlas.points[i]);
    out.push_back(p / perp_atlas.body_gauge(p));
  }
  return out;
}

namespace detail {

/// Integral of grad phi over the part of cell (i, j) where the bilinear
/// interpolant of f = m.s is positive. Each quarter of the cell lies in the
/// stencil of four neighboring centers; it is cut into strips across the
/// interface (columns if it runs mostly horizontally, rows otherwise) and
/// the positive interval of each strip is integrated with 3-point Gauss.
/// Strips along a nearly straight interface would staircase it and lose
/// small tilts. Quarters whose stencil leaves the unmasked region use the
/// cell value.
template <class F>
Vec2 cut_cell_integral(const FieldGrid& g, const TestFunction& fn, long i, long j, F&& f) {
  constexpr int kStrips = 4;
  static constexpr double kGx[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static constexpr double kGw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const Vec2 c = g.center(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  const double f00 = f(i, j);
  const double du = 0.5 / kStrips;
  Vec2 acc{};
  for (int a : {-1, 1})
    for (int b : {-1, 1}) {
      const bool full = g.inside(i + a, j) && g.inside(i, j + b) && g.inside(i + a, j + b);
      const double fx = full ? f(i + a, j) : f00, fy = full ? f(i, j + b) : f00, fxy = full ? f(i + a, j + b) : f00;
      // Strips run along u; v crosses the interface.
      const bool rows = std::fabs(fx - f00 + fxy - fy) > std::fabs(fy - f00 + fxy - fx);
      const double f10 = rows ? fy : fx, f01 = rows ? fx : fy, f11 = fxy;
      for (int k = 0; k < kStrips; ++k) {
        const double u = (k + 0.5) * du;
        const double A = f00 * (1 - u) + f10 * u;
        const double B = f01 * (1 - u) + f11 * u - A;
        double v0 = 0.0, v1 = 0.5;
        if (B == 0.0) {
          if (!(A > 0.0)) continue;
        } else if (B > 0.0) {
          v0 = std::clamp(-A / B, 0.0, 0.5);
        } else {
          v1 = std::clamp(-A / B, 0.0, 0.5);
        }
        if (v1 <= v0) continue;
        const double half = 0.5 * (v1 - v0), mid = 0.5 * (v1 + v0);
        for (int q = 0; q < 3; ++q) {
          const double v = mid + half * kGx[q];
          const Vec2 x = c + g.h * (rows ? Vec2{a * v, b * u} : Vec2{a * u, b * v});
          acc += (kGw[q] * half * du * g.h * g.h) * bump_gradient(fn, x);
        }
      }
    }
  return acc;
}

/// n_B(m) per cell (zero on masked cells).
inline std::vector<Vec2> cell_normals(const FieldGrid& g) {
  std::vector<Vec2> out(g.values.size());
  for (std::size_t c = 0; c < out.size(); ++c)
    if (g.mask[c]) out[c] = g.norm.unit_normal(g.values[c] / g.norm(g.values[c]));
  return out;
}

/// |int chi tau.grad phi| / sum_cells |int_cell grad phi| per test function, with
/// nu = n_{B^perp}(s) and tau = nu^perp. For a strictly convex C1 ball,
/// m.s > 0 exactly when nu.n_B(m) > 0; the second form is what gets
/// interpolated, since n_B(m) is smooth where m is only Holder. Cells where it
/// keeps a strict sign over the 3x3 neighborhood use the cell integral;
/// cells along the interface are integrated by cut_cell_integral.
inline std::vector<double> kinetic_values(const FieldGrid& g, const std::vector<Vec2>& normals,
                                          const std::vector<TestStencil>& family, Vec2 nu) {
  const Vec2 tau = perp(nu);
  std::vector<double> fs(g.values.size(), 0.0);
  for (std::size_t c = 0; c < fs.size(); ++c) fs[c] = g.mask[c] ? dot(normals[c], nu) : 0.0;
  auto f = [&](long i, long j) { return fs[static_cast<std::size_t>(j) * g.nx + static_cast<std::size_t>(i)]; };
  std::vector<double> out;
  out.reserve(family.size());
  for (const auto& st : family) {
    Vec2 acc{};
    for (std::size_t k = 0; k < st.cells.size(); ++k) {
      const std::size_t cell = st.cells[k];
      const long i = static_cast<long>(cell % g.nx), j = static_cast<long>(cell / g.nx);
      const bool pos = fs[cell] > 0.0;
      bool uniform = fs[cell] != 0.0;
      for (long dj = -1; dj <= 1 && uniform; ++dj)
        for (long di = -1; di <= 1 && uniform; ++di)
          if (g.inside(i + di, j + dj)) {
            const double v = f(i + di, j + dj);
            uniform = pos ? v > 0.0 : v < 0.0;
          }
      if (uniform) {
        if (pos) acc += st.grads[k];
      } else {
        acc += cut_cell_integral(g, st.fn, i, j, f);
      }
    }
    out.push_back(std::fabs(dot(tau, acc)) / st.grad_l1);
  }
  return out;
}

/// Cellwise form: sum over cells of 1{m.s > 0} tau.int_cell grad phi.
inline std::vector<double> kinetic_values_cellwise(const FieldGrid& g, const std::vector<TestStencil>& family, Vec2 s,
                                                   Vec2 tau) {
  std::vector<double> out;
  out.reserve(family.size());
  for (const auto& st : family) {
    Vec2 acc{};
    for (std::size_t k = 0; k < st.cells.size(); ++k)
      if (dot(g.values[st.cells[k]], s) > 0.0) acc += st.grads[k];
    out.push_back(std::fabs(dot(tau, acc)) / st.grad_l1);
  }
  return out;
}

inline std::vector<double> curl_values(const FieldGrid& g, const std::vector<TestStencil>& family) {
  std::vector<double> out;
  out.reserve(family.size());
  for (const auto& st : family) {
    double acc = 0.0;
    for (std::size_t k = 0; k < st.cells.size(); ++k) acc += dot(perp(st.grads[k]), g.values[st.cells[k]]);
    out.push_back(std::fabs(acc) / st.grad_l1);
  }
  return out;
}

}  // namespace detail

inline double kinetic_residual(const FieldGrid& g, Vec2 s, const std::vector<double>& widths) {
  const BoundaryAtlas pa = atlas_perp(boundary_atlas(g.norm, 4096));
  const auto family = test_family(g, widths);
  const auto vals = detail::kinetic_values(g, detail::cell_normals(g), family, normal_at(pa, s));
  return *std::max_element(vals.begin(), vals.end());
}


inline double curl_test_residual(const FieldGrid& g, const std::vector<double>& widths) {
  const auto vals = detail::curl_values(g, test_family(g, widths));
  return *std::max_element(vals.begin(), vals.end());
}

/// Largest |circulation| / perimeter of the trapezoid rule on square loops
/// through cell centers with sides of `sides` cells, lower corners on a
/// lattice of half the side. Loops through masked cells are skipped; loops
/// around masked cells are kept.
inline double circulation_residual(const FieldGrid& g, const std::vector<std::size_t>& sides = {4, 16}) {
  double worst = 0.0;
  for (std::size_t k : sides) {
    if (k == 0 || k >= g.nx || k >= g.ny) continue;
    const std::size_t stride = std::max<std::size_t>(1, k / 2);
    for (std::size_t j = 0; j + k < g.ny; j += stride)
      for (std::size_t i = 0; i + k < g.nx; i += stride) {
        std::vector<std::pair<std::size_t, std::size_t>> loop;
        for (std::size_t t = 0; t < k; ++t) loop.emplace_back(i + t, j);
        for (std::size_t t = 0; t < k; ++t) loop.emplace_back(i + k, j + t);
        for (std::size_t t = 0; t < k; ++t) loop.emplace_back(i + k - t, j + k);
        for (std::size_t t = 0; t < k; ++t) loop.emplace_back(i, j + k - t);
        bool ok = true;
        for (auto [a, b] : loop) ok = ok && g.inside(a, b);
        if (!ok) continue;
        double circ = 0.0;
        for (std::size_t t = 0; t < loop.size(); ++t) {
          const auto [a0, b0] = loop[t];
          const auto [a1, b1] = loop[(t + 1) % loop.size()];
          circ += dot(0.5 * (g.at(a0, b0) + g.at(a1, b1)), g.center(a1, b1) - g.center(a0, b0));
        }
        worst = std::max(worst, std::fabs(circ) / (4.0 * static_cast<double>(k) * g.h));
      }
  }
  return worst;
}

/// Larger of the test-function form and the loop circulation form. The
/// second one sees circulation around masked cells, which test functions
/// supported in the unmasked region cannot.
inline double curl_residual(const FieldGrid& g, const std::vector<double>& widths) {
  return std::max(curl_test_residual(g, widths), circulation_residual(g));
}

struct DirectionResidual {
  std::size_t s_index = 0;
  Vec2 s{};
  double residual = 0.0;  // max over test functions
  double scaled = 0.0;    // max over test functions of residual / (1 + h/width)
};

struct KineticReport {
  std::vector<DirectionResidual> residuals;
  double max_residual = 0.0;
  double max_scaled = 0.0;
  double curl_residual = 0.0;  // max of the two forms below
  double curl_test_residual = 0.0;
  double circulation_residual = 0.0;
  std::size_t n_test_functions = 0;
  std::vector<double> mollifier_widths;
  double h = 0.0;
  double kinetic_tol = 1e-3;
  double curl_tol = 0.0;  // 1e-3 + 4h
  bool passed = false;
};

/// Kinetic residuals over n_directions points of the boundary of B^perp and
/// the curl residual, with pass/fail against 1e-3 (1 + h/width) and 1e-3 + 4h.
inline KineticReport kinetic_check(const FieldGrid& g, std::size_t n_directions = 64, std::vector<double> widths = {}) {
  validate_grid(g);
  require(g.norm.is_c1() && g.norm.is_strictly_convex(), "kinetic check requires a strictly convex C1 norm");
  if (widths.empty()) widths = default_widths(g);
  const BoundaryAtlas pa = atlas_perp(boundary_atlas(g.norm, 4096));
  const auto family = test_family(g, widths);

  KineticReport rep;
  rep.h = g.h;
  rep.mollifier_widths = widths;
  rep.n_test_functions = family.size();
  rep.curl_tol = 1e-3 + 4.0 * g.h;
  const auto dirs = kinetic_directions(pa, n_directions);
  const auto normals = detail::cell_normals(g);
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const auto vals = detail::kinetic_values(g, normals, family, normal_at(pa, dirs[k]));
    DirectionResidual d{k, dirs[k], 0.0, 0.0};
    for (std::size_t t = 0; t < vals.size(); ++t) {
      d.residual = std::max(d.residual, vals[t]);
      d.scaled = std::max(d.scaled, vals[t] / (1.0 + g.h / family[t].fn.width));
    }
    rep.max_residual = std::max(rep.max_residual, d.residual);
    rep.max_scaled = std::max(rep.max_scaled, d.scaled);
    rep.residuals.push_back(d);
  }
  const auto curls = detail::curl_values(g, family);
  rep.curl_test_residual = *std::max_element(curls.begin(), curls.end());
  rep.circulation_residual = circulation_residual(g);
  rep.curl_residual = std::max(rep.curl_test_residual, rep.circulation_residual);
  rep.passed = rep.max_scaled <= rep.kinetic_tol && rep.curl_residual <= rep.curl_tol;
  return rep;
}

struct CurlBoundReport {
  double curl_residual = 0.0;  // test-function form
  double mean_kinetic = 0.0;
  double perimeter = 0.0;
  double slack = 0.0;  // max |m - m_rec| over unmasked cells
  double bound = 0.0;  // perimeter/2 * mean_kinetic + slack
  bool holds = false;
};

/// For every test function, |int grad phi^perp . m| <= 1/2 sum_k K_k(phi) dl_k
/// + max|m - m_rec| ||grad phi||_1, where m_rec = 1/2 sum_k chi(., s_k) n_k dl_k
/// is the averaging formula on the sampled directions. Reported with the
/// per-direction maxima in place of K_k(phi). Both sides use the cellwise
/// sums so that the inequality holds exactly on the grid.
inline CurlBoundReport kinetic_implies_curl_check(const FieldGrid& g, std::size_t n_directions = 64,
                                                  std::vector<double> widths = {}) {
  validate_grid(g);
  if (widths.empty()) widths = default_widths(g);
  const BoundaryAtlas pa = atlas_perp(boundary_atlas(g.norm, 4096));
  const auto family = test_family(g, widths);
  const auto dirs = kinetic_directions(pa, n_directions);
  const double dl = pa.perimeter() / static_cast<double>(dirs.size());

  CurlBoundReport rep;
  rep.perimeter = pa.perimeter();
  std::vector<Vec2> normals;
  for (Vec2 s : dirs) {
    const Vec2 nu = normal_at(pa, s);
    normals.push_back(nu);
    const auto vals = detail::kinetic_values_cellwise(g, family, s, perp(nu));
    rep.mean_kinetic += *std::max_element(vals.begin(), vals.end()) / static_cast<double>(dirs.size());
  }
  for (std::size_t c = 0; c < g.values.size(); ++c) {
    if (!g.mask[c]) continue;
    Vec2 rec{};
    for (std::size_t k = 0; k < dirs.size(); ++k)
      if (dot(g.values[c], dirs[k]) > 0.0) rec += normals[k];
    rep.slack = std::max(rep.slack, length(g.values[c] - 0.5 * dl * rec));
  }
  const auto curls = detail::curl_values(g, family);
  rep.curl_residual = *std::max_element(curls.begin(), curls.end());
  rep.bound = 0.5 * rep.perimeter * rep.mean_kinetic + rep.slack;
  rep.holds = rep.curl_residual <= rep.bound * (1.0 + 1e-12) + 1e-15;
  return rep;
}

/// grad F(m): the outward unit normal of B at the unit vector m.
inline Vec2 characteristic_direction(const PlanarNorm& norm, Vec2 m) {
  require(norm.is_c1(), "characteristic direction requires a C1 norm");
  const double r = norm(m);
  require(r > 0.0, "characteristic direction of the zero vector");
  return norm.unit_normal(m / r);
}

struct CharacteristicProbe {
  Vec2 start{};
  Vec2 end{};
  Vec2 direction{};
  double deviation = 0.0;  // sup_t ||m(start + t d) - m(start)||
};

struct CharacteristicsReport {
  std::vector<CharacteristicProbe> probes;
  double max_deviation = 0.0;
  double step = 0.0;
};

/// Walks from the center of a cell along its characteristic in steps of h/2
/// until the bilinear stencil leaves the unmasked region.
inline CharacteristicProbe walk_characteristic(const FieldGrid& g, std::size_t i, std::size_t j) {
  require(g.inside(i, j), "characteristic probe at a masked cell");
  CharacteristicProbe p;
  p.start = g.center(i, j);
  const Vec2 m0 = g.at(i, j);
  p.direction = characteristic_direction(g.norm, m0);
  p.end = p.start;
  const double step = 0.5 * g.h;
  for (std::size_t k = 1;; ++k) {
    const Vec2 x = p.start + (step * static_cast<double>(k)) * p.direction;
    const auto m = g.bilinear(x);
    if (!m) break;
    p.deviation = std::max(p.deviation, g.norm(*m - m0));
    p.end = x;
  }
  return p;
}

inline CharacteristicsReport characteristics_check(const FieldGrid& g, std::size_t n_probes = 64,
                                                   std::uint64_t seed = 0) {
  validate_grid(g);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> ci(0, g.nx - 1), cj(0, g.ny - 1);
  CharacteristicsReport rep;
  rep.step = 0.5 * g.h;
  while (rep.probes.size() < n_probes) {
    const std::size_t i = ci(rng), j = cj(rng);
    if (!g.inside(i, j)) continue;
    rep.probes.push_back(walk_characteristic(g, i, j));
    rep.max_deviation = std::max(rep.max_deviation, rep.probes.back().deviation);
  }
  return rep;
}

}  // namespace normfield
