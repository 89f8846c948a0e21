#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "boundary_atlas.hpp"
#include "convexity_modulus.hpp"
#include "error.hpp"
#include "field_grid.hpp"
#include "kinetic.hpp"
#include "planar_norm.hpp"
#include "vortex_field.hpp"

namespace normfield {

struct TraceResult {
  Vec2 a{};
  Vec2 b{};
  std::vector<double> x2;         // segment parameter of each sample, in [0, 1]
  std::vector<Vec2> values;       // trace at the smallest r
  std::vector<double> norm_defect;  // |‖value‖ - 1|
  std::vector<double> radii;      // r_list, sorted decreasing
  double r = 0.0;                 // smallest radius
  double convergence_gap = 0.0;   // mean ‖m_r - m_{r'}‖ over the two smallest radii
  double trace_tol = 0.05;
};

namespace detail {

/// Fiber averages over P_r; samples whose whole fiber is masked are NaN.
inline std::vector<Vec2> fiber_averages(const FieldGrid& g, Vec2 a, Vec2 b, double r, const std::vector<double>& x2) {
  const Vec2 v = normalized(b - a), w = perp(v);
  const Vec2 lo = g.origin, hi = g.center(g.nx - 1, g.ny - 1);
  for (Vec2 corner : {a + r * w, a - r * w, b + r * w, b - r * w})
    require(corner.x >= lo.x && corner.y >= lo.y && corner.x <= hi.x && corner.y <= hi.y,
            "trace rectangle P_r leaves the grid (r = " + std::to_string(r) + ")");
  const std::size_t nt = 2 * static_cast<std::size_t>(std::ceil(2.0 * r / g.h));
  std::vector<Vec2> out;
  for (double t : x2) {
    const Vec2 base = a + t * (b - a);
    Vec2 acc{};
    std::size_t used = 0;
    for (std::size_t k = 0; k < nt; ++k) {
      const double off = -r + (2.0 * r) * (static_cast<double>(k) + 0.5) / static_cast<double>(nt);
      if (const auto m = g.bilinear(base + off * w)) {
        acc += *m;
        ++used;
      }
    }
    out.push_back(used ? acc / static_cast<double>(used) : Vec2{NAN, NAN});
  }
  return out;
}

}  // namespace detail

/// Transverse averages of m over fibers of half-width r along [a, b], one
/// sample per grid spacing. Masked points of a fiber are skipped.
inline TraceResult trace_along_segment(const FieldGrid& g, Vec2 a, Vec2 b, std::vector<double> r_list) {
  require(!r_list.empty(), "trace needs at least one radius");
  require(length(b - a) > 0.0, "trace segment must have positive length");
  for (double r : r_list) require(r > 0.0, "trace radius must be positive");
  std::sort(r_list.begin(), r_list.end(), std::greater<>());
  const std::size_t n = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(length(b - a) / g.h))) + 1;
  std::vector<double> x2;
  for (std::size_t k = 0; k < n; ++k) x2.push_back(static_cast<double>(k) / static_cast<double>(n - 1));

  TraceResult res;
  res.a = a;
  res.b = b;
  res.radii = r_list;
  res.r = r_list.back();
  for (double r : r_list) (void)detail::fiber_averages(g, a, b, r, {0.0});  // extent check on every radius
  const auto fine = detail::fiber_averages(g, a, b, res.r, x2);
  std::vector<Vec2> coarse;
  if (r_list.size() >= 2) coarse = detail::fiber_averages(g, a, b, r_list[r_list.size() - 2], x2);
  double gap = 0.0;
  std::size_t gap_n = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (std::isnan(fine[k].x)) continue;
    res.x2.push_back(x2[k]);
    res.values.push_back(fine[k]);
    res.norm_defect.push_back(std::fabs(g.norm(fine[k]) - 1.0));
    if (!coarse.empty() && !std::isnan(coarse[k].x)) {
      gap += g.norm(fine[k] - coarse[k]);
      ++gap_n;
    }
  }
  res.convergence_gap = gap_n ? gap / static_cast<double>(gap_n) : 0.0;
  return res;
}

struct SignPropagationReport {
  std::size_t n_pairs = 0;
  std::size_t n_checked = 0;  // (pair, s) tests with m(y).s > tol
  std::size_t violations = 0;
  double worst = 0.0;  // most negative m(z).s among violations, as a positive number
  double lipschitz = 0.0;
  double tol = 0.0;
  bool passed = false;
};

/// Median of ‖m(neighbor) - m(cell)‖ / h over unmasked horizontal and
/// vertical neighbor pairs.
inline double lipschitz_estimate(const FieldGrid& g) {
  std::vector<double> q;
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      if (!g.inside(i, j)) continue;
      if (i + 1 < g.nx && g.inside(i + 1, j)) q.push_back(g.norm(g.at(i + 1, j) - g.at(i, j)) / g.h);
      if (j + 1 < g.ny && g.inside(i, j + 1)) q.push_back(g.norm(g.at(i, j + 1) - g.at(i, j)) / g.h);
    }
  if (q.empty()) return 0.0;
  auto mid = q.begin() + static_cast<std::ptrdiff_t>(q.size() / 2);
  std::nth_element(q.begin(), mid, q.end());
  return *mid;
}

/// For random pairs of unmasked cells (y, z) and both s on the boundary of
/// B^perp with n_{B^perp}(s) orthogonal to z - y: m(y).s > tol must give
/// m(z).s >= -tol, tol = 3h Lip.
inline SignPropagationReport sign_propagation_check(const FieldGrid& g, std::size_t n_pairs = 1000,
                                                    std::uint64_t seed = 0) {
  validate_grid(g);
  require(g.norm.is_c1() && g.norm.is_strictly_convex(), "sign propagation requires a strictly convex C1 norm");
  const BoundaryAtlas pa = atlas_perp(boundary_atlas(g.norm, 4096));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> ci(0, g.nx - 1), cj(0, g.ny - 1);
  auto random_cell = [&] {
    for (;;) {
      const std::size_t i = ci(rng), j = cj(rng);
      if (g.inside(i, j)) return std::make_pair(i, j);
    }
  };
  SignPropagationReport rep;
  rep.n_pairs = n_pairs;
  rep.lipschitz = lipschitz_estimate(g);
  rep.tol = 3.0 * g.h * rep.lipschitz;
  for (std::size_t k = 0; k < n_pairs; ++k) {
    const auto [iy, jy] = random_cell();
    const auto [iz, jz] = random_cell();
    if (iy == iz && jy == jz) continue;
    const Vec2 d = g.center(iz, jz) - g.center(iy, jy);
    const Vec2 s0 = inverse_normal(pa, perp(d));
    for (Vec2 s : {s0, -s0}) {
      if (!(dot(g.at(iy, jy), s) > rep.tol)) continue;
      ++rep.n_checked;
      const double mz = dot(g.at(iz, jz), s);
      if (mz < -rep.tol) {
        ++rep.violations;
        rep.worst = std::max(rep.worst, -mz);
      }
    }
  }
  rep.passed = rep.violations == 0;
  return rep;
}

enum class Classification { vortex, regular, inconclusive };

inline const char* to_string(Classification c) {
  switch (c) {
    case Classification::vortex: return "vortex";
    case Classification::regular: return "regular";
    default: return "inconclusive";
  }
}

struct SingularityReport {
  Vec2 center_estimate{NAN, NAN};
  double line_fit_residual = NAN;  // RMS distance of the lines to the center estimate
  int sign = 0;
  Classification classification = Classification::inconclusive;
  double l1_deviation_from_vortex = NAN;
  double condition_number = NAN;
  std::size_t n_lines = 0;
  double class_tol = 0.05;
  double exclusion_radius = 0.0;  // 4h
  double condition_limit = 1e8;
  std::string reason;
};

struct GridHolderOptions {
  Vec2 center{};
  double r_in = 0.0;
  double r_out = 0.0;
  double d_min = 0.0;
  double d_max = 0.0;
  std::size_t n_pairs = 4096;
  std::uint64_t seed = 0;
};

/// holder_estimate applied to the bilinear interpolant of the grid.
inline HolderEstimate grid_holder(const FieldGrid& g, const GridHolderOptions& o) {
  HolderOptions opt;
  opt.center = o.center;
  opt.r_in = o.r_in;
  opt.r_out = o.r_out;
  opt.d_min = o.d_min;
  opt.d_max = o.d_max;
  opt.n_pairs = o.n_pairs;
  opt.seed = o.seed;
  return holder_estimate(
      [&](Vec2 x) {
        const auto m = g.bilinear(x);
        if (!m) throw Error("outside the unmasked grid");
        return *m;
      },
      g.norm, opt);
}

/// Whole-window options used on the regular branch: a disk around the
/// middle of the grid minus a 4h hole, separations from 4h to extent/8.
inline GridHolderOptions whole_grid_holder_options(const FieldGrid& g, std::uint64_t seed = 0) {
  const Vec2 lo = g.lower(), hi = g.upper();
  const double extent = std::min(hi.x - lo.x, hi.y - lo.y);
  GridHolderOptions o;
  o.center = 0.5 * (lo + hi);
  o.r_in = 4.0 * g.h;
  o.r_out = 0.5 * extent - 2.0 * g.h;
  o.d_min = 4.0 * g.h;
  o.d_max = extent / 8.0;
  o.seed = seed;
  return o;
}

/// Least-squares intersection of the characteristic lines through n_lines
/// random unmasked cells, then comparison with alpha V_B(x - p).
inline SingularityReport detect_singularity(const FieldGrid& g, std::size_t n_lines = 128, std::uint64_t seed = 0,
                                            double class_tol = 0.05) {
  require(n_lines >= 8, "detect_singularity needs at least 8 lines");
  validate_grid(g);
  require(g.norm.is_c1() && g.norm.is_strictly_convex(), "singularity detection requires a strictly convex C1 norm");
  SingularityReport rep;
  rep.n_lines = n_lines;
  rep.class_tol = class_tol;
  rep.exclusion_radius = 4.0 * g.h;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> ci(0, g.nx - 1), cj(0, g.ny - 1);
  std::vector<Vec2> xs, ds;
  while (xs.size() < n_lines) {
    const std::size_t i = ci(rng), j = cj(rng);
    if (!g.inside(i, j)) continue;
    xs.push_back(g.center(i, j));
    ds.push_back(characteristic_direction(g.norm, g.at(i, j)));
  }
  // sum (I - d d^T) p = sum (I - d d^T) x
  double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
  for (std::size_t k = 0; k < n_lines; ++k) {
    const Vec2 d = ds[k], x = xs[k];
    const double p11 = 1 - d.x * d.x, p12 = -d.x * d.y, p22 = 1 - d.y * d.y;
    a11 += p11;
    a12 += p12;
    a22 += p22;
    b1 += p11 * x.x + p12 * x.y;
    b2 += p12 * x.x + p22 * x.y;
  }
  const double tr = a11 + a22, det = a11 * a22 - a12 * a12;
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  const double lmax = 0.5 * tr + disc, lmin = 0.5 * tr - disc;
  rep.condition_number = lmin > 0.0 ? lmax / lmin : INFINITY;
  if (!(rep.condition_number <= rep.condition_limit)) {
    rep.classification = Classification::regular;
    rep.reason = "characteristic lines are parallel";
    return rep;
  }
  const Vec2 p{(a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det};
  rep.center_estimate = p;
  double ss = 0.0;
  for (std::size_t k = 0; k < n_lines; ++k) {
    const double dist = cross(ds[k], xs[k] - p);
    ss += dist * dist;
  }
  rep.line_fit_residual = std::sqrt(ss / static_cast<double>(n_lines));

  const Vec2 lo = g.lower(), hi = g.upper();
  const double outside = std::max({lo.x - p.x, p.x - hi.x, lo.y - p.y, p.y - hi.y});
  if (outside > rep.exclusion_radius) {
    rep.classification = Classification::regular;
    rep.reason = "center estimate lies outside the window";
    return rep;
  }
  if (outside > -rep.exclusion_radius) {
    rep.classification = Classification::inconclusive;
    rep.reason = "center estimate lies within 4h of the window boundary";
    return rep;
  }

  int votes = 0;
  for (std::size_t k = 0; k < n_lines; ++k) {
    if (xs[k] == p) continue;
    const auto cell = g.cell_of(xs[k]);
    votes += dot(g.at(cell->first, cell->second), vortex_direction(g.norm, xs[k] - p)) > 0.0 ? 1 : -1;
  }
  rep.sign = votes >= 0 ? 1 : -1;

  double dev = 0.0;
  std::size_t used = 0;
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      if (!g.inside(i, j)) continue;
      const Vec2 x = g.center(i, j);
      if (length(x - p) < rep.exclusion_radius) continue;
      dev += g.norm(g.at(i, j) - static_cast<double>(rep.sign) * vortex_direction(g.norm, x - p));
      ++used;
    }
  rep.l1_deviation_from_vortex = used ? dev / static_cast<double>(used) : INFINITY;

  if (rep.line_fit_residual <= class_tol && rep.l1_deviation_from_vortex <= class_tol) {
    rep.classification = Classification::vortex;
    rep.reason = "lines meet at one point and the field matches the vortex";
    return rep;
  }
  try {
    const auto est = grid_holder(g, whole_grid_holder_options(g, seed));
    if (std::isfinite(est.exponent) && est.exponent > 0.0) {
      rep.classification = Classification::regular;
      rep.reason = "no common intersection; field is Holder continuous on the window";
      return rep;
    }
  } catch (const Error&) {
  }
  rep.classification = Classification::inconclusive;
  rep.reason = "no common intersection and no Holder estimate";
  return rep;
}

struct ClassificationReport {
  SingularityReport detection;
  PowerTypeFit power_type;
  HolderEstimate holder;
  GridHolderOptions holder_window;
  double predicted_exponent = 0.0;  // 1/(p_hat - 1)
  double exponent_tol = 0.05;
  bool consistent = false;
  std::string verdict;
};

struct ClassifyOptions {
  std::size_t n_lines = 128;
  std::uint64_t seed = 0;
  double class_tol = 0.05;
  double exponent_tol = 0.05;
  std::size_t n_pairs = 4096;
};

/// Detection, then the Holder exponent around the center (annulus from a
/// quarter to half the window) or over the window, compared with the
/// exponent 1/(p - 1) predicted from the power type of the norm.
inline ClassificationReport classify_field(const FieldGrid& g, const ClassifyOptions& opt = {}) {
  ClassificationReport rep;
  rep.exponent_tol = opt.exponent_tol;
  rep.detection = detect_singularity(g, opt.n_lines, opt.seed, opt.class_tol);
  rep.power_type = fit_power_type(omega_curve(g.norm, log_deltas(1e-3, 1e-1, 16)));
  rep.predicted_exponent = 1.0 / (rep.power_type.p_hat - 1.0);

  const Vec2 lo = g.lower(), hi = g.upper();
  const double extent = std::min(hi.x - lo.x, hi.y - lo.y);
  if (rep.detection.classification == Classification::vortex) {
    GridHolderOptions o;
    o.center = rep.detection.center_estimate;
    o.r_in = extent / 4.0;
    o.r_out = extent / 2.0;
    o.d_min = 4.0 * g.h;
    o.d_max = o.r_in / 2.0;
    o.n_pairs = opt.n_pairs;
    o.seed = opt.seed;
    rep.holder_window = o;
  } else {
    rep.holder_window = whole_grid_holder_options(g, opt.seed);
    rep.holder_window.n_pairs = opt.n_pairs;
  }
  rep.holder = grid_holder(g, rep.holder_window);
  switch (rep.detection.classification) {
    case Classification::vortex:
      rep.consistent = rep.holder.exponent >= rep.predicted_exponent - opt.exponent_tol;
      rep.verdict = rep.consistent ? "vortex with Holder exponent at least the predicted one"
                                   : "vortex with Holder exponent below the predicted one";
      break;
    case Classification::regular:
      rep.consistent = rep.holder.exponent >= rep.predicted_exponent - opt.exponent_tol;
      rep.verdict = rep.consistent ? "regular field, Holder continuous" : "regular field below the predicted exponent";
      break;
    default:
      rep.consistent = false;
      rep.verdict = "inconclusive";
  }
  return rep;
}

}  // namespace normfield
