#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "boundary_atlas.hpp"
#include "error.hpp"
#include "numerics.hpp"
#include "planar_norm.hpp"

namespace normfield {

/// x -> alpha V_B(x - p).
struct VortexField {
  PlanarNorm norm;
  Vec2 center{};
  int sign = 1;
};

/// V_B(x) = n_B^{-1}(x/|x|). For norms that are not strictly convex and C1
/// the field is only defined almost everywhere; it is then taken as the
/// unique maximizer of x.y over B and the singular set raises.
inline Vec2 vortex_direction(const PlanarNorm& norm, Vec2 x) {
  require(!(x.x == 0.0 && x.y == 0.0), "vortex is singular at its center");
  if (norm.is_c1() && norm.is_strictly_convex()) return inverse_normal(norm, x);
  const auto ys = norm.dual_normal_functionals(x);
  require(ys.size() == 1, "vortex is undefined on its singular set for this norm");
  return ys.front();
}

inline Vec2 vortex_eval(const VortexField& v, Vec2 x) {
  require(v.sign == 1 || v.sign == -1, "vortex sign must be +1 or -1");
  require(!(x == v.center), "vortex_eval: x coincides with the vortex center");
  return static_cast<double>(v.sign) * vortex_direction(v.norm, x - v.center);
}

/// Centered finite differences of the dual norm with step h|x|.
inline Vec2 dual_gradient(const PlanarNorm& norm, Vec2 x, double h = 1e-5) {
  require(!(x.x == 0.0 && x.y == 0.0), "dual_gradient: x must be nonzero");
  const double s = h * length(x);
  const Vec2 ex{s, 0}, ey{0, s};
  return {(norm.dual(x + ex) - norm.dual(x - ex)) / (2 * s), (norm.dual(x + ey) - norm.dual(x - ey)) / (2 * s)};
}

struct HolderOptions {
  Vec2 center{};
  double r_in = 0.5;
  double r_out = 1.0;
  std::size_t n_pairs = 4096;
  std::uint64_t seed = 0;
  double d_min = 1e-4;
  double d_max = 0.0;  // 0 selects r_in
  std::size_t n_scales = 24;
};

struct HolderEstimate {
  double exponent = 0.0;
  double constant = 0.0;
  double r_in = 0.0;
  double r_out = 0.0;
  double r_squared = 0.0;
  std::uint64_t seed = 0;
  bool saturated = false;  // exponent > 1: Lipschitz or better
  std::size_t n_usable = 0;
  std::vector<double> scales;      // dual-norm separations, decreasing
  std::vector<double> increments;  // worst increment found at each scale
};

namespace detail {

struct PairProbe {
  Vec2 mid;
  double beta;
  double value;
};

}  // namespace detail

/// Worst-case modulus of continuity of f on an annulus, then a log-log fit
/// on the small-separation half of the scales. At each dual-norm separation
/// d the largest increment ||f(u) - f(v)|| is searched over pairs
/// u,v = c +- (d/2) e/||e||_* with fresh random (c, e), samples around the
/// worst pairs of the previous scale, and a final pattern search.
/// Evaluations that throw are skipped.
template <class F>
HolderEstimate holder_estimate(F&& f, const PlanarNorm& norm, const HolderOptions& opt = {}) {
  require(opt.r_in > 0.0 && opt.r_out > opt.r_in, "holder_estimate: need 0 < r_in < r_out");
  const double d_max = opt.d_max > 0.0 ? opt.d_max : opt.r_in;
  require(opt.d_min > 0.0 && d_max > opt.d_min, "holder_estimate: need 0 < d_min < d_max");
  require(opt.n_scales >= 4, "holder_estimate: need at least 4 scales");

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const PlanarNorm dual = norm.dual_norm();
  std::size_t usable = 0;

  auto inside = [&](Vec2 x) {
    const double r = length(x - opt.center);
    return r >= opt.r_in && r <= opt.r_out;
  };
  auto increment = [&](Vec2 mid, double beta, double d) -> double {
    const Vec2 e = unit_from_angle(beta);
    const Vec2 half = (0.5 * d / dual(e)) * e;
    const Vec2 u = mid + half, v = mid - half;
    if (!inside(u) || !inside(v)) return -1.0;
    Vec2 fu, fv;
    try {
      fu = f(u);
      fv = f(v);
    } catch (const Error&) {
      return -1.0;
    }
    if (!std::isfinite(fu.x) || !std::isfinite(fu.y) || !std::isfinite(fv.x) || !std::isfinite(fv.y)) return -1.0;
    ++usable;
    return norm(fu - fv);
  };
  auto random_mid = [&] {
    const double r2 = opt.r_in * opt.r_in + unif(rng) * (opt.r_out * opt.r_out - opt.r_in * opt.r_in);
    return opt.center + std::sqrt(r2) * unit_from_angle(kTwoPi * unif(rng));
  };

  HolderEstimate est;
  est.r_in = opt.r_in;
  est.r_out = opt.r_out;
  est.seed = opt.seed;
  const std::size_t fresh = std::max<std::size_t>(opt.n_pairs / opt.n_scales, 16);
  constexpr std::size_t kKeep = 8;
  std::vector<detail::PairProbe> elite;

  for (std::size_t k = 0; k < opt.n_scales; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(opt.n_scales - 1);
    const double d = d_max * std::pow(opt.d_min / d_max, t);
    std::vector<detail::PairProbe> probes;
    for (std::size_t i = 0; i < fresh; ++i) {
      const Vec2 c = random_mid();
      const double b = kPi * unif(rng);
      probes.push_back({c, b, increment(c, b, d)});
    }
    for (const auto& e : elite) {
      for (std::size_t i = 0; i < fresh / kKeep; ++i) {
        const Vec2 c = e.mid + 2.0 * d * Vec2{gauss(rng), gauss(rng)};
        const double b = e.beta + 0.3 * gauss(rng);
        probes.push_back({c, b, increment(c, b, d)});
      }
    }
    std::sort(probes.begin(), probes.end(), [](const auto& a, const auto& b) { return a.value > b.value; });
    detail::PairProbe best = probes.front();
    if (best.value > 0.0) {
      // Compass search over (cx, cy, beta).
      double step = 0.5 * d, bstep = 0.25;
      for (int it = 0; it < 60 && step > 1e-3 * d; ++it) {
        bool improved = false;
        const std::array<detail::PairProbe, 6> moves{{{best.mid + Vec2{step, 0}, best.beta, 0},
                                                      {best.mid - Vec2{step, 0}, best.beta, 0},
                                                      {best.mid + Vec2{0, step}, best.beta, 0},
                                                      {best.mid - Vec2{0, step}, best.beta, 0},
                                                      {best.mid, best.beta + bstep, 0},
                                                      {best.mid, best.beta - bstep, 0}}};
        for (auto m : moves) {
          m.value = increment(m.mid, m.beta, d);
          if (m.value > best.value) {
            best = m;
            improved = true;
          }
        }
        if (!improved) {
          step *= 0.5;
          bstep *= 0.5;
        }
      }
      probes.front() = best;
    }
    elite.assign(probes.begin(), probes.begin() + static_cast<std::ptrdiff_t>(std::min(kKeep, probes.size())));
    elite.erase(std::remove_if(elite.begin(), elite.end(), [](const auto& p) { return p.value < 0.0; }), elite.end());
    est.scales.push_back(d);
    est.increments.push_back(best.value > 1e-12 ? best.value : 0.0);  // roundoff counts as no change
  }

  est.n_usable = usable;
  require(usable >= 32, "holder_estimate: fewer than 32 usable pairs");

  const double split = std::sqrt(opt.d_min * d_max);
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < est.scales.size(); ++k) {
    if (est.scales[k] <= split * (1 + 1e-12) && est.increments[k] > 0.0) {
      lx.push_back(std::log(est.scales[k]));
      ly.push_back(std::log(est.increments[k]));
    }
  }
  if (lx.size() < 2) {
    est.exponent = 1.5;
    est.saturated = true;
    est.r_squared = 1.0;
    return est;
  }
  const auto fit = numerics::least_squares(lx, ly);
  est.exponent = std::min(fit.slope, 1.5);
  est.constant = std::exp(fit.intercept);
  est.r_squared = fit.r_squared;
  est.saturated = fit.slope > 1.0;
  return est;
}

}  // namespace normfield
