// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "normfield/averaging.hpp"
#include "normfield/convexity_modulus.hpp"
#include "normfield/field_analysis.hpp"
#include "normfield/kinetic.hpp"

using namespace normfield;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void check(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string name(const NormSpec& s) {
  std::ostringstream o;
  if (s.kind == NormKind::lp)
    o << "l" << s.p;
  else
    o << to_string(s.kind);
  return o.str();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::vector<double> sandwich_grid() {
  std::vector<double> d;
  for (int k = 1; k <= 19; ++k) d.push_back(0.1 * k);
  return d;
}

const std::vector<NormSpec> kFourNorms{NormSpec::euclidean(), NormSpec::lp(3), NormSpec::lp(4), square_polygon()};
const std::vector<NormSpec> kFiveNorms{NormSpec::euclidean(), NormSpec::lp(1.5), NormSpec::lp(3), NormSpec::lp(4),
                                       square_polygon()};
const std::vector<NormSpec> kVortexNorms{NormSpec::euclidean(), NormSpec::lp(3), NormSpec::lp(4)};

void averaging_reconstruction(Outcome& o) {
  for (const auto& spec : kFourNorms) {
    const PlanarNorm n(spec);
    const auto rep = verify_reconstruction(quadrature_rule(n, 20000), 64, 1);
    const auto conv = reconstruction_convergence(n, 20000, 64, 1);
    o.detail << " " << name(spec) << " err=" << sci(rep.max_error) << " ratio=" << conv.ratio;
    o.check(rep.max_error <= 1e-4, name(spec) + " error above 1e-4");
    o.check(conv.error_2n <= 0.6 * conv.error_n || conv.error_2n <= 1e-12, name(spec) + " no halving");
  }
}

void arc_measure_identity(Outcome& o) {
  double worst = 0.0;
  for (const auto& spec : kFourNorms) {
    const auto rule = quadrature_rule(PlanarNorm(spec), 20000);
    const auto stj = stieltjes_check(rule, 64, 2);
    const auto anti = antisymmetry_check(rule, 64, 3);
    worst = std::max({worst, stj.max_defect, anti.max_defect});
    o.check(stj.passed, name(spec) + " arc measure");
    o.check(anti.passed, name(spec) + " antisymmetry");
  }
  const auto shifted = quadrature_rule(atlas_perp(shifted_body_atlas(PlanarNorm(), {0.2, 0.0}, 4096)));
  const double neg = verify_reconstruction(shifted, 64, 4).max_error;
  o.detail << " max defect=" << sci(worst) << " non-symmetric residual=" << neg;
  o.check(neg > 0.1, "non-symmetric body residual not above 0.1");
}

void sandwich(Outcome& o) {
  double worst = INFINITY;
  for (const auto& spec : kFiveNorms) {
    const auto rep = sandwich_check(PlanarNorm(spec), sandwich_grid(), 4096, 1e-3);
    for (const auto& r : rep.rows) worst = std::min({worst, r.lower_margin, r.upper_margin});
    o.check(rep.passed, name(spec));
  }
  o.detail << " min margin=" << sci(worst) << " (slack 1e-3)";
}

void nordlander(Outcome& o) {
  double worst = INFINITY;
  for (const auto& spec : kFiveNorms) {
    const auto rep = nordlander_check(PlanarNorm(spec), sandwich_grid(), 4096, 1e-6);
    for (const auto& r : rep.rows) worst = std::min(worst, r.margin);
    o.check(rep.passed, name(spec));
  }
  o.detail << " min margin=" << sci(worst) << " (slack 1e-6)";
}

void power_type(Outcome& o) {
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    const auto fit = fit_power_type(omega_curve(PlanarNorm(NormSpec::lp(p)), log_deltas(1e-3, 1e-1, 16)));
    o.detail << " l" << p << ":" << fit.p_hat;
    o.check(std::fabs(fit.p_hat - std::max(p, 2.0)) <= 0.15, "l" + std::to_string(p));
  }
  std::string msg;
  try {
    fit_power_type(omega_curve(PlanarNorm(rounded_square()), log_deltas(1e-3, 1e-1, 16)));
  } catch (const DegenerateModulus& e) {
    msg = e.what();
  }
  o.detail << " rounded-square: \"" << msg << "\"";
  o.check(msg == "degenerate modulus", "rounded square");
}

void vortex_equivalence(Outcome& o) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  for (const auto& spec : kVortexNorms) {
    const PlanarNorm n(spec);
    const VortexField v{n, {0, 0}, 1};
    double worst = 0.0;
    for (int k = 0; k < 500; ++k) {
      const double r = std::sqrt(0.25 + u(rng) * 0.75);
      const Vec2 x = r * unit_from_angle(kTwoPi * u(rng));
      worst = std::max(worst, length(dual_gradient(n, x) - vortex_eval(v, x)));
    }
    o.detail << " " << name(spec) << "=" << sci(worst);
    o.check(worst <= 1e-4, name(spec));
  }
}

void kinetic_equation(Outcome& o) {
  for (const auto& spec : kVortexNorms)
    for (Vec2 c : {Vec2{0, 0}, Vec2{0.3, -0.2}}) {
      const auto g = vortex_grid({PlanarNorm(spec), c, 1}, 256);
      const auto rep = kinetic_check(g, 64);
      o.detail << " " << name(spec) << (c.x == 0.0 ? "" : "@shifted") << ":" << sci(rep.max_scaled) << "/"
               << sci(rep.curl_residual);
      o.check(rep.max_scaled <= 1e-3, name(spec) + " kinetic");
      o.check(rep.curl_residual <= 1e-3 + 4 * g.h, name(spec) + " curl");
    }
  const auto jump = kinetic_check(fixtures::jump_grid(PlanarNorm()), 64);
  o.detail << " jump:" << jump.max_residual << "/" << jump.curl_residual;
  o.check(jump.max_residual > 0.1 && jump.curl_residual > 0.1, "jump field not rejected");
}

void regularity(Outcome& o) {
  const std::vector<std::pair<NormSpec, double>> cases{
      {NormSpec::lp(4), 1.0 / 3.0}, {NormSpec::lp(3), 0.5}, {NormSpec::euclidean(), 1.0}};
  for (const auto& [spec, expected] : cases) {
    const PlanarNorm n(spec);
    const VortexField v{n, {0, 0}, 1};
    HolderOptions opt;
    opt.r_in = 0.5;
    opt.r_out = 1.0;
    opt.seed = 8;
    const auto est = holder_estimate([&](Vec2 x) { return vortex_eval(v, x); }, n, opt);
    o.detail << " " << name(spec) << "=" << est.exponent;
    o.check(std::fabs(est.exponent - expected) <= 0.05, name(spec));
  }
}

void trace_invariance(Outcome& o) {
  for (const auto& spec : kVortexNorms) {
    const PlanarNorm n(spec);
    const auto g = vortex_grid({n, {0, 0}, 1}, 256);
    const double r_min = 4 * g.h;
    double worst = 0.0;
    for (double th : {0.0, 0.3, 0.8, 2.0}) {
      const Vec2 q = n.boundary_point(th);
      const Vec2 d = n.unit_normal(q);
      const auto coarse = trace_along_segment(g, -0.6 * d, 0.6 * d, {4 * g.h, 2 * g.h});
      const auto fine = trace_along_segment(g, -0.6 * d, 0.6 * d, {2 * g.h, g.h});
      double l1 = 0.0;
      std::size_t used = 0;
      for (std::size_t k = 0; k < fine.x2.size(); ++k) {
        const Vec2 x = fine.a + fine.x2[k] * (fine.b - fine.a);
        if (length(x) < r_min) continue;
        l1 += std::min(n(fine.values[k] - q), n(fine.values[k] + q));
        ++used;
      }
      l1 /= static_cast<double>(used);
      worst = std::max(worst, l1);
      o.check(l1 <= 3 * g.h / r_min, name(spec) + " L1 deviation");
      o.check(fine.convergence_gap < coarse.convergence_gap, name(spec) + " convergence gap");
    }
    o.detail << " " << name(spec) << " L1=" << sci(worst);
  }
  o.detail << " (bound 3h/r_min = 0.75, r_min = 4h)";
}

void singularity_detection(Outcome& o) {
  for (const auto& spec : {NormSpec::euclidean(), NormSpec::lp(4)})
    for (int sign : {1, -1}) {
      const auto g = vortex_grid({PlanarNorm(spec), {0.3, -0.2}, sign}, 256);
      const auto rep = detect_singularity(g, 128, 10);
      const double err = length(rep.center_estimate - Vec2{0.3, -0.2});
      o.detail << " " << name(spec) << (sign > 0 ? "+" : "-") << ":" << sci(err);
      o.check(err <= 2 * g.h, name(spec) + " center");
      o.check(rep.sign == sign, name(spec) + " sign");
      o.check(rep.classification == Classification::vortex, name(spec) + " classification");
    }
  const auto c = detect_singularity(constant_grid(PlanarNorm(NormSpec::lp(4)), {1, 0}, 256), 128, 10);
  o.detail << " constant:" << to_string(c.classification);
  o.check(c.classification == Classification::regular, "constant field");
}

void normal_map(Outcome& o) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(0, kTwoPi);
  double worst = 0.0;
  for (const auto& spec : {NormSpec::euclidean(), NormSpec::lp(1.5), NormSpec::lp(3), NormSpec::lp(4)}) {
    const PlanarNorm n(spec);
    const auto at = boundary_atlas(n, 4096);
    int tested = 0, agree = 0;
    while (tested < 200) {
      const Vec2 u = n.boundary_point(ang(rng)), v = n.boundary_point(ang(rng)), w = n.boundary_point(ang(rng));
      if (std::fabs(cross(u, v)) < 1e-3) continue;
      const Cone c(u, v), cn(normal_at(at, u), normal_at(at, v));
      agree += cone_contains(c, w) == cone_contains(cn, normal_at(at, w));
      ++tested;
    }
    o.check(agree == tested, name(spec) + " cone equivalence");
    for (int k = 0; k < 200; ++k) {
      const Vec2 w = unit_from_angle(ang(rng));
      worst = std::max(worst, length(n.unit_normal(inverse_normal(n, w)) - w));
    }
  }
  o.detail << " inverse round trip=" << sci(worst);
  o.check(worst <= 1e-6, "inverse round trip");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"averaging reconstruction", averaging_reconstruction},
      {"arc-measure identity", arc_measure_identity},
      {"sandwich equivalence", sandwich},
      {"euclidean upper bound", nordlander},
      {"power-type recovery", power_type},
      {"vortex definition equivalence", vortex_equivalence},
      {"vortex solves the kinetic equation", kinetic_equation},
      {"vortex regularity", regularity},
      {"trace and line invariance", trace_invariance},
      {"singularity detection", singularity_detection},
      {"normal-map monotonicity and inverse", normal_map},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[k].second(o);
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.ok;
    std::printf("%s %2zu %s (%.1fs):%s\n", o.ok ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), secs,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
