#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "normfield/averaging.hpp"
#include "normfield/vortex_field.hpp"

using namespace normfield;

namespace {

std::vector<NormSpec> test_norms() {
  return {NormSpec::euclidean(), NormSpec::lp(3), NormSpec::lp(4), square_polygon()};
}

}  // namespace

TEST(QuadratureRule, Invariants) {
  for (const auto& spec : test_norms()) {
    const auto rule = quadrature_rule(PlanarNorm(spec), 4096);
    double total = 0.0;
    Vec2 normal_integral{};
    for (std::size_t i = 0; i < rule.size(); ++i) {
      total += rule.weights[i];
      normal_integral += rule.weights[i] * rule.normals[i];
    }
    EXPECT_NEAR(total, rule.atlas.perimeter(), 1e-8);
    EXPECT_LE(length(normal_integral), 1e-8);
    EXPECT_EQ(rule.quad_tol, std::max(1e-6, 10.0 / 4096));
  }
  EXPECT_THROW(quadrature_rule(boundary_atlas(PlanarNorm(), 256)), Error);
}

TEST(ReconstructPoint, Examples) {
  const auto e = quadrature_rule(PlanarNorm(), 4096);
  Vec2 r = reconstruct_point(e, {1, 0});
  EXPECT_NEAR(r.x, 1.0, 1e-6);
  EXPECT_NEAR(r.y, 0.0, 1e-6);

  const auto sq = quadrature_rule(PlanarNorm(square_polygon()), 4096);
  r = reconstruct_point(sq, {1, 0});
  EXPECT_NEAR(r.x, 1.0, 1e-12);
  EXPECT_NEAR(r.y, 0.0, 1e-12);
  r = reconstruct_point(sq, {1, 1});
  EXPECT_NEAR(r.x, 1.0, 1e-12);
  EXPECT_NEAR(r.y, 1.0, 1e-12);

  const auto l4 = quadrature_rule(PlanarNorm(NormSpec::lp(4)), 20000);
  EXPECT_LE(verify_reconstruction(l4, 64, 1).max_error, 1e-4);
}

TEST(ReconstructPoint, ConvergesWithSamples) {
  for (const auto& spec : test_norms()) {
    const auto rep = reconstruction_convergence(PlanarNorm(spec), 2048);
    EXPECT_TRUE(rep.passed) << to_string(spec.kind) << " " << rep.error_n << " " << rep.error_2n;
  }
}

TEST(ArcMeasure, Examples) {
  const auto e = quadrature_rule(PlanarNorm(), 4096);
  const Vec2 q = arc_measure(e, {1, 0}, {0, 1});
  EXPECT_NEAR(q.x, 0.5, 1e-6);
  EXPECT_NEAR(q.y, 0.5, 1e-6);
  const Vec2 u = unit_from_angle(0.3);
  EXPECT_LE(length(arc_measure(e, u, unit_from_angle(0.3 + 1e-9))), 1e-8);
  EXPECT_LE(length(arc_measure(e, unit_from_angle(0.3 + 1e-9), u)), 1e-8);  // almost the full loop
  EXPECT_LE(length(loop_measure(e)), 1e-12);
  EXPECT_THROW(arc_measure(e, {2, 0}, {0, 1}), Error);
}

TEST(ArcMeasure, AdditivityAndStieltjes) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ang(0, kTwoPi);
  for (const auto& spec : test_norms()) {
    const auto rule = quadrature_rule(PlanarNorm(spec), 4096);
    for (int k = 0; k < 64; ++k) {
      double t[3] = {ang(rng), ang(rng), ang(rng)};
      std::sort(t, t + 3);
      const Vec2 u = rule.perp_boundary_point(t[0]), v = rule.perp_boundary_point(t[1]),
                 w = rule.perp_boundary_point(t[2]);
      EXPECT_LE(length(arc_measure(rule, u, w) - arc_measure(rule, u, v) - arc_measure(rule, v, w)), rule.quad_tol);
    }
    EXPECT_TRUE(stieltjes_check(rule, 64, 3).passed) << to_string(spec.kind);
    EXPECT_TRUE(antisymmetry_check(rule, 64, 4).passed) << to_string(spec.kind);
  }
}

TEST(NonSymmetricBody, ReconstructionFails) {
  const PlanarNorm e;
  const auto rule = quadrature_rule(atlas_perp(shifted_body_atlas(e, {0.2, 0}, 4096)));
  const Vec2 x{1.2, 0.0};  // on the boundary of B + (0.2, 0)
  EXPECT_NEAR(rule.body_gauge(x), 1.0, 1e-12);
  EXPECT_NEAR(length(reconstruct_point(rule, x) - x), 0.2, 1e-6);
  EXPECT_GT(verify_reconstruction(rule, 64, 5).max_error, 0.1);
}

TEST(ReconstructField, Examples) {
  const auto rule = quadrature_rule(PlanarNorm(), 4096);
  const std::vector<Vec2> pts{{0.1, 0.2}, {-0.5, 0.3}, {0.7, -0.9}};
  for (Vec2 m : reconstruct_field(rule, chi_of_field(rule, [](Vec2) { return Vec2{1, 0}; }), pts)) {
    EXPECT_NEAR(m.x, 1.0, 1e-6);
    EXPECT_NEAR(m.y, 0.0, 1e-6);
  }
  for (Vec2 m : reconstruct_field(rule, [](Vec2, std::size_t) { return false; }, pts)) EXPECT_EQ(m, (Vec2{0, 0}));
}

TEST(ReconstructField, L4VortexFromChi) {
  const PlanarNorm n(NormSpec::lp(4));
  const VortexField v{n, {0, 0}, 1};
  const auto rule = quadrature_rule(n, 16384);
  std::vector<Vec2> pts;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> c(-1, 1);
  while (pts.size() < 100) {
    Vec2 x{c(rng), c(rng)};
    if (length(x) > 0.05) pts.push_back(x);
  }
  const auto rec = reconstruct_field(rule, chi_of_field(rule, [&](Vec2 x) { return vortex_eval(v, x); }), pts);
  for (std::size_t k = 0; k < pts.size(); ++k) EXPECT_LE(length(rec[k] - vortex_eval(v, pts[k])), 1e-3);
}
