#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "normfield/kinetic.hpp"

using namespace normfield;

namespace {

const PlanarNorm& l4() {
  static const PlanarNorm n(NormSpec::lp(4));
  return n;
}

}  // namespace

TEST(FieldGrid, GeometryAndBilinear) {
  FieldGrid g = square_grid(PlanarNorm(), 256);
  EXPECT_DOUBLE_EQ(g.h, 2.0 / 256);
  EXPECT_DOUBLE_EQ(g.origin.x, -1.0 + g.h / 2);
  EXPECT_DOUBLE_EQ(g.lower().x, -1.0);
  EXPECT_NEAR(g.upper().y, 1.0, 1e-12);
  fill(g, [](Vec2 x) { return Vec2{2 * x.x - x.y, 0.5 + x.y}; });
  const auto v = g.bilinear({0.123, -0.456});
  ASSERT_TRUE(v.has_value());
  EXPECT_NEAR(v->x, 2 * 0.123 + 0.456, 1e-12);
  EXPECT_NEAR(v->y, 0.5 - 0.456, 1e-12);
  EXPECT_FALSE(g.bilinear({-0.999, 0.0}).has_value());  // left of the first center
  EXPECT_FALSE(g.bilinear({1.5, 0.0}).has_value());
  g.mask[g.index(128, 128)] = 0;
  EXPECT_FALSE(g.bilinear(g.center(128, 128) - Vec2{0.1 * g.h, 0.1 * g.h}).has_value());
}

TEST(FieldGrid, VortexGridMasksCenterCells) {
  const auto g = vortex_grid({PlanarNorm(), {0, 0}, 1}, 64);
  std::size_t masked = 0;
  for (auto m : g.mask) masked += m == 0;
  EXPECT_EQ(masked, 4u);  // the center is a shared corner
  const auto s = vortex_grid({PlanarNorm(), {0.3, -0.2}, 1}, 64);
  masked = 0;
  for (auto m : s.mask) masked += m == 0;
  EXPECT_EQ(masked, 1u);
  EXPECT_NO_THROW(validate_grid(s));
}

TEST(FieldGrid, ValidationNamesTheCell) {
  FieldGrid g = constant_grid(PlanarNorm(), {1, 0}, 16);
  g.values[g.index(3, 5)] = {1.1, 0};
  try {
    validate_grid(g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("(3, 5)"), std::string::npos);
  }
  FieldGrid m = constant_grid(PlanarNorm(), {1, 0}, 16);
  for (std::size_t j = 0; j < 16; ++j)
    for (std::size_t i = 0; i < 16; ++i)
      if ((i + j) % 2) m.mask[m.index(i, j)] = 0;
  EXPECT_THROW(validate_grid(m), Error);
}

TEST(ChiSlice, Examples) {
  const auto c = constant_grid(PlanarNorm(), {1, 0}, 32);
  for (auto v : chi_slice(c, {0.6, 0.8})) EXPECT_EQ(v, 1);
  for (auto v : chi_slice(c, {0, 1})) EXPECT_EQ(v, 0);  // ties map to 0

  // l4 vortex: the slice is the half-plane x.nu > 0, nu = n_{B^perp}(s), up to one cell.
  const auto g = vortex_grid({l4(), {0, 0}, 1}, 128);
  const auto pa = atlas_perp(boundary_atlas(l4(), 4096));
  for (Vec2 s : kinetic_directions(pa, 16)) {
    const Vec2 nu = normal_at(pa, s);
    const auto chi = chi_slice(g, s);
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i) {
        const std::size_t k = g.index(i, j);
        if (!g.inside(i, j)) {
          EXPECT_EQ(chi[k], 0);
          continue;
        }
        const double side = dot(g.center(i, j), nu);
        if (std::fabs(side) > g.h * (std::fabs(nu.x) + std::fabs(nu.y))) {
          EXPECT_EQ(chi[k], side > 0 ? 1 : 0);
        }
      }
  }
}

TEST(KineticDirections, EquispacedOnRotatedBoundary) {
  const auto pa = atlas_perp(boundary_atlas(l4(), 4096));
  const auto dirs = kinetic_directions(pa, 64);
  ASSERT_EQ(dirs.size(), 64u);
  const PlanarNorm& n = l4();
  for (Vec2 s : dirs) EXPECT_NEAR(n(perp_inv(s)), 1.0, 1e-12);
  double lo = 1e9, hi = 0;
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const double d = length(dirs[(k + 1) % dirs.size()] - dirs[k]);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  EXPECT_LE(hi - lo, 1e-2 * hi);  // chords of equal arcs
}

TEST(KineticResidual, ConstantFieldVanishes) {
  const auto g = constant_grid(l4(), {1, 0}, 128);
  const auto rep = kinetic_check(g, 16);
  EXPECT_LE(rep.max_residual, 1e-12);
  EXPECT_LE(rep.curl_residual, 1e-12);
  EXPECT_TRUE(rep.passed);
}

TEST(KineticResidual, VorticesSolveTheEquation) {
  for (auto spec : {NormSpec::euclidean(), NormSpec::lp(3), NormSpec::lp(4)}) {
    const auto g = vortex_grid({PlanarNorm(spec), {0, 0}, 1}, 256);
    const auto rep = kinetic_check(g, 64);
    EXPECT_LE(rep.max_scaled, 1e-3) << to_string(spec.kind) << spec.p;
    EXPECT_LE(rep.curl_residual, 1e-3 + 4 * g.h) << to_string(spec.kind) << spec.p;
    EXPECT_TRUE(rep.passed);
    EXPECT_EQ(rep.residuals.size(), 64u);
    EXPECT_GT(rep.n_test_functions, 16u);
  }
}

TEST(KineticResidual, JumpFieldIsRejected) {
  const auto g = fixtures::jump_grid(PlanarNorm());
  const auto rep = kinetic_check(g, 64);
  EXPECT_GE(rep.max_residual, 0.1);
  EXPECT_GE(rep.curl_residual, 0.1);
  EXPECT_FALSE(rep.passed);
}

TEST(KineticResidual, SignFlip) {
  auto g = vortex_grid({PlanarNorm(NormSpec::lp(3)), {0.3, -0.2}, 1}, 128);
  auto f = g;
  for (auto& m : f.values) m = -m;
  const auto pa = atlas_perp(boundary_atlas(g.norm, 4096));
  const auto w = default_widths(g);
  for (Vec2 s : kinetic_directions(pa, 8))
    EXPECT_NEAR(kinetic_residual(f, -s, w), kinetic_residual(g, s, w), 1e-12);
}

TEST(KineticResidual, DecreasesUnderRefinement) {
  const auto coarse = kinetic_check(vortex_grid({PlanarNorm(), {0, 0}, 1}, 128), 64);
  const auto fine = kinetic_check(vortex_grid({PlanarNorm(), {0, 0}, 1}, 256), 64);
  EXPECT_LE(fine.max_residual, 0.7 * coarse.max_residual);
}

TEST(KineticResidual, NoTestFunctionFits) {
  const auto g = constant_grid(PlanarNorm(), {1, 0}, 32);
  EXPECT_THROW(kinetic_residual(g, {1, 0}, {5.0}), Error);
  EXPECT_THROW(kinetic_check(constant_grid(PlanarNorm(square_polygon()), {1, 0}, 32)), Error);
}

TEST(CurlResidual, Examples) {
  const auto rot = fixtures::rotated_vortex_grid(256);
  EXPECT_GE(curl_residual(rot, default_widths(rot)), 0.3);
  EXPECT_GE(circulation_residual(rot), 0.3);
  const auto c = constant_grid(PlanarNorm(), {0.6, 0.8}, 64);
  EXPECT_LE(curl_residual(c, default_widths(c)), 1e-12);
  const auto v = vortex_grid({PlanarNorm(NormSpec::lp(3)), {0.3, -0.2}, -1}, 256);
  EXPECT_LE(curl_residual(v, default_widths(v)), 1e-3 + 4 * v.h);
}

TEST(KineticImpliesCurl, HoldsForGoodAndBadFields) {
  const auto l3 = vortex_grid({PlanarNorm(NormSpec::lp(3)), {0, 0}, 1}, 128);
  const auto a = kinetic_implies_curl_check(l3);
  EXPECT_TRUE(a.holds) << a.curl_residual << " " << a.bound;
  const auto c = kinetic_implies_curl_check(constant_grid(PlanarNorm(), {1, 0}, 64));
  EXPECT_TRUE(c.holds);
  EXPECT_LE(c.curl_residual, 1e-12);
  const auto j = kinetic_implies_curl_check(fixtures::jump_grid(PlanarNorm(), 128));
  EXPECT_TRUE(j.holds) << j.curl_residual << " " << j.bound;
  EXPECT_GE(j.curl_residual, 0.1);
  EXPECT_NEAR(j.perimeter, kTwoPi, 1e-5);
}

TEST(Characteristics, Direction) {
  const Vec2 d = characteristic_direction(PlanarNorm(), {0.6, 0.8});
  EXPECT_NEAR(d.x, 0.6, 1e-12);
  EXPECT_NEAR(d.y, 0.8, 1e-12);
  const Vec2 m = vortex_eval({l4(), {0, 0}, 1}, {0.3, 0.7});
  const Vec2 e = characteristic_direction(l4(), m);
  EXPECT_LE(length(e - normalized(Vec2{0.3, 0.7})), 1e-9);
  EXPECT_THROW(characteristic_direction(PlanarNorm(square_polygon()), {1, 0}), Error);
}

TEST(Characteristics, VortexRaysAreCharacteristics) {
  struct Case {
    NormSpec spec;
    double factor;
  };
  for (const auto& [spec, factor] : {Case{NormSpec::euclidean(), 2.0}, Case{NormSpec::lp(4), 5.0}}) {
    for (int sign : {1, -1}) {
      const auto g = vortex_grid({PlanarNorm(spec), {0, 0}, sign}, 256);
      const auto rep = characteristics_check(g, 64, 9);
      ASSERT_EQ(rep.probes.size(), 64u);
      for (const auto& p : rep.probes) {
        const double r_min = fixtures::segment_distance(p.start, p.end, {0, 0});
        EXPECT_LE(p.deviation, factor * g.h / r_min);
        EXPECT_LE(std::fabs(cross(p.direction, normalized(p.start))), 1e-9);  // radial
      }
    }
  }
  const auto c = characteristics_check(constant_grid(PlanarNorm(), {0, 1}, 64), 16);
  EXPECT_EQ(c.max_deviation, 0.0);
  const auto g = vortex_grid({PlanarNorm(), {0, 0}, 1}, 64);
  EXPECT_THROW(walk_characteristic(g, 32, 32), Error);
}
