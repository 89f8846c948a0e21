#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "error.hpp"
#include "vec2.hpp"

namespace normfield {

enum class NormKind { euclidean, lp, polygon, sum, dual, scaled };

/// Declarative description of a planar norm. Composite kinds nest via `terms`:
/// a sum holds its summands there, dual and scaled hold their single operand.
struct NormSpec {
  NormKind kind = NormKind::euclidean;
  double p = 2.0;               // lp exponent, +inf for the max norm
  std::vector<Vec2> vertices;   // polygon unit ball
  std::vector<NormSpec> terms;  // sum terms, or the operand of dual / scaled
  double factor = 1.0;          // scaled: ||x|| = factor * ||x||_of

  static NormSpec euclidean() { return {}; }
  static NormSpec lp(double p) {
    NormSpec s;
    s.kind = NormKind::lp;
    s.p = p;
    return s;
  }
  static NormSpec polygon(std::vector<Vec2> vertices) {
    NormSpec s;
    s.kind = NormKind::polygon;
    s.vertices = std::move(vertices);
    return s;
  }
  static NormSpec sum(std::vector<NormSpec> terms) {
    NormSpec s;
    s.kind = NormKind::sum;
    s.terms = std::move(terms);
    return s;
  }
  static NormSpec dual(NormSpec of) {
    NormSpec s;
    s.kind = NormKind::dual;
    s.terms.push_back(std::move(of));
    return s;
  }
  static NormSpec scaled(double factor, NormSpec of) {
    NormSpec s;
    s.kind = NormKind::scaled;
    s.factor = factor;
    s.terms.push_back(std::move(of));
    return s;
  }

  const NormSpec& of() const { return terms.front(); }
};

inline const char* to_string(NormKind k) {
  switch (k) {
    case NormKind::euclidean: return "euclidean";
    case NormKind::lp: return "lp";
    case NormKind::polygon: return "polygon";
    case NormKind::sum: return "sum";
    case NormKind::dual: return "dual";
    case NormKind::scaled: return "scaled";
  }
  return "?";
}

/// The square [-1,1]^2, i.e. the unit ball of the max norm.
inline NormSpec square_polygon() {
  return NormSpec::polygon({{1, 1}, {-1, 1}, {-1, -1}, {1, -1}});
}

/// A C1 body with flat edges: the square [-2,2]^2 with corners rounded by
/// unit quarter circles. It is the dual of ||x||_1 + |x|.
inline NormSpec rounded_square() {
  return NormSpec::dual(NormSpec::sum({NormSpec::lp(1.0), NormSpec::euclidean()}));
}

namespace detail {

inline void validate_polygon(const std::vector<Vec2>& vs) {
  require(vs.size() >= 4, "polygon needs at least 4 vertices");
  for (Vec2 v : vs) {
    require(std::isfinite(v.x) && std::isfinite(v.y), "polygon vertex must be finite");
    require(length(v) > 0.0, "polygon vertex must be nonzero");
  }
  for (Vec2 v : vs) {
    const double scale = length(v);
    const bool has_opposite = std::any_of(vs.begin(), vs.end(), [&](Vec2 w) {
      return length(v + w) <= 1e-9 * scale;
    });
    require(has_opposite, "polygon must be centrally symmetric");
  }
  std::vector<Vec2> sorted = vs;
  std::sort(sorted.begin(), sorted.end(),
            [](Vec2 a, Vec2 b) { return wrap_angle(angle_of(a)) < wrap_angle(angle_of(b)); });
  const std::size_t n = sorted.size();
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 a = sorted[i], b = sorted[(i + 1) % n], c = sorted[(i + 2) % n];
    const double turn = cross(b - a, c - b);
    require(turn > 1e-12 * length(b - a) * length(c - b),
            "polygon must be strictly convex with no three collinear consecutive vertices");
  }
}

}  // namespace detail

/// Checks the structural invariants of a spec; throws Error on the first violation.
inline void validate(const NormSpec& s) {
  switch (s.kind) {
    case NormKind::euclidean:
      break;
    case NormKind::lp:
      require(!std::isnan(s.p) && s.p >= 1.0, "p must be ≥ 1");
      break;
    case NormKind::polygon:
      detail::validate_polygon(s.vertices);
      break;
    case NormKind::sum:
      require(!s.terms.empty(), "sum requires at least one term");
      for (const auto& t : s.terms) validate(t);
      break;
    case NormKind::dual:
      require(s.terms.size() == 1, "dual requires exactly one operand");
      validate(s.of());
      break;
    case NormKind::scaled:
      require(std::isfinite(s.factor) && s.factor > 0.0, "scaled factor must be > 0");
      require(s.terms.size() == 1, "scaled requires exactly one operand");
      validate(s.of());
      break;
  }
}

}  // namespace normfield
