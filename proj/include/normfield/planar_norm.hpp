#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "error.hpp"
#include "norm_spec.hpp"
#include "numerics.hpp"
#include "vec2.hpp"

namespace normfield {

enum class Smoothness { C1, corner };

inline const char* to_string(Smoothness s) { return s == Smoothness::C1 ? "C1" : "corner"; }

namespace detail {

// Canonical evaluation tree. Duals are pushed down to closed forms wherever
// one exists; the only node evaluated by optimization is `support`, the dual
// of a sum.
enum class NodeKind { euclidean, lp, polygon, sum, scaled, support };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind = NodeKind::euclidean;
  double p = 2.0;
  std::vector<Vec2> vertices;  // ccw, starting from the smallest angle in [0, 2pi)
  std::vector<Vec2> facets;    // facets[i] equals 1 on edge vertices[i] -> vertices[i+1]
  std::vector<NodePtr> children;
  double factor = 1.0;
  std::vector<double> kink_angles;   // radial angles of boundary corners, in [0, 2pi)
  std::vector<double> probe_angles;  // support: coarse scan of the child's boundary, kinks included
  std::vector<Vec2> probe_points;
  bool c1 = true;
  bool strictly_convex = true;
};

inline double gauge(const Node& n, Vec2 x);

inline Vec2 boundary_point(const Node& n, double theta) {
  const Vec2 u = unit_from_angle(theta);
  return u / gauge(n, u);
}

inline double lp_gauge(double p, Vec2 x) {
  const double ax = std::fabs(x.x), ay = std::fabs(x.y);
  const double m = std::max(ax, ay);
  if (m == 0.0) return 0.0;
  return m * std::pow(std::pow(ax / m, p) + std::pow(ay / m, p), 1.0 / p);
}

struct SupportHit {
  double value;
  double theta;
};

// max of x.y over the boundary of the child body of a support node. The
// objective is unimodal along the boundary, so a coarse scan brackets the
// maximizer and Brent refines it.
inline SupportHit support(const Node& n, Vec2 x) {
  const Node& body = *n.children.front();
  const std::size_t k = n.probe_points.size();
  std::size_t best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    const double v = dot(x, n.probe_points[i]);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  // Probes contain the child's corners, where the maximum is often attained
  // exactly; Brent only improves on the best probe inside its bracket.
  const double lo = best == 0 ? n.probe_angles[k - 1] - kTwoPi : n.probe_angles[best - 1];
  const double hi = best + 1 == k ? n.probe_angles[0] + kTwoPi : n.probe_angles[best + 1];
  auto neg = [&](double theta) { return -dot(x, boundary_point(body, theta)); };
  const numerics::Minimum m = numerics::minimize(neg, lo, hi);
  if (-m.value > best_val) return {-m.value, m.arg};
  return {best_val, n.probe_angles[best]};
}

inline double gauge(const Node& n, Vec2 x) {
  switch (n.kind) {
    case NodeKind::euclidean:
      return std::hypot(x.x, x.y);
    case NodeKind::lp:
      return lp_gauge(n.p, x);
    case NodeKind::polygon: {
      double m = 0.0;
      for (Vec2 f : n.facets) m = std::max(m, dot(f, x));
      return m;
    }
    case NodeKind::sum: {
      double s = 0.0;
      for (const auto& c : n.children) s += gauge(*c, x);
      return s;
    }
    case NodeKind::scaled:
      return n.factor * gauge(*n.children.front(), x);
    case NodeKind::support:
      if (x.x == 0.0 && x.y == 0.0) return 0.0;
      return std::max(0.0, support(n, x).value);
  }
  return 0.0;
}

inline void push_unique(std::vector<Vec2>& out, Vec2 u) {
  for (Vec2 v : out)
    if (length(v - u) <= 1e-12 * std::max(1.0, length(u))) return;
  out.push_back(u);
}

// One-sided chord normals at x, scaled to u.x = gauge(x) (hence dual norm 1).
inline void chord_normals(const Node& n, Vec2 x, std::vector<Vec2>& out) {
  const double g = gauge(n, x);
  const Vec2 xb = x / g;
  const double theta = angle_of(x);
  constexpr double eps = 1e-7;
  const Vec2 ahead = boundary_point(n, theta + eps) - xb;
  const Vec2 behind = xb - boundary_point(n, theta - eps);
  Vec2 up = perp_inv(ahead);
  Vec2 um = perp_inv(behind);
  up = up / dot(up, xb);
  um = um / dot(um, xb);
  if (length(up - um) <= 1e-6 * length(up)) {
    Vec2 mid = normalized(up) + normalized(um);
    out.push_back(mid / dot(mid, xb));
  } else {
    out.push_back(um);
    out.push_back(up);
  }
}

// Extreme points of the subdifferential of the gauge at x != 0.
inline void normal_functionals(const Node& n, Vec2 x, std::vector<Vec2>& out) {
  switch (n.kind) {
    case NodeKind::euclidean:
      out.push_back(x / std::hypot(x.x, x.y));
      return;
    case NodeKind::lp: {
      const double g = lp_gauge(n.p, x);
      const double tx = std::fabs(x.x) / g, ty = std::fabs(x.y) / g;
      out.push_back({std::copysign(std::pow(tx, n.p - 1.0), x.x),
                     std::copysign(std::pow(ty, n.p - 1.0), x.y)});
      return;
    }
    case NodeKind::polygon: {
      double m = 0.0;
      for (Vec2 f : n.facets) m = std::max(m, dot(f, x));
      for (Vec2 f : n.facets)
        if (dot(f, x) >= m - 1e-12 * m) push_unique(out, f);
      return;
    }
    case NodeKind::scaled: {
      std::vector<Vec2> inner;
      normal_functionals(*n.children.front(), x, inner);
      for (Vec2 u : inner) out.push_back(n.factor * u);
      return;
    }
    case NodeKind::sum: {
      std::vector<Vec2> acc{Vec2{}};
      for (const auto& c : n.children) {
        std::vector<Vec2> part;
        normal_functionals(*c, x, part);
        std::vector<Vec2> next;
        for (Vec2 a : acc)
          for (Vec2 b : part) push_unique(next, a + b);
        acc = std::move(next);
      }
      out.insert(out.end(), acc.begin(), acc.end());
      return;
    }
    case NodeKind::support: {
      if (n.children.front()->strictly_convex) {
        // Gradient of a support function is the (unique) maximizer.
        const SupportHit hit = support(n, x);
        out.push_back(boundary_point(*n.children.front(), hit.theta));
      } else {
        chord_normals(n, x, out);
      }
      return;
    }
  }
}

inline NodePtr make_polygon(std::vector<Vec2> vs) {
  std::sort(vs.begin(), vs.end(),
            [](Vec2 a, Vec2 b) { return wrap_angle(angle_of(a)) < wrap_angle(angle_of(b)); });
  auto node = std::make_shared<Node>();
  node->kind = NodeKind::polygon;
  node->c1 = false;
  node->strictly_convex = false;
  const std::size_t n = vs.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = vs[i], b = vs[(i + 1) % n];
    node->facets.push_back(perp_inv(b - a) / cross(a, b));
    node->kink_angles.push_back(wrap_angle(angle_of(a)));
  }
  node->vertices = std::move(vs);
  return node;
}

inline NodePtr make_lp(double p) {
  if (p == 1.0) return make_polygon({{1, 0}, {0, 1}, {-1, 0}, {0, -1}});
  if (std::isinf(p)) return make_polygon({{1, 1}, {-1, 1}, {-1, -1}, {1, -1}});
  auto node = std::make_shared<Node>();
  if (p == 2.0) return node;
  node->kind = NodeKind::lp;
  node->p = p;
  return node;
}

inline NodePtr make_scaled(double factor, NodePtr child) {
  if (factor == 1.0) return child;
  auto node = std::make_shared<Node>();
  node->kind = NodeKind::scaled;
  node->factor = factor;
  node->c1 = child->c1;
  node->strictly_convex = child->strictly_convex;
  node->kink_angles = child->kink_angles;
  node->children.push_back(std::move(child));
  return node;
}

inline NodePtr make_support(NodePtr body) {
  auto node = std::make_shared<Node>();
  node->kind = NodeKind::support;
  node->c1 = body->strictly_convex;
  node->strictly_convex = body->c1;
  constexpr int probes = 64;
  for (int i = 0; i < probes; ++i) node->probe_angles.push_back(kTwoPi * i / probes);
  node->probe_angles.insert(node->probe_angles.end(), body->kink_angles.begin(), body->kink_angles.end());
  std::sort(node->probe_angles.begin(), node->probe_angles.end());
  auto same = [](double a, double b) { return b - a <= 1e-12; };
  node->probe_angles.erase(std::unique(node->probe_angles.begin(), node->probe_angles.end(), same),
                           node->probe_angles.end());
  for (double theta : node->probe_angles) node->probe_points.push_back(boundary_point(*body, theta));
  node->children.push_back(std::move(body));
  return node;
}

inline NodePtr dual_of(const NodePtr& n) {
  switch (n->kind) {
    case NodeKind::euclidean:
      return n;
    case NodeKind::lp:
      return make_lp(n->p / (n->p - 1.0));
    case NodeKind::polygon:
      return make_polygon(n->facets);
    case NodeKind::scaled:
      return make_scaled(1.0 / n->factor, dual_of(n->children.front()));
    case NodeKind::sum:
      return make_support(n);
    case NodeKind::support:
      return n->children.front();
  }
  return n;
}

inline NodePtr make_node(const NormSpec& s) {
  switch (s.kind) {
    case NormKind::euclidean:
      return std::make_shared<Node>();
    case NormKind::lp:
      return make_lp(s.p);
    case NormKind::polygon:
      return make_polygon(s.vertices);
    case NormKind::sum: {
      if (s.terms.size() == 1) return make_node(s.terms.front());
      auto node = std::make_shared<Node>();
      node->kind = NodeKind::sum;
      node->c1 = true;
      node->strictly_convex = false;
      for (const auto& t : s.terms) {
        node->children.push_back(make_node(t));
        node->c1 = node->c1 && node->children.back()->c1;
        node->strictly_convex = node->strictly_convex || node->children.back()->strictly_convex;
        const auto& kinks = node->children.back()->kink_angles;
        node->kink_angles.insert(node->kink_angles.end(), kinks.begin(), kinks.end());
      }
      std::sort(node->kink_angles.begin(), node->kink_angles.end());
      return node;
    }
    case NormKind::dual:
      return dual_of(make_node(s.of()));
    case NormKind::scaled:
      return make_scaled(s.factor, make_node(s.of()));
  }
  return nullptr;
}

// Exact corner points of a polygonal unit ball, empty for other bodies.
inline std::vector<Vec2> corner_points(const Node& n) {
  if (n.kind == NodeKind::polygon) return n.vertices;
  if (n.kind == NodeKind::scaled) {
    std::vector<Vec2> inner = corner_points(*n.children.front());
    for (Vec2& v : inner) v = v / n.factor;
    return inner;
  }
  return {};
}

}  // namespace detail

/// An evaluable symmetric planar norm: gauge, dual norm, radial boundary
/// parameterization and normal cones. Cheap to copy; the evaluation tree is
/// shared and immutable.
class PlanarNorm {
 public:
  explicit PlanarNorm(NormSpec spec = NormSpec::euclidean()) {
    validate(spec);
    auto st = std::make_shared<State>();
    st->primal = detail::make_node(spec);
    st->dual = detail::dual_of(st->primal);
    st->corners = detail::corner_points(*st->primal);
    st->spec = std::move(spec);
    compute_equivalence_constants(*st);
    state_ = std::move(st);
  }

  const NormSpec& spec() const { return state_->spec; }

  double operator()(Vec2 x) const { return gauge(x); }
  double gauge(Vec2 x) const { return detail::gauge(*state_->primal, x); }
  /// sup of x.y over the unit ball.
  double dual(Vec2 x) const { return detail::gauge(*state_->dual, x); }

  PlanarNorm dual_norm() const { return PlanarNorm(NormSpec::dual(spec())); }

  bool is_c1() const { return state_->primal->c1; }
  bool is_strictly_convex() const { return state_->primal->strictly_convex; }
  Smoothness smoothness() const { return is_c1() ? Smoothness::C1 : Smoothness::corner; }

  /// c_low |x| <= ||x|| <= c_high |x| for all x.
  double c_low() const { return state_->c_low; }
  double c_high() const { return state_->c_high; }

  /// Radial parameterization of the unit sphere: theta_hat / ||theta_hat||.
  Vec2 boundary_point(double theta) const { return detail::boundary_point(*state_->primal, theta); }

  /// Extreme points of the subdifferential of the norm at x != 0. Each has
  /// dual norm 1 and satisfies u.x = ||x||; one entry when the norm is
  /// differentiable at x, two at a corner.
  std::vector<Vec2> normal_functionals(Vec2 x) const {
    std::vector<Vec2> out;
    detail::normal_functionals(*state_->primal, x, out);
    return out;
  }

  /// Subdifferential of the dual norm at x != 0, i.e. the maximizers of x.y
  /// over the unit ball (extreme points only).
  std::vector<Vec2> dual_normal_functionals(Vec2 x) const {
    std::vector<Vec2> out;
    detail::normal_functionals(*state_->dual, x, out);
    return out;
  }

  /// Outward unit normal at the boundary point in direction x. At corners
  /// the angular midpoint of the extreme normals is returned.
  Vec2 unit_normal(Vec2 x) const {
    std::vector<Vec2> us = normal_functionals(x);
    if (us.size() == 1) return normalized(us.front());
    Vec2 acc{};
    for (Vec2 u : us) acc += normalized(u);
    return normalized(acc);
  }

  /// Corner points of polygonal unit balls (exact), empty otherwise.
  const std::vector<Vec2>& corners() const { return state_->corners; }

 private:
  struct State {
    NormSpec spec;
    detail::NodePtr primal;
    detail::NodePtr dual;
    std::vector<Vec2> corners;
    double c_low = 1.0;
    double c_high = 1.0;
  };

  static void compute_equivalence_constants(State& st) {
    constexpr int n = 2048;
    std::vector<double> angles(n);
    for (int i = 0; i < n; ++i) angles[i] = kPi * i / n;
    const detail::Node& node = *st.primal;
    auto g = [&](double t) { return detail::gauge(node, unit_from_angle(t)); };
    auto neg = [&](double t) { return -g(t); };
    const double lo = numerics::scan_and_refine(g, angles, true).value;
    const double hi = -numerics::scan_and_refine(neg, angles, true).value;
    st.c_low = lo * (1.0 - 1e-12);
    st.c_high = hi * (1.0 + 1e-12);
  }

  std::shared_ptr<const State> state_;
};

/// p_B(x) = x / ||x||.
inline Vec2 radial_project(const PlanarNorm& norm, Vec2 x) {
  require(!(x.x == 0.0 && x.y == 0.0), "radial_project: x must be nonzero");
  return x / norm(x);
}

/// s_B(x) = ||x|| p_B(-x); equals -x for symmetric norms.
inline Vec2 radial_symmetry(const PlanarNorm& norm, Vec2 x) {
  require(!(x.x == 0.0 && x.y == 0.0), "radial_symmetry: x must be nonzero");
  return norm(x) * radial_project(norm, -x);
}

}  // namespace normfield
