// Elements of a partition (interval, axis-aligned rectangle, triangle) and
// the split operations used by every refinement strategy.
//
// Element types are templated on the scalar; the rest of the library works
// with the double aliases at the bottom of this header.

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

namespace anisofit {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

/// Level/index of a dyadic interval 2^-j [n, n+1] relative to its root.
struct DyadicId {
  int level = 0;
  std::int64_t index = 0;
  friend bool operator==(const DyadicId&, const DyadicId&) = default;
};

template <typename Scalar>
struct Interval {
  Scalar lo{0};
  Scalar hi{1};
  std::optional<DyadicId> dyadic;

  Scalar length() const { return hi - lo; }
  Scalar mid() const { return (lo + hi) / 2; }
};

template <typename Scalar>
struct Rect {
  Interval<Scalar> ix;
  Interval<Scalar> iy;

  Scalar width() const { return ix.length(); }
  Scalar height() const { return iy.length(); }
  Scalar area() const { return width() * height(); }
  Point2<Scalar> center() const { return {ix.mid(), iy.mid()}; }
};

/// Triangle with counterclockwise vertices and bisection lineage.
/// `newest` is the index of the most recently generated vertex, or -1.
template <typename Scalar>
struct Triangle {
  std::array<Point2<Scalar>, 3> v;
  int newest = -1;
  int generation = 0;

  Scalar signed_area() const {
    const Point2<Scalar> e1 = v[1] - v[0];
    const Point2<Scalar> e2 = v[2] - v[0];
    return (e1.x() * e2.y() - e1.y() * e2.x()) / 2;
  }
  Scalar area() const { return std::abs(signed_area()); }
  Point2<Scalar> barycenter() const { return (v[0] + v[1] + v[2]) / Scalar(3); }
  /// Length of the edge opposite vertex i.
  Scalar edge_length(int i) const { return (v[(i + 1) % 3] - v[(i + 2) % 3]).norm(); }
};

template <typename Scalar>
using ElementT = std::variant<Interval<Scalar>, Rect<Scalar>, Triangle<Scalar>>;

template <typename Scalar>
struct Measures {
  Scalar area;
  Scalar diameter;   // h_T
  Scalar inscribed;  // rho_T, diameter of the largest inscribed disc
};

enum class Axis : std::uint8_t { halve_x = 0, halve_y = 1 };

enum class IsoRule : std::uint8_t { quad_split, newest_vertex, longest_edge };

// ---------------------------------------------------------------- splits

template <typename Scalar>
std::pair<Interval<Scalar>, Interval<Scalar>> split_interval(const Interval<Scalar>& in) {
  const Scalar m = in.mid();
  Interval<Scalar> a{in.lo, m, std::nullopt};
  Interval<Scalar> b{m, in.hi, std::nullopt};
  if (in.dyadic) {
    a.dyadic = DyadicId{in.dyadic->level + 1, 2 * in.dyadic->index};
    b.dyadic = DyadicId{in.dyadic->level + 1, 2 * in.dyadic->index + 1};
  }
  return {a, b};
}

/// halve_x yields (left, right); halve_y yields (down, up).
template <typename Scalar>
std::pair<Rect<Scalar>, Rect<Scalar>> split_rect(const Rect<Scalar>& r, Axis axis) {
  if (axis == Axis::halve_x) {
    auto [l, rr] = split_interval(r.ix);
    return {Rect<Scalar>{l, r.iy}, Rect<Scalar>{rr, r.iy}};
  }
  auto [d, u] = split_interval(r.iy);
  return {Rect<Scalar>{r.ix, d}, Rect<Scalar>{r.ix, u}};
}

/// Bisects from vertex i towards the midpoint b_i of the opposite edge.
/// First child is {a_i, a_{i+1}, b_i}, second is {a_i, b_i, a_{i+2}}; both keep
/// counterclockwise order and mark b_i as their newest vertex.
template <typename Scalar>
std::pair<Triangle<Scalar>, Triangle<Scalar>> bisect_triangle(const Triangle<Scalar>& t, int i) {
  if (i < 0 || i > 2) throw std::out_of_range("bisect_triangle: vertex index must be 0..2");
  const int j = (i + 1) % 3;
  const int k = (i + 2) % 3;
  const Point2<Scalar> b = (t.v[j] + t.v[k]) / Scalar(2);
  Triangle<Scalar> first{{t.v[i], t.v[j], b}, 2, t.generation + 1};
  Triangle<Scalar> second{{t.v[i], b, t.v[k]}, 1, t.generation + 1};
  return {first, second};
}

/// Vertex opposite the longest edge; ties resolve to the smallest index.
template <typename Scalar>
int longest_edge_vertex(const Triangle<Scalar>& t) {
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (t.edge_length(i) > t.edge_length(best)) best = i;
  return best;
}

/// Vertex used by newest-vertex bisection; root triangles without lineage
/// fall back to the longest-edge choice.
template <typename Scalar>
int newest_vertex_or_longest(const Triangle<Scalar>& t) {
  return t.newest >= 0 ? t.newest : longest_edge_vertex(t);
}

/// Midpoint quad-split of a triangle into four similar children. Children
/// 0..2 are the corner triangles at a_0..a_2, child 3 the central one.
template <typename Scalar>
std::array<Triangle<Scalar>, 4> quad_split(const Triangle<Scalar>& t) {
  const auto& a = t.v;
  const Point2<Scalar> m01 = (a[0] + a[1]) / Scalar(2);
  const Point2<Scalar> m12 = (a[1] + a[2]) / Scalar(2);
  const Point2<Scalar> m20 = (a[2] + a[0]) / Scalar(2);
  const int g = t.generation + 1;
  return {Triangle<Scalar>{{a[0], m01, m20}, -1, g}, Triangle<Scalar>{{m01, a[1], m12}, -1, g},
          Triangle<Scalar>{{m20, m12, a[2]}, -1, g}, Triangle<Scalar>{{m12, m20, m01}, -1, g}};
}

/// Midpoint quad-split of a rectangle: (down-left, down-right, up-left, up-right).
template <typename Scalar>
std::array<Rect<Scalar>, 4> quad_split(const Rect<Scalar>& r) {
  auto [l, rr] = split_interval(r.ix);
  auto [d, u] = split_interval(r.iy);
  return {Rect<Scalar>{l, d}, Rect<Scalar>{rr, d}, Rect<Scalar>{l, u}, Rect<Scalar>{rr, u}};
}

template <typename Scalar>
std::vector<ElementT<Scalar>> iso_split(const ElementT<Scalar>& e, IsoRule rule) {
  std::vector<ElementT<Scalar>> out;
  if (const auto* in = std::get_if<Interval<Scalar>>(&e)) {
    auto [a, b] = split_interval(*in);
    out = {a, b};
  } else if (const auto* r = std::get_if<Rect<Scalar>>(&e)) {
    if (rule != IsoRule::quad_split)
      throw std::invalid_argument("iso_split: rectangles only support quad_split");
    for (const auto& c : quad_split(*r)) out.emplace_back(c);
  } else {
    const auto& t = std::get<Triangle<Scalar>>(e);
    if (rule == IsoRule::quad_split) {
      for (const auto& c : quad_split(t)) out.emplace_back(c);
    } else {
      const int i = rule == IsoRule::newest_vertex ? newest_vertex_or_longest(t)
                                                   : longest_edge_vertex(t);
      auto [a, b] = bisect_triangle(t, i);
      out = {a, b};
    }
  }
  return out;
}

// -------------------------------------------------------------- measures

template <typename Scalar>
Measures<Scalar> measures(const Interval<Scalar>& in) {
  const Scalar l = in.length();
  return {l, l, l};
}

template <typename Scalar>
Measures<Scalar> measures(const Rect<Scalar>& r) {
  const Scalar w = r.width(), h = r.height();
  return {w * h, std::hypot(w, h), std::min(w, h)};
}

template <typename Scalar>
Measures<Scalar> measures(const Triangle<Scalar>& t) {
  const Scalar a = t.edge_length(0), b = t.edge_length(1), c = t.edge_length(2);
  const Scalar area = t.area();
  const Scalar semi = (a + b + c) / 2;
  // inradius = area / semiperimeter
  return {area, std::max({a, b, c}), 2 * area / semi};
}

template <typename Scalar>
Measures<Scalar> measures(const ElementT<Scalar>& e) {
  return std::visit([](const auto& x) { return measures(x); }, e);
}

template <typename Scalar>
Scalar area(const ElementT<Scalar>& e) {
  return measures(e).area;
}

// ------------------------------------------------------------ membership
//
// Points on a cut belong to the lower/left child. For a triangle bisected
// from a_i, the cut segment belongs to the first child (the one holding
// a_{i+1}).

template <typename Scalar>
int child_of(const Interval<Scalar>& parent, Scalar x) {
  return x <= parent.mid() ? 0 : 1;
}

template <typename Scalar>
int child_of(const Rect<Scalar>& parent, Axis axis, const Point2<Scalar>& p) {
  return axis == Axis::halve_x ? child_of(parent.ix, p.x()) : child_of(parent.iy, p.y());
}

template <typename Scalar>
int child_of(const Triangle<Scalar>& parent, int i, const Point2<Scalar>& p) {
  const int j = (i + 1) % 3, k = (i + 2) % 3;
  const Point2<Scalar> b = (parent.v[j] + parent.v[k]) / Scalar(2);
  const Point2<Scalar> d = b - parent.v[i];
  const Point2<Scalar> q = p - parent.v[i];
  const Scalar side = d.x() * q.y() - d.y() * q.x();
  // a_{i+1} lies to the right of the ray a_i -> b_i for counterclockwise input;
  // points within round-off of the cut count as on it
  const Scalar ref = parent.signed_area() > 0 ? Scalar(-1) : Scalar(1);
  using std::abs;
  const Scalar slack = Scalar(1e-12) * (abs(d.x()) + abs(d.y())) * (abs(q.x()) + abs(q.y()));
  return (side * ref >= -slack) ? 0 : 1;
}

/// Index of the quad-split child containing p (same order as quad_split).
template <typename Scalar>
int quad_child_of(const Rect<Scalar>& parent, const Point2<Scalar>& p) {
  return child_of(parent.ix, p.x()) + 2 * child_of(parent.iy, p.y());
}

template <typename Scalar>
int quad_child_of(const Triangle<Scalar>& parent, const Point2<Scalar>& p) {
  // barycentric coordinates relative to the parent
  const auto& a = parent.v;
  const Point2<Scalar> e1 = a[1] - a[0], e2 = a[2] - a[0], q = p - a[0];
  const Scalar det = e1.x() * e2.y() - e1.y() * e2.x();
  const Scalar l1 = (q.x() * e2.y() - q.y() * e2.x()) / det;
  const Scalar l2 = (e1.x() * q.y() - e1.y() * q.x()) / det;
  const Scalar l0 = 1 - l1 - l2;
  const Scalar half(0.5);
  if (l0 >= half) return 0;
  if (l1 >= half) return 1;
  if (l2 >= half) return 2;
  return 3;
}

/// Closed-set containment test with a relative tolerance.
template <typename Scalar>
bool contains(const Triangle<Scalar>& t, const Point2<Scalar>& p, Scalar tol = Scalar(1e-12)) {
  const Scalar s = t.signed_area() > 0 ? Scalar(1) : Scalar(-1);
  const Scalar scale = tol * std::max(Scalar(1), 2 * t.area());
  for (int i = 0; i < 3; ++i) {
    const Point2<Scalar> e = t.v[(i + 1) % 3] - t.v[i];
    const Point2<Scalar> q = p - t.v[i];
    if (s * (e.x() * q.y() - e.y() * q.x()) < -scale) return false;
  }
  return true;
}

// ------------------------------------------------------------ root meshes

template <typename Scalar>
Triangle<Scalar> make_triangle(const Point2<Scalar>& a, const Point2<Scalar>& b,
                               const Point2<Scalar>& c) {
  Triangle<Scalar> t{{a, b, c}, -1, 0};
  if (t.signed_area() < 0) std::swap(t.v[1], t.v[2]);
  return t;
}

/// Two triangles along the main diagonal of a rectangle.
template <typename Scalar>
std::vector<Triangle<Scalar>> diagonal_split(const Rect<Scalar>& r) {
  const Point2<Scalar> p00{r.ix.lo, r.iy.lo}, p10{r.ix.hi, r.iy.lo};
  const Point2<Scalar> p01{r.ix.lo, r.iy.hi}, p11{r.ix.hi, r.iy.hi};
  // right angle at the corner so that the diagonal is the longest edge
  return {make_triangle(p10, p11, p00), make_triangle(p01, p00, p11)};
}

/// Four triangles meeting at the rectangle center.
template <typename Scalar>
std::vector<Triangle<Scalar>> crisscross_split(const Rect<Scalar>& r) {
  const Point2<Scalar> c = r.center();
  const Point2<Scalar> p00{r.ix.lo, r.iy.lo}, p10{r.ix.hi, r.iy.lo};
  const Point2<Scalar> p01{r.ix.lo, r.iy.hi}, p11{r.ix.hi, r.iy.hi};
  return {make_triangle(c, p00, p10), make_triangle(c, p10, p11), make_triangle(c, p11, p01),
          make_triangle(c, p01, p00)};
}

/// Equilateral triangle with unit side, lower-left vertex at the origin.
template <typename Scalar>
Triangle<Scalar> unit_equilateral() {
  using std::sqrt;
  return make_triangle<Scalar>({0, 0}, {1, 0}, {Scalar(0.5), sqrt(Scalar(3)) / 2});
}

// ----------------------------------------------------------- double aliases

using Point = Point2<double>;
using Interval1D = Interval<double>;
using RectElement = Rect<double>;
using TriElement = Triangle<double>;
using Element = ElementT<double>;

}  // namespace anisofit
