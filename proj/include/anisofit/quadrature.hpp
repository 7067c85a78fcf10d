// Quadrature rules on intervals, rectangles and triangles.

#pragma once

#include "anisofit/geometry.hpp"

#include <vector>

namespace anisofit {

struct QuadratureRule {
  std::vector<Point> nodes;
  std::vector<double> weights;
  int exact_degree = 0;

  std::size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre nodes/weights on [-1, 1] (Golub-Welsch).
QuadratureRule gauss_legendre(int n);

/// n-point Gauss rule on an interval; nodes carry y = 0.
QuadratureRule interval_rule(const Interval1D& in, int n);

/// Tensor n x n Gauss rule on a rectangle.
QuadratureRule rect_rule(const RectElement& r, int n);

/// Symmetric 7-point degree-5 rule applied on a 4^depth uniform subdivision.
QuadratureRule triangle_rule(const TriElement& t, int depth = 0);

/// Structured sample lattices used by the sampled L-infinity estimators.
/// Interval and rectangle lattices include the element boundary; the
/// triangle lattice has n points per edge.
std::vector<Point> sample_lattice(const Element& e, int n);

}  // namespace anisofit
