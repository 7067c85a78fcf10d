#include "anisofit/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace anisofit {

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  // Jacobi matrix of the Legendre recurrence
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jac(k, k - 1) = b;
    jac(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  QuadratureRule rule;
  rule.exact_degree = 2 * n - 1;
  for (int k = 0; k < n; ++k) {
    rule.nodes.emplace_back(es.eigenvalues()(k), 0.0);
    const double v0 = es.eigenvectors()(0, k);
    rule.weights.push_back(2.0 * v0 * v0);
  }
  // symmetrize to kill round-off asymmetry
  for (int k = 0; k < n / 2; ++k) {
    const double x = (rule.nodes[n - 1 - k].x() - rule.nodes[k].x()) / 2;
    const double w = (rule.weights[k] + rule.weights[n - 1 - k]) / 2;
    rule.nodes[k].x() = -x;
    rule.nodes[n - 1 - k].x() = x;
    rule.weights[k] = rule.weights[n - 1 - k] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2].x() = 0.0;
  return rule;
}

namespace {

const QuadratureRule& cached_gauss(int n) {
  static thread_local std::vector<QuadratureRule> cache;
  if (static_cast<int>(cache.size()) <= n) cache.resize(n + 1);
  if (cache[n].nodes.empty()) cache[n] = gauss_legendre(n);
  return cache[n];
}

}  // namespace

QuadratureRule interval_rule(const Interval1D& in, int n) {
  const auto& g = cached_gauss(n);
  const double half = in.length() / 2, mid = in.mid();
  QuadratureRule rule;
  rule.exact_degree = g.exact_degree;
  for (int k = 0; k < n; ++k) {
    rule.nodes.emplace_back(mid + half * g.nodes[k].x(), 0.0);
    rule.weights.push_back(half * g.weights[k]);
  }
  return rule;
}

QuadratureRule rect_rule(const RectElement& r, int n) {
  const auto& g = cached_gauss(n);
  const double hx = r.width() / 2, hy = r.height() / 2;
  const Point c = r.center();
  QuadratureRule rule;
  rule.exact_degree = g.exact_degree;
  rule.nodes.reserve(n * n);
  rule.weights.reserve(n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      rule.nodes.emplace_back(c.x() + hx * g.nodes[i].x(), c.y() + hy * g.nodes[j].x());
      rule.weights.push_back(hx * hy * g.weights[i] * g.weights[j]);
    }
  return rule;
}

namespace {

// Radon's 7-point rule in barycentric coordinates, weights relative to area.
struct BaryNode {
  double l0, l1, l2, w;
};

const std::array<BaryNode, 7>& radon7() {
  static const std::array<BaryNode, 7> nodes = [] {
    const double s15 = std::sqrt(15.0);
    const double a1 = (6.0 - s15) / 21.0, b1 = 1.0 - 2.0 * a1;
    const double a2 = (6.0 + s15) / 21.0, b2 = 1.0 - 2.0 * a2;
    const double w1 = (155.0 - s15) / 1200.0, w2 = (155.0 + s15) / 1200.0;
    return std::array<BaryNode, 7>{{{1.0 / 3, 1.0 / 3, 1.0 / 3, 9.0 / 40},
                                    {a1, a1, b1, w1},
                                    {a1, b1, a1, w1},
                                    {b1, a1, a1, w1},
                                    {a2, a2, b2, w2},
                                    {a2, b2, a2, w2},
                                    {b2, a2, a2, w2}}};
  }();
  return nodes;
}

void append_radon(const TriElement& t, QuadratureRule& rule) {
  const double area = t.area();
  for (const auto& n : radon7()) {
    rule.nodes.push_back(n.l0 * t.v[0] + n.l1 * t.v[1] + n.l2 * t.v[2]);
    rule.weights.push_back(n.w * area);
  }
}

void append_subdivided(const TriElement& t, int depth, QuadratureRule& rule) {
  if (depth == 0) {
    append_radon(t, rule);
    return;
  }
  for (const auto& c : quad_split(t)) append_subdivided(c, depth - 1, rule);
}

}  // namespace

QuadratureRule triangle_rule(const TriElement& t, int depth) {
  QuadratureRule rule;
  rule.exact_degree = 5;
  std::size_t count = 7;
  for (int d = 0; d < depth; ++d) count *= 4;
  rule.nodes.reserve(count);
  rule.weights.reserve(count);
  append_subdivided(t, depth, rule);
  return rule;
}

std::vector<Point> sample_lattice(const Element& e, int n) {
  if (n < 2) throw std::invalid_argument("sample_lattice: n must be at least 2");
  std::vector<Point> pts;
  if (const auto* in = std::get_if<Interval1D>(&e)) {
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
      const double s = static_cast<double>(i) / (n - 1);
      pts.emplace_back(in->lo + s * in->length(), 0.0);
    }
  } else if (const auto* r = std::get_if<RectElement>(&e)) {
    pts.reserve(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
      const double y = r->iy.lo + r->height() * j / (n - 1);
      for (int i = 0; i < n; ++i) pts.emplace_back(r->ix.lo + r->width() * i / (n - 1), y);
    }
  } else {
    const auto& t = std::get<TriElement>(e);
    const int m = n - 1;
    pts.reserve(static_cast<std::size_t>(n) * (n + 1) / 2);
    for (int i = 0; i <= m; ++i)
      for (int j = 0; j <= m - i; ++j) {
        const int k = m - i - j;
        pts.push_back((i * t.v[0] + j * t.v[1] + k * t.v[2]) / static_cast<double>(m));
      }
  }
  return pts;
}

}  // namespace anisofit
