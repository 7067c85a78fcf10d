#include "anisofit/localerr.hpp"
#include "anisofit/shape.hpp"
#include "anisofit/targets.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace anisofit;

namespace {

TargetFunction make(const std::string& name, std::vector<double> p = {}) { return builtin(name, p); }

TriElement tri(double ax, double ay, double bx, double by, double cx, double cy) {
  return make_triangle<double>({ax, ay}, {bx, by}, {cx, cy});
}

TriElement mapped(const TriElement& t, const Eigen::Matrix2d& phi) {
  auto out = t;
  for (auto& v : out.v) v = phi * v;
  if (out.signed_area() < 0) std::swap(out.v[1], out.v[2]);
  return out;
}

}  // namespace

TEST_CASE("rectangle shape function") {
  CHECK(K_rect(2.0, LinearForm2<double>{1, 1}) == doctest::Approx(1 / std::sqrt(6.0)));
  CHECK(K_rect(kInf, LinearForm2<double>{1, 4}) == doctest::Approx(2.0));
  CHECK(K_rect(2.0, LinearForm2<double>{1, 0}) == 0.0);
  CHECK(rect_constant(1.0) == doctest::Approx(1.0 / 3));
}

TEST_CASE("optimal rectangle") {
  const auto sq = optimal_rect({1, 1}, 1.0);
  CHECK(sq.width() == doctest::Approx(1.0));
  CHECK(sq.height() == doctest::Approx(1.0));
  const auto r = optimal_rect({1, 4}, 1.0);
  CHECK(r.width() == doctest::Approx(2.0));
  CHECK(r.height() == doctest::Approx(0.5));
  CHECK_THROWS_AS(optimal_rect({1, 0}, 1.0), std::domain_error);
}

TEST_CASE("optimal rectangle attains A^(1/tau) K_p(q)") {
  for (const LinearForm2<double> q : {LinearForm2<double>{1, 4}, {-3, 0.5}, {2, 2}}) {
    for (double area : {1.0, 0.01}) {
      const auto r = optimal_rect(q, area);
      const auto f = make("affine2", {0.0, q.qx, q.qy});
      for (double p : {1.0, 2.0, 3.0, kInf}) {
        const double expect = std::pow(area, inv_tau(p, 1)) * K_rect(p, q);
        CHECK(lp_error(f, r, 1, p) == doctest::Approx(expect).epsilon(0.01));
      }
    }
  }
}

TEST_CASE("aspect measure") {
  const RectElement unit{{0, 1, std::nullopt}, {0, 1, std::nullopt}};
  CHECK(a_measure({1, 1}, unit) == doctest::Approx(0.0));
  CHECK(a_measure({1, 4}, unit) == doctest::Approx(2.0));
  CHECK(a_measure({-2.5, 7}, optimal_rect({-2.5, 7}, 0.3)) == doctest::Approx(0.0).scale(1.0));
  CHECK(std::isinf(a_measure({0, 1}, unit)));
}

TEST_CASE("cubic discriminant") {
  CHECK(disc(CubicForm2<double>{1, 0, 0, -1}) == doctest::Approx(-27));
  CHECK(disc(CubicForm2<double>{0, 1, 0, 0}) == 0.0);
  CHECK(disc(CubicForm2<double>{0, 3, 0, -1}) == doctest::Approx(108));
}

TEST_CASE("shipped kappa constants") {
  const auto& k = default_kappa_table();
  // p = 2 constants have closed forms: equilateral triangle, and the
  // optimum for x^2 - y^2
  CHECK(k.get(2, 2.0, 1) == doctest::Approx(1 / std::sqrt(45.0)).epsilon(1e-6));
  CHECK(k.get(2, 2.0, -1) == doctest::Approx(2.0 / 15).epsilon(1e-6));
  CHECK(k.has(2, kInf, 1));
  CHECK(k.has(3, kInf, -1));
  CHECK_THROWS_AS(k.get(2, 3.0, 1), std::out_of_range);
  for (const auto& e : k.entries()) CHECK(e.settings_hash == OracleOptions{}.hash());
}

TEST_CASE("kappa table text round trip") {
  const auto& k = default_kappa_table();
  const auto text = format_kappa_table(k);
  CHECK(format_kappa_table(parse_kappa_table(text)) == text);
  CHECK(parse_kappa_table("# nothing\n").entries().empty());
  CHECK_THROWS(parse_kappa_table("kappa 2 + nonsense h\n"));
}

TEST_CASE("K2 and K3") {
  const auto& k = default_kappa_table();
  for (double p : {2.0, kInf}) {
    CHECK(K2(p, {1, 0, 1}) == doctest::Approx(k.get(2, p, 1)));
    CHECK(K2(p, {1, 0, 100}) == doctest::Approx(10 * k.get(2, p, 1)));
    CHECK(K2(p, {1, 0, -4}) == doctest::Approx(2 * k.get(2, p, -1)));
    CHECK(K2(p, {1, 1, 1}) == 0.0);
    // |disc|^(1/4) scaling
    CHECK(K3(p, {1, 0, -3, 0}) == doctest::Approx(k.get(3, p, 1) * std::pow(108.0, 0.25)));
    CHECK(K3(p, {0, 1, 0, 0}) == 0.0);
  }
  // the shape functions for different p are equivalent
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 50; ++i) {
    const QuadForm2<double> q{u(rng), u(rng), u(rng)};
    if (std::abs(q.det()) < 1e-6) continue;
    const double r = K2(2.0, q) / K2(kInf, q);
    CHECK(r >= 0.25);
    CHECK(r <= 4.0);
  }
}

TEST_CASE("oracle reproduces the p = 2 constants") {
  CHECK(kappa_oracle(2.0, 1) == doctest::Approx(1 / std::sqrt(45.0)).epsilon(1e-4));
  CHECK(kappa_oracle(2.0, -1) == doctest::Approx(2.0 / 15).epsilon(1e-4));
}

TEST_CASE("equilateral triangles are optimal for x^2 + y^2") {
  const double side = 2.0 / std::pow(3.0, 0.25);
  const auto eq = tri(0, 0, side, 0, side / 2, side * std::sqrt(3.0) / 2);
  CHECK(eq.area() == doctest::Approx(1.0));
  const auto q = make("quadratic_form", {1, 0, 1});
  CHECK(form_error(q, eq, 2, 2.0) == doctest::Approx(default_kappa_table().get(2, 2.0, 1)).epsilon(1e-6));
  CHECK(form_error(q, eq, 2, kInf) == doctest::Approx(default_kappa_table().get(2, kInf, 1)).epsilon(1e-6));
}

TEST_CASE("hyperbolic invariance of the error for x^2 - y^2") {
  // diag(2, 1/2) in the (1,1), (1,-1) eigenbasis preserves x^2 - y^2
  Eigen::Matrix2d basis;
  basis << 1, 1, 1, -1;
  basis /= std::sqrt(2.0);
  const Eigen::Matrix2d psi = basis * Eigen::Vector2d(2.0, 0.5).asDiagonal() * basis.transpose();
  const QuadForm2<double> q{1, 0, -1};
  const auto back = q.compose(psi);
  CHECK(back.a == doctest::Approx(1.0));
  CHECK(back.b == doctest::Approx(0.0).scale(1.0));
  CHECK(back.c == doctest::Approx(-1.0));
  const auto hyp = make("quadratic_form", {1, 0, -1});
  const auto half = tri(0, 0, std::sqrt(2.0), 0, 0, std::sqrt(2.0));
  for (double p : {2.0, kInf})
    CHECK(form_error(hyp, mapped(half, psi), 2, p) == doctest::Approx(form_error(hyp, half, 2, p)).epsilon(0.01));
}

TEST_CASE("adaptation ratio sigma") {
  const QuadForm2<double> q{1, 0, 1};
  const auto best = shape_oracle(q, kInf).best;
  CHECK(sigma_adaptation(q, best, kInf) == doctest::Approx(1.0).epsilon(0.02));

  const auto t = tri(0.1, 0.2, 1.3, 0.4, 0.5, 1.1);
  auto small = t;
  for (auto& v : small.v) v *= 0.3;
  for (double p : {2.0, kInf})
    CHECK(sigma_adaptation(q, small, p) == doctest::Approx(sigma_adaptation(q, t, p)).epsilon(1e-6));

  CHECK(sigma_adaptation(q, tri(0, 0, 10, 0, 0, 0.1), 2.0) > 3.0);
  CHECK_THROWS_AS(sigma_adaptation({1, 1, 1}, t, 2.0), std::domain_error);

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 40; ++i) {
    const QuadForm2<double> r{u(rng), u(rng), u(rng)};
    const auto s = tri(u(rng), u(rng), u(rng), u(rng), u(rng), u(rng));
    if (std::abs(r.det()) < 1e-3 || s.area() < 1e-2) continue;
    CHECK(sigma_adaptation(r, s, 2.0) >= 0.98);
  }
}

TEST_CASE("integral constants") {
  const auto f = make("quadratic_form", {0.5, 0, 0.5});
  CHECK(theoretical_constants(f, ConstantKind::A_tri, 2.0) == doctest::Approx(1.0));
  CHECK(theoretical_constants(f, ConstantKind::U, 2.0) == doctest::Approx(1.0));
  CHECK(theoretical_constants(f, ConstantKind::I, 2.0) == doctest::Approx(1.0));
  const auto g = make("quadratic_form", {1, 0, 0});
  CHECK(theoretical_constants(g, ConstantKind::A_tri, 2.0) == doctest::Approx(0.0).scale(1.0));
  CHECK(theoretical_constants(g, ConstantKind::A_rect, kInf) == doctest::Approx(0.0).scale(1.0));
  // sqrt|fx fy| = sqrt(xy) for f = (x^2 + y^2)/2; its L^2 norm is 1/2
  CHECK(theoretical_constants(f, ConstantKind::A_rect, kInf) == doctest::Approx(0.5).epsilon(1e-6));
  const RectElement unit{{0, 1, std::nullopt}, {0, 1, std::nullopt}};
  CHECK(integral_quasi_norm([](const Point& z) { return z.x(); }, unit, 0.5) == doctest::Approx(4.0 / 9).epsilon(1e-6));
}

TEST_CASE("sharp ring constants grow as delta shrinks") {
  const auto a = make("sharp_ring", {0.2}), b = make("sharp_ring", {0.1});
  const double ru = theoretical_constants(b, ConstantKind::U, 2.0) / theoretical_constants(a, ConstantKind::U, 2.0);
  CHECK(ru == doctest::Approx(std::pow(2.0, 1.5)).epsilon(0.3));
}
