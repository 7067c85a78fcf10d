#include "anisofit/targets.hpp"

#include "doctest.h"

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

using namespace anisofit;

namespace {

TargetFunction make(const std::string& name, std::vector<double> p = {}) { return builtin(name, p); }

// central differences of eval against grad, and of grad against hess
void check_derivatives(const TargetFunction& f, const RectElement& box, double tol) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(box.ix.lo, box.ix.hi), uy(box.iy.lo, box.iy.hi);
  const double h = 1e-5;
  for (int k = 0; k < 100; ++k) {
    const Point z(ux(rng), uy(rng));
    const Point ex(h, 0), ey(0, h);
    const Eigen::Vector2d g = f.grad(z);
    CHECK(g.x() == doctest::Approx((f(z + ex) - f(z - ex)) / (2 * h)).epsilon(tol).scale(1.0));
    CHECK(g.y() == doctest::Approx((f(z + ey) - f(z - ey)) / (2 * h)).epsilon(tol).scale(1.0));
    const Eigen::Matrix2d H = f.hess(z);
    const Eigen::Vector2d hx = (f.grad(z + ex) - f.grad(z - ex)) / (2 * h);
    const Eigen::Vector2d hy = (f.grad(z + ey) - f.grad(z - ey)) / (2 * h);
    CHECK(H(0, 0) == doctest::Approx(hx.x()).epsilon(tol).scale(1.0));
    CHECK(H(0, 1) == doctest::Approx(hx.y()).epsilon(tol).scale(1.0));
    CHECK(H(1, 0) == doctest::Approx(hy.x()).epsilon(tol).scale(1.0));
    CHECK(H(1, 1) == doctest::Approx(hy.y()).epsilon(tol).scale(1.0));
  }
}

const RectElement kUnit{{0.05, 0.95, std::nullopt}, {0.05, 0.95, std::nullopt}};

}  // namespace

TEST_CASE("builtin values") {
  CHECK(make("power_alpha", {0.5})(Point(0.25, 0)) == doctest::Approx(0.5));
  CHECK(make("quadratic_form", {1, 0, 100})(Point(1, 1)) == doctest::Approx(101));
  CHECK(make("sin_1d")(Point(0.5, 0)) == doctest::Approx(1.0));
  CHECK(make("cubic_form", {1, 0, 0, -1})(Point(2, 1)) == doctest::Approx(7));
  CHECK(make("affine2", {1, 2, 3})(Point(1, 1)) == doctest::Approx(6));
  const auto ring = make("sharp_ring", {0.2});
  CHECK(ring(Point(1, 0)) == doctest::Approx(1.0));
  CHECK(ring(Point(0, 1.2)) == doctest::Approx(-1.0));
  CHECK(ring.sharp);
  CHECK(make("cartoon_disk").sharp);
  CHECK(make("cartoon_disk")(Point(0.5, 0.5)) == 1.0);
  CHECK(make("cartoon_disk")(Point(0.1, 0.1)) == 0.0);
}

TEST_CASE("builtin errors") {
  CHECK_THROWS_AS(make("no_such_target"), std::invalid_argument);
  CHECK_THROWS_AS(make("sharp_ring", {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(make("sharp_ring", {-1.0}), std::invalid_argument);
  CHECK_THROWS_AS(parse_target("quadratic_form:1,x,2"), std::invalid_argument);
}

TEST_CASE("parse_target reads parameter lists") {
  const auto q = parse_target("quadratic_form:1,0,100");
  CHECK(q(Point(1, 1)) == doctest::Approx(101));
  CHECK(parse_target("sin_1d").is_1d());
}

TEST_CASE("analytic derivatives agree with finite differences") {
  check_derivatives(make("quadratic_form", {1, 0.3, 100}), kUnit, 1e-6);
  check_derivatives(make("cubic_form", {1, -2, 0.5, 3}), kUnit, 1e-6);
  check_derivatives(make("product_sine", {2, 3}), kUnit, 1e-5);
  check_derivatives(make("plane_wave", {2, 3}), kUnit, 1e-5);
  check_derivatives(make("affine2", {1, 2, 3}), kUnit, 1e-6);
  check_derivatives(make("oscillatory_counterexample"), kUnit, 1e-4);
  // away from the ring edges, where the third derivative jumps
  check_derivatives(make("sharp_ring", {0.2}), RectElement{{0.1, 0.6, std::nullopt}, {0.1, 0.6, std::nullopt}}, 1e-5);
}

TEST_CASE("bump function") {
  CHECK(bump_phi(0.5) == doctest::Approx(std::exp(-4.0)));
  CHECK(bump_phi(0.0) == 0.0);
  CHECK(bump_phi(1.0) == 0.0);
  for (double t : {0.1, 0.23, 0.4}) CHECK(bump_phi(t) == doctest::Approx(bump_phi(1 - t)));
  const double h = 1e-6;
  CHECK(bump_phi_d1(0.3) == doctest::Approx((bump_phi(0.3 + h) - bump_phi(0.3 - h)) / (2 * h)).epsilon(1e-6));
  CHECK(bump_phi_d2(0.3) == doctest::Approx((bump_phi_d1(0.3 + h) - bump_phi_d1(0.3 - h)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("sharp ring blend endpoints") {
  for (double d : {0.2, 0.1, 0.05}) {
    CHECK(eval_sharp_ring_blend(d, 1.0) == doctest::Approx(1.0));
    CHECK(eval_sharp_ring_blend(d, 1.0 + d) == doctest::Approx(-1.0));
    CHECK(sharp_ring_profile(d, 1.0 + 1e-12).d1 == doctest::Approx(-0.5).epsilon(1e-10));
    CHECK(sharp_ring_profile(d, 1.0 + d).d2 == doctest::Approx(0.5));
    CHECK_THROWS_AS(eval_sharp_ring_blend(d, 0.9), std::domain_error);
  }
}

TEST_CASE("sharp ring is C2 across both junctions") {
  for (double d : {0.2, 0.1, 0.05}) {
    const double eps = 1e-12;
    for (double r0 : {1.0, 1.0 + d}) {
      const auto lo = sharp_ring_profile(d, r0 - eps), hi = sharp_ring_profile(d, r0 + eps);
      CHECK(std::abs(lo.value - hi.value) < 1e-8);
      CHECK(std::abs(lo.d1 - hi.d1) < 1e-6);
      CHECK(std::abs(lo.d2 - hi.d2) <= 1e-6 / (d * d));
    }
  }
}

TEST_CASE("counterexample stripes") {
  // phi(4x) - phi(4x - 1): only depends on x, supported on [0, 1/2]
  const auto f = make("oscillatory_counterexample");
  CHECK(f(Point(0.125, 0.3)) == doctest::Approx(bump_phi(0.5)));
  CHECK(f(Point(0.375, 0.9)) == doctest::Approx(-bump_phi(0.5)));
  CHECK(f(Point(0.75, 0.5)) == 0.0);
  CHECK(f(Point(0.125, 0.1)) == f(Point(0.125, 0.8)));
}

TEST_CASE("raster targets") {
  auto one = std::make_shared<RasterImage>(RasterImage{1, 1, {0.7}});
  const auto f = raster_target(one);
  CHECK(f(Point(0.1, 0.9)) == 0.7);
  CHECK(f(Point(0.5, 0.5)) == 0.7);

  auto two = std::make_shared<RasterImage>(RasterImage{2, 2, {0.1, 0.2, 0.3, 0.4}});
  const auto g = raster_target(two);
  for (std::size_t k = 0; k < 4; ++k) CHECK(g(two->center(k)) == two->samples[k]);
  CHECK(two->center(0).isApprox(Point(0.25, 0.75)));  // row 0 is the top row

  CHECK_THROWS_AS(raster_target(std::make_shared<RasterImage>()), std::invalid_argument);
}

TEST_CASE("rasterize samples pixel centers") {
  const auto img = rasterize(make("cartoon_disk"), 64, 64);
  CHECK(img.size() == 64u * 64u);
  double sum = 0;
  for (double v : img.samples) sum += v;
  CHECK(sum / img.size() == doctest::Approx(std::numbers::pi * 0.09).epsilon(0.03));
}
