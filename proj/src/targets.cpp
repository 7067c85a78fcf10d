#include "anisofit/targets.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace anisofit {

namespace {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

RectElement unit_square() { return RectElement{{0.0, 1.0, std::nullopt}, {0.0, 1.0, std::nullopt}}; }

double param_or(std::span<const double> p, std::size_t i, double fallback) {
  return i < p.size() ? p[i] : fallback;
}

void require_count(const std::string& name, std::span<const double> p, std::size_t lo,
                   std::size_t hi) {
  if (p.size() < lo || p.size() > hi)
    throw std::invalid_argument("target '" + name + "': expected " + std::to_string(lo) +
                                (lo == hi ? "" : ".." + std::to_string(hi)) + " parameters, got " +
                                std::to_string(p.size()));
}

std::string format_spec(const std::string& name, std::span<const double> p) {
  std::string s = name;
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::array<char, 32> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), p[i]);
    s += (i == 0 ? ':' : ',');
    s.append(buf.data(), res.ptr);
  }
  return s;
}

// Polynomial coefficients (in t = (r - 1) / delta) of the C^2 quintic blend.
std::array<double, 6> blend_coefficients(double delta) {
  // Hermite data: value, d/dt, d2/dt2 at t = 0 and t = 1
  const double p0 = 1.0, v0 = -0.5 * delta, a0 = -0.5 * delta * delta;
  const double p1 = -1.0, v1 = -0.5 * delta, a1 = 0.5 * delta * delta;
  // quintic Hermite basis expressed in monomials t^0..t^5
  constexpr std::array<std::array<double, 6>, 6> basis{{
      {1, 0, 0, -10, 15, -6},
      {0, 1, 0, -6, 8, -3},
      {0, 0, 0.5, -1.5, 1.5, -0.5},
      {0, 0, 0, 10, -15, 6},
      {0, 0, 0, -4, 7, -3},
      {0, 0, 0, 0.5, -1, 0.5},
  }};
  const std::array<double, 6> data{p0, v0, a0, p1, v1, a1};
  std::array<double, 6> c{};
  for (int b = 0; b < 6; ++b)
    for (int k = 0; k < 6; ++k) c[k] += data[b] * basis[b][k];
  return c;
}

RadialJet blend_jet(double delta, double r) {
  const auto c = blend_coefficients(delta);
  const double t = (r - 1.0) / delta;
  double v = 0, d1 = 0, d2 = 0;
  for (int k = 5; k >= 0; --k) v = v * t + c[k];
  for (int k = 5; k >= 1; --k) d1 = d1 * t + k * c[k];
  for (int k = 5; k >= 2; --k) d2 = d2 * t + k * (k - 1) * c[k];
  return {v, d1 / delta, d2 / (delta * delta)};
}

TargetFunction make_2d(std::string spec, std::function<double(const Point&)> f,
                       std::function<Vec2(const Point&)> g, std::function<Mat2(const Point&)> h,
                       Element domain = unit_square()) {
  TargetFunction t;
  t.spec = std::move(spec);
  t.domain = std::move(domain);
  t.eval = std::move(f);
  t.grad = std::move(g);
  t.hess = std::move(h);
  return t;
}

}  // namespace

double bump_phi(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return std::exp(-1.0 / (t * (1.0 - t)));
}

double bump_phi_d1(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double u = t * (1.0 - t), du = 1.0 - 2.0 * t;
  return bump_phi(t) * du / (u * u);
}

double bump_phi_d2(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double u = t * (1.0 - t), du = 1.0 - 2.0 * t;
  const double u2 = u * u;
  return bump_phi(t) * (du * du / (u2 * u2) - 2.0 / u2 - 2.0 * du * du / (u2 * u));
}

RadialJet sharp_ring_profile(double delta, double r) {
  if (r <= 1.0) return {(5.0 - r * r) / 4.0, -r / 2.0, -0.5};
  if (r < 1.0 + delta) return blend_jet(delta, r);
  const double s = r - 1.0 - delta;
  return {-(5.0 - (1.0 - s) * (1.0 - s)) / 4.0, -(1.0 - s) / 2.0, 0.5};
}

double eval_sharp_ring_blend(double delta, double r) {
  if (!(delta > 0.0)) throw std::domain_error("sharp ring blend: delta must be positive");
  if (r < 1.0 || r > 1.0 + delta)
    throw std::domain_error("sharp ring blend: r outside [1, 1 + delta]");
  return blend_jet(delta, r).value;
}

TargetFunction builtin(const std::string& name, std::span<const double> p) {
  const std::string spec = format_spec(name, p);
  constexpr double pi = std::numbers::pi;

  if (name == "power_alpha") {
    require_count(name, p, 1, 1);
    const double a = p[0];
    if (!(a > 0.0)) throw std::invalid_argument("power_alpha: alpha must be positive");
    TargetFunction t;
    t.spec = spec;
    t.domain = Interval1D{0.0, 1.0, DyadicId{0, 0}};
    t.eval = [a](const Point& z) { return std::pow(z.x(), a); };
    t.grad = [a](const Point& z) { return Vec2(a * std::pow(z.x(), a - 1.0), 0.0); };
    t.hess = [a](const Point& z) {
      Mat2 h = Mat2::Zero();
      h(0, 0) = a * (a - 1.0) * std::pow(z.x(), a - 2.0);
      return h;
    };
    return t;
  }
  if (name == "sin_1d") {
    require_count(name, p, 0, 1);
    const double w = param_or(p, 0, 1.0) * pi;
    TargetFunction t;
    t.spec = spec;
    t.domain = Interval1D{0.0, 1.0, DyadicId{0, 0}};
    t.eval = [w](const Point& z) { return std::sin(w * z.x()); };
    t.grad = [w](const Point& z) { return Vec2(w * std::cos(w * z.x()), 0.0); };
    t.hess = [w](const Point& z) {
      Mat2 h = Mat2::Zero();
      h(0, 0) = -w * w * std::sin(w * z.x());
      return h;
    };
    return t;
  }
  if (name == "affine2") {
    require_count(name, p, 3, 3);
    const double q0 = p[0], qx = p[1], qy = p[2];
    return make_2d(
        spec, [=](const Point& z) { return q0 + qx * z.x() + qy * z.y(); },
        [=](const Point&) { return Vec2(qx, qy); }, [](const Point&) { return Mat2::Zero().eval(); });
  }
  if (name == "quadratic_form") {
    require_count(name, p, 3, 3);
    const double a = p[0], b = p[1], c = p[2];
    return make_2d(
        spec,
        [=](const Point& z) { return a * z.x() * z.x() + 2 * b * z.x() * z.y() + c * z.y() * z.y(); },
        [=](const Point& z) { return Vec2(2 * a * z.x() + 2 * b * z.y(), 2 * b * z.x() + 2 * c * z.y()); },
        [=](const Point&) { return (Mat2() << 2 * a, 2 * b, 2 * b, 2 * c).finished(); });
  }
  if (name == "cubic_form") {
    require_count(name, p, 4, 4);
    const double a = p[0], b = p[1], c = p[2], d = p[3];
    return make_2d(
        spec,
        [=](const Point& z) {
          const double x = z.x(), y = z.y();
          return a * x * x * x + b * x * x * y + c * x * y * y + d * y * y * y;
        },
        [=](const Point& z) {
          const double x = z.x(), y = z.y();
          return Vec2(3 * a * x * x + 2 * b * x * y + c * y * y, b * x * x + 2 * c * x * y + 3 * d * y * y);
        },
        [=](const Point& z) {
          const double x = z.x(), y = z.y();
          const double xx = 6 * a * x + 2 * b * y, xy = 2 * b * x + 2 * c * y, yy = 2 * c * x + 6 * d * y;
          return (Mat2() << xx, xy, xy, yy).finished();
        });
  }
  if (name == "sharp_ring") {
    require_count(name, p, 1, 1);
    const double delta = p[0];
    if (!(delta > 0.0)) throw std::invalid_argument("sharp_ring: delta must be positive");
    auto t = make_2d(
        spec, [=](const Point& z) { return sharp_ring_profile(delta, z.norm()).value; },
        [=](const Point& z) {
          const double r = z.norm();
          if (r <= 1.0) return Vec2(-z / 2.0);
          return Vec2(sharp_ring_profile(delta, r).d1 * z / r);
        },
        [=](const Point& z) {
          const double r = z.norm();
          if (r <= 1.0) return Mat2(-0.5 * Mat2::Identity());
          const auto g = sharp_ring_profile(delta, r);
          const Vec2 u = z / r;
          const Mat2 uu = u * u.transpose();
          return Mat2(g.d2 * uu + (g.d1 / r) * (Mat2::Identity() - uu));
        },
        RectElement{{-2.0, 2.0, std::nullopt}, {-2.0, 2.0, std::nullopt}});
    t.sharp = true;
    return t;
  }
  if (name == "oscillatory_counterexample") {
    require_count(name, p, 0, 0);
    return make_2d(
        spec, [](const Point& z) { return bump_phi(4 * z.x()) - bump_phi(4 * z.x() - 1); },
        [](const Point& z) {
          return Vec2(4 * (bump_phi_d1(4 * z.x()) - bump_phi_d1(4 * z.x() - 1)), 0.0);
        },
        [](const Point& z) {
          Mat2 h = Mat2::Zero();
          h(0, 0) = 16 * (bump_phi_d2(4 * z.x()) - bump_phi_d2(4 * z.x() - 1));
          return h;
        });
  }
  if (name == "cartoon_disk") {
    require_count(name, p, 0, 4);
    const double cx = param_or(p, 0, 0.5), cy = param_or(p, 1, 0.5);
    const double rad = param_or(p, 2, 0.3), contrast = param_or(p, 3, 1.0);
    if (!(rad > 0.0)) throw std::invalid_argument("cartoon_disk: radius must be positive");
    TargetFunction t;
    t.spec = spec;
    t.domain = unit_square();
    t.eval = [=](const Point& z) {
      const double dx = z.x() - cx, dy = z.y() - cy;
      return dx * dx + dy * dy <= rad * rad ? contrast : 0.0;
    };
    t.sharp = true;
    return t;
  }
  if (name == "product_sine") {
    require_count(name, p, 0, 2);
    const double wx = param_or(p, 0, 1.0) * pi, wy = param_or(p, 1, 1.0) * pi;
    return make_2d(
        spec, [=](const Point& z) { return std::sin(wx * z.x()) * std::sin(wy * z.y()); },
        [=](const Point& z) {
          return Vec2(wx * std::cos(wx * z.x()) * std::sin(wy * z.y()),
                      wy * std::sin(wx * z.x()) * std::cos(wy * z.y()));
        },
        [=](const Point& z) {
          const double sx = std::sin(wx * z.x()), cx = std::cos(wx * z.x());
          const double sy = std::sin(wy * z.y()), cy = std::cos(wy * z.y());
          const double xy = wx * wy * cx * cy;
          return (Mat2() << -wx * wx * sx * sy, xy, xy, -wy * wy * sx * sy).finished();
        });
  }
  if (name == "plane_wave") {
    require_count(name, p, 0, 2);
    const double a = param_or(p, 0, 2.0), b = param_or(p, 1, 3.0);
    return make_2d(
        spec, [=](const Point& z) { return std::sin(a * z.x() + b * z.y()); },
        [=](const Point& z) { return Vec2(Vec2(a, b) * std::cos(a * z.x() + b * z.y())); },
        [=](const Point& z) {
          const double s = -std::sin(a * z.x() + b * z.y());
          return (Mat2() << a * a * s, a * b * s, a * b * s, b * b * s).finished();
        });
  }
  throw std::invalid_argument("unknown target '" + name + "'");
}

TargetFunction parse_target(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  std::vector<double> params;
  if (colon != std::string::npos) {
    std::string rest = spec.substr(colon + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const auto comma = rest.find(',', pos);
      const std::string tok = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      double v = 0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw std::invalid_argument("target '" + spec + "': bad parameter '" + tok + "'");
      params.push_back(v);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  auto t = builtin(name, params);
  t.spec = spec;
  return t;
}

TargetFunction raster_target(std::shared_ptr<const RasterImage> img, std::string spec) {
  if (!img || img->width <= 0 || img->height <= 0 || img->samples.empty())
    throw std::invalid_argument("raster_target: empty image");
  if (img->samples.size() != static_cast<std::size_t>(img->width) * img->height)
    throw std::invalid_argument("raster_target: sample count does not match dimensions");
  TargetFunction t;
  t.spec = std::move(spec);
  t.domain = unit_square();
  t.raster = img;
  t.eval = [img](const Point& z) {
    const int col = std::clamp(static_cast<int>(std::floor(z.x() * img->width)), 0, img->width - 1);
    const int row = std::clamp(static_cast<int>(std::floor((1.0 - z.y()) * img->height)), 0,
                               img->height - 1);
    return img->at(row, col);
  };
  return t;
}

RasterImage rasterize(const TargetFunction& f, int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("rasterize: empty size");
  const auto* dom = std::get_if<RectElement>(&f.domain);
  if (!dom) throw std::invalid_argument("rasterize: target must have a rectangular domain");
  RasterImage img{width, height, {}};
  img.samples.resize(static_cast<std::size_t>(width) * height);
  for (std::size_t k = 0; k < img.samples.size(); ++k) {
    const Point u = img.center(k);
    const Point z{dom->ix.lo + u.x() * dom->width(), dom->iy.lo + u.y() * dom->height()};
    img.samples[k] = std::clamp(f.eval(z), 0.0, 1.0);
  }
  return img;
}

}  // namespace anisofit
