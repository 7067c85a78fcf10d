// Target functions: analytic built-ins with derivatives, and pixel rasters.

#pragma once

#include "anisofit/geometry.hpp"

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace anisofit {

/// Grayscale image on the unit square. Row 0 is the top row; pixel (r, c)
/// is centered at ((c + 0.5) / width, 1 - (r + 0.5) / height).
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<double> samples;  // row-major, values in [0, 1]

  double at(int row, int col) const { return samples[static_cast<std::size_t>(row) * width + col]; }
  Point center(std::size_t index) const {
    const auto row = static_cast<int>(index / width), col = static_cast<int>(index % width);
    return {(col + 0.5) / width, 1.0 - (row + 0.5) / height};
  }
  std::size_t size() const { return samples.size(); }
};

struct TargetFunction {
  std::string spec;  // e.g. "sharp_ring:0.2"; echoed into run metadata
  Element domain;
  std::function<double(const Point&)> eval;
  std::function<Eigen::Vector2d(const Point&)> grad;  // empty when not available
  std::function<Eigen::Matrix2d(const Point&)> hess;  // empty when not available
  bool sharp = false;  // requests denser quadrature
  std::shared_ptr<const RasterImage> raster;

  bool is_1d() const { return std::holds_alternative<Interval1D>(domain); }
  bool has_grad() const { return static_cast<bool>(grad); }
  bool has_hess() const { return static_cast<bool>(hess); }
  double operator()(const Point& p) const { return eval(p); }
};

/// Builds one of the analytic targets:
///   power_alpha(alpha)            x^alpha on [0,1]
///   sin_1d(k = 1)                 sin(k pi x) on [0,1]
///   affine2(q0, qx, qy)           on [0,1]^2
///   quadratic_form(a, b, c)       a x^2 + 2 b x y + c y^2 on [0,1]^2
///   cubic_form(a, b, c, d)        a x^3 + b x^2 y + c x y^2 + d y^3 on [0,1]^2
///   sharp_ring(delta)             g_delta(|z|) on [-2,2]^2
///   oscillatory_counterexample    phi(4x) - phi(4x - 1) on [0,1]^2
///   cartoon_disk(cx, cy, r, c)    c * indicator of a disc, on [0,1]^2
///   product_sine(kx = 1, ky = 1)  sin(kx pi x) sin(ky pi y) on [0,1]^2
///   plane_wave(a = 2, b = 3)      sin(a x + b y) on [0,1]^2
/// Throws std::invalid_argument for unknown names or invalid parameters.
TargetFunction builtin(const std::string& name, std::span<const double> params = {});

/// Parses "name" or "name:p1,p2,...". The "pgm:" prefix is handled by the I/O layer.
TargetFunction parse_target(const std::string& spec);

/// C^infinity bump exp(-1 / (t (1 - t))) on (0, 1), zero elsewhere.
double bump_phi(double t);
double bump_phi_d1(double t);
double bump_phi_d2(double t);

/// Value and first two derivatives of the radial profile g_delta.
struct RadialJet {
  double value, d1, d2;
};
RadialJet sharp_ring_profile(double delta, double r);

/// Quintic blend of g_delta on [1, 1 + delta]; throws std::domain_error outside.
double eval_sharp_ring_blend(double delta, double r);

/// Nearest-pixel-center evaluation of an image on the unit square.
TargetFunction raster_target(std::shared_ptr<const RasterImage> img, std::string spec = "raster");

/// Samples a 2D target at pixel centers of a width x height grid over its
/// domain, clamping values to [0, 1].
RasterImage rasterize(const TargetFunction& f, int width, int height);

}  // namespace anisofit
