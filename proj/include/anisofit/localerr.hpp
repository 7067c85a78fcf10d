// Local polynomial approximation on a single element and the local error
// values e_{m,T}(f)_p that drive every refinement strategy.
//
// Fits are expressed in monomials centered at the element barycenter and
// scaled by its diameter, which keeps the Gram matrix well conditioned on
// thin anisotropic elements.

#pragma once

#include "anisofit/geometry.hpp"
#include "anisofit/targets.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace anisofit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// How the p = infinity error is estimated for m >= 2.
enum class LinfMode : std::uint8_t {
  l2_residual,  // sampled max residual of the L2 projection
  minimax,      // discrete Chebyshev fit on the sample lattice
};

struct FitOptions {
  int gauss_points = 5;    // per axis, intervals and rectangles
  int tri_depth = 0;       // subdivision depth of the triangle rule
  int sharp_tri_depth = 3;  // used when the target requests it; 2 misjudges needles crossing a thin ring
  int lattice = 33;        // L-infinity sampling lattice
  double rcond_floor = 1e-12;
  LinfMode linf_mode = LinfMode::l2_residual;
};

class LocalBasis {
 public:
  LocalBasis(const Element& e, int m);

  int size() const { return size_; }
  int degree_bound() const { return m_; }
  const Point& center() const { return center_; }
  double scale() const { return scale_; }

  void eval(const Point& p, Eigen::Ref<Eigen::VectorXd> out) const;
  double value(const Eigen::VectorXd& coeffs, const Point& p) const;

 private:
  Point center_;
  double scale_;
  int m_;
  bool one_d_;
  int size_;
};

struct LocalFit {
  Element element;
  int m = 1;  // polynomial degree is m - 1
  Eigen::VectorXd coefficients;
  double error = 0.0;
  double p = 2.0;
  bool degenerate = false;

  /// Fitted polynomial at p; the constant coefficient is the barycenter value.
  double value_at(const Point& z) const;
};

/// Orthogonal L2(T) projection onto P_{m-1} (m in 1..3) with quadrature.
LocalFit l2_project(const TargetFunction& f, const Element& t, int m, const FitOptions& opts = {});

/// Mid-range constant over the sample lattice; error is half the sampled oscillation.
LocalFit linf_best_constant(const TargetFunction& f, const Element& t, int lattice = 33);

/// Discrete best L-infinity fit from P_{m-1} over the sample lattice.
LocalFit linf_minimax_fit(const TargetFunction& f, const Element& t, int m, int lattice = 33);

/// Affine interpolant at the triangle vertices; error is the sampled max deviation.
LocalFit interpolate_linear(const TargetFunction& f, const TriElement& t, int lattice = 33);

/// Pixels whose centers lie in the closed element.
std::vector<std::uint32_t> pixels_in(const RasterImage& img, const Element& t);

/// Least squares over the given pixel centers; error is the unnormalized
/// l^p residual. Empty pixel sets give a zero fit with zero error.
LocalFit discrete_project(const RasterImage& img, const Element& t, int m,
                          std::span<const std::uint32_t> pixels, double p = 2.0);
LocalFit discrete_l2_project(const RasterImage& img, const Element& t, int m);

/// The estimator used everywhere for e_{m,T}(f)_p:
///   p = inf: mid-range constant for m = 1, otherwise per opts.linf_mode;
///   p = 2:   L2 projection residual;
///   other p: L^p norm of the L2 projection residual.
/// Raster targets use the discrete projection over `pixels` (all pixels in
/// the element when null).
LocalFit fit_local(const TargetFunction& f, const Element& t, int m, double p,
                   const FitOptions& opts = {}, const std::vector<std::uint32_t>* pixels = nullptr);

double lp_error(const TargetFunction& f, const Element& t, int m, double p, const FitOptions& opts = {});

/// Solves min_c max_k |y_k - phi_k . c| by the dual simplex method; phi is
/// (samples x basis). Returns the optimal coefficients and sets `value`.
Eigen::VectorXd chebyshev_fit(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y, double& value);

}  // namespace anisofit
