#include "anisofit/localerr.hpp"

#include "anisofit/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace anisofit {

namespace {

Point center_of(const Element& e) {
  if (const auto* in = std::get_if<Interval1D>(&e)) return {in->mid(), 0.0};
  if (const auto* r = std::get_if<RectElement>(&e)) return r->center();
  return std::get<TriElement>(e).barycenter();
}

// `kinked` asks for a finer rule when integrating |f - pi|^p, whose
// integrand is not smooth where the residual changes sign.
QuadratureRule rule_for(const Element& e, int m, bool sharp, const FitOptions& o, bool kinked = false) {
  int n = std::max(o.gauss_points, m + 1);
  if (sharp) n *= 2;
  if (kinked) n *= 4;
  if (const auto* in = std::get_if<Interval1D>(&e)) return interval_rule(*in, n);
  if (const auto* r = std::get_if<RectElement>(&e)) return rect_rule(*r, n);
  int depth = o.tri_depth;
  if (m >= 3) depth = std::max(depth, 1);
  if (sharp) depth = std::max(depth, o.sharp_tri_depth);
  if (kinked) depth += 2;
  return triangle_rule(std::get<TriElement>(e), depth);
}

// Residuals at round-off level relative to the data are exact reproduction;
// reporting them as zero keeps ties between candidates deterministic.
double snap(double err, double scale) { return err <= 1e-12 * scale ? 0.0 : err; }

// Weighted least squares in the local basis. Falls back to the weighted mean
// when the Gram matrix is numerically singular.
struct Solved {
  Eigen::VectorXd coeffs;
  bool degenerate = false;
};

Solved solve_normal(const Eigen::MatrixXd& phi, const Eigen::VectorXd& w, const Eigen::VectorXd& y,
                    double rcond_floor) {
  const Eigen::Index nb = phi.cols();
  const Eigen::MatrixXd gram = phi.transpose() * w.asDiagonal() * phi;
  const Eigen::VectorXd rhs = phi.transpose() * w.cwiseProduct(y);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  Solved out;
  if (nb > 1 && (!(lmax > 0) || lmin / lmax < rcond_floor)) {
    out.degenerate = true;
  } else if (lmax > 0) {
    out.coeffs = es.eigenvectors() *
                 (es.eigenvalues().cwiseInverse().asDiagonal() * (es.eigenvectors().transpose() * rhs));
    return out;
  } else {
    out.degenerate = true;
  }
  out.coeffs = Eigen::VectorXd::Zero(nb);
  const double wsum = w.sum();
  if (wsum > 0) out.coeffs(0) = w.dot(y) / wsum;
  return out;
}

double residual_norm(const Eigen::VectorXd& r, const Eigen::VectorXd* w, double p) {
  if (std::isinf(p)) return r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
  double s = 0.0;
  for (Eigen::Index k = 0; k < r.size(); ++k) {
    const double a = std::abs(r(k));
    const double t = p == 2.0 ? a * a : std::pow(a, p);
    s += w ? (*w)(k) * t : t;
  }
  return p == 2.0 ? std::sqrt(s) : std::pow(s, 1.0 / p);
}

Eigen::MatrixXd design(const LocalBasis& b, const std::vector<Point>& pts) {
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(pts.size()), b.size());
  Eigen::VectorXd row(b.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    b.eval(pts[k], row);
    phi.row(static_cast<Eigen::Index>(k)) = row.transpose();
  }
  return phi;
}

Eigen::VectorXd sample(const TargetFunction& f, const std::vector<Point>& pts) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) y(static_cast<Eigen::Index>(k)) = f(pts[k]);
  return y;
}

void check_m(int m) {
  if (m < 1 || m > 3) throw std::invalid_argument("local fits support m = 1, 2, 3");
}

}  // namespace

// ------------------------------------------------------------------ basis

LocalBasis::LocalBasis(const Element& e, int m)
    : center_(center_of(e)), scale_(measures(e).diameter), m_(m),
      one_d_(std::holds_alternative<Interval1D>(e)) {
  check_m(m);
  size_ = one_d_ ? m : m * (m + 1) / 2;
  if (!(scale_ > 0)) scale_ = 1.0;
}

// order: 1, u, v, u^2, uv, v^2 (1D: 1, u, u^2)
void LocalBasis::eval(const Point& p, Eigen::Ref<Eigen::VectorXd> out) const {
  const double u = (p.x() - center_.x()) / scale_;
  if (one_d_) {
    double t = 1.0;
    for (int k = 0; k < m_; ++k, t *= u) out(k) = t;
    return;
  }
  const double v = (p.y() - center_.y()) / scale_;
  out(0) = 1.0;
  if (m_ >= 2) {
    out(1) = u;
    out(2) = v;
  }
  if (m_ >= 3) {
    out(3) = u * u;
    out(4) = u * v;
    out(5) = v * v;
  }
}

double LocalBasis::value(const Eigen::VectorXd& coeffs, const Point& p) const {
  Eigen::VectorXd row(size_);
  eval(p, row);
  return row.dot(coeffs);
}

double LocalFit::value_at(const Point& z) const {
  if (coefficients.size() == 0) return 0.0;
  return LocalBasis(element, m).value(coefficients, z);
}

// ------------------------------------------------------------- estimators

LocalFit l2_project(const TargetFunction& f, const Element& t, int m, const FitOptions& opts) {
  check_m(m);
  const LocalBasis basis(t, m);
  const auto rule = rule_for(t, m, f.sharp, opts);
  const Eigen::MatrixXd phi = design(basis, rule.nodes);
  const Eigen::VectorXd y = sample(f, rule.nodes);
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(rule.weights.data(),
                                                              static_cast<Eigen::Index>(rule.weights.size()));
  auto s = solve_normal(phi, w, y, opts.rcond_floor);
  LocalFit fit{t, m, std::move(s.coeffs), 0.0, 2.0, s.degenerate};
  fit.error = snap(residual_norm(y - phi * fit.coefficients, &w, 2.0), residual_norm(y, &w, 2.0));
  return fit;
}

LocalFit linf_best_constant(const TargetFunction& f, const Element& t, int lattice) {
  double lo = kInf, hi = -kInf;
  for (const auto& z : sample_lattice(t, lattice)) {
    const double v = f(z);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  LocalFit fit{t, 1, Eigen::VectorXd::Constant(1, (hi + lo) / 2), (hi - lo) / 2, kInf, false};
  return fit;
}

LocalFit linf_minimax_fit(const TargetFunction& f, const Element& t, int m, int lattice) {
  check_m(m);
  if (m == 1) return linf_best_constant(f, t, lattice);
  const LocalBasis basis(t, m);
  const auto pts = sample_lattice(t, lattice);
  const Eigen::MatrixXd phi = design(basis, pts);
  const Eigen::VectorXd y = sample(f, pts);
  LocalFit fit{t, m, {}, 0.0, kInf, false};
  try {
    double value = 0.0;
    fit.coefficients = chebyshev_fit(phi, y, value);
    fit.error = snap((y - phi * fit.coefficients).cwiseAbs().maxCoeff(), y.cwiseAbs().maxCoeff());
  } catch (const std::runtime_error&) {
    auto c = linf_best_constant(f, t, lattice);
    fit.coefficients = Eigen::VectorXd::Zero(basis.size());
    fit.coefficients(0) = c.coefficients(0);
    fit.error = c.error;
    fit.degenerate = true;
  }
  return fit;
}

LocalFit interpolate_linear(const TargetFunction& f, const TriElement& t, int lattice) {
  const Element e = t;
  const LocalBasis basis(e, 2);
  Eigen::Matrix3d a;
  Eigen::Vector3d y;
  Eigen::VectorXd row(3);
  for (int i = 0; i < 3; ++i) {
    basis.eval(t.v[i], row);
    a.row(i) = row.transpose();
    y(i) = f(t.v[i]);
  }
  LocalFit fit{e, 2, a.partialPivLu().solve(y), 0.0, kInf, false};
  double err = 0.0, scale = 0.0;
  for (const auto& z : sample_lattice(e, lattice)) {
    const double v = f(z);
    err = std::max(err, std::abs(v - basis.value(fit.coefficients, z)));
    scale = std::max(scale, std::abs(v));
  }
  fit.error = snap(err, scale);
  return fit;
}

// ------------------------------------------------------------------ raster

std::vector<std::uint32_t> pixels_in(const RasterImage& img, const Element& t) {
  std::vector<std::uint32_t> out;
  if (img.width <= 0 || img.height <= 0) return out;
  double x0, x1, y0, y1;
  if (const auto* r = std::get_if<RectElement>(&t)) {
    x0 = r->ix.lo, x1 = r->ix.hi, y0 = r->iy.lo, y1 = r->iy.hi;
  } else if (const auto* tri = std::get_if<TriElement>(&t)) {
    x0 = std::min({tri->v[0].x(), tri->v[1].x(), tri->v[2].x()});
    x1 = std::max({tri->v[0].x(), tri->v[1].x(), tri->v[2].x()});
    y0 = std::min({tri->v[0].y(), tri->v[1].y(), tri->v[2].y()});
    y1 = std::max({tri->v[0].y(), tri->v[1].y(), tri->v[2].y()});
  } else {
    throw std::invalid_argument("pixels_in: raster targets are two-dimensional");
  }
  // column c has center (c + .5)/W; row r has center 1 - (r + .5)/H
  const int c0 = std::max(0, static_cast<int>(std::floor(x0 * img.width - 0.5)));
  const int c1 = std::min(img.width - 1, static_cast<int>(std::ceil(x1 * img.width - 0.5)));
  const int r0 = std::max(0, static_cast<int>(std::floor((1.0 - y1) * img.height - 0.5)));
  const int r1 = std::min(img.height - 1, static_cast<int>(std::ceil((1.0 - y0) * img.height - 0.5)));
  const auto* tri = std::get_if<TriElement>(&t);
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) {
      const auto idx = static_cast<std::uint32_t>(r * img.width + c);
      const Point z = img.center(idx);
      const bool in = tri ? contains(*tri, z) : (z.x() >= x0 && z.x() <= x1 && z.y() >= y0 && z.y() <= y1);
      if (in) out.push_back(idx);
    }
  return out;
}

LocalFit discrete_project(const RasterImage& img, const Element& t, int m,
                          std::span<const std::uint32_t> pixels, double p) {
  check_m(m);
  const LocalBasis basis(t, m);
  LocalFit fit{t, m, Eigen::VectorXd::Zero(basis.size()), 0.0, p, false};
  if (pixels.empty()) return fit;
  const auto n = static_cast<Eigen::Index>(pixels.size());
  Eigen::MatrixXd phi(n, basis.size());
  Eigen::VectorXd y(n), row(basis.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    basis.eval(img.center(pixels[k]), row);
    phi.row(k) = row.transpose();
    y(k) = img.samples[pixels[k]];
  }
  // too few or collinear pixels: mean value, same rule as the continuous fit
  auto s = solve_normal(phi, Eigen::VectorXd::Ones(n), y, 1e-12);
  fit.coefficients = std::move(s.coeffs);
  fit.degenerate = s.degenerate;
  fit.error = snap(residual_norm(y - phi * fit.coefficients, nullptr, p), residual_norm(y, nullptr, p));
  return fit;
}

LocalFit discrete_l2_project(const RasterImage& img, const Element& t, int m) {
  const auto px = pixels_in(img, t);
  return discrete_project(img, t, m, px, 2.0);
}

// ------------------------------------------------------------ dispatcher

LocalFit fit_local(const TargetFunction& f, const Element& t, int m, double p, const FitOptions& opts,
                   const std::vector<std::uint32_t>* pixels) {
  check_m(m);
  if (!(p >= 1.0)) throw std::invalid_argument("fit_local: p must lie in [1, inf]");
  if (f.raster) {
    if (pixels) return discrete_project(*f.raster, t, m, *pixels, p);
    const auto px = pixels_in(*f.raster, t);
    return discrete_project(*f.raster, t, m, px, p);
  }
  if (std::isinf(p)) {
    if (m == 1) return linf_best_constant(f, t, opts.lattice);
    if (opts.linf_mode == LinfMode::minimax) return linf_minimax_fit(f, t, m, opts.lattice);
    auto fit = l2_project(f, t, m, opts);
    const LocalBasis basis(t, m);
    double err = 0.0, scale = 0.0;
    for (const auto& z : sample_lattice(t, opts.lattice)) {
      const double v = f(z);
      err = std::max(err, std::abs(v - basis.value(fit.coefficients, z)));
      scale = std::max(scale, std::abs(v));
    }
    fit.error = snap(err, scale);
    fit.p = p;
    return fit;
  }
  auto fit = l2_project(f, t, m, opts);
  if (p != 2.0) {
    const LocalBasis basis(t, m);
    const auto rule = rule_for(t, m, f.sharp, opts, true);
    const Eigen::MatrixXd phi = design(basis, rule.nodes);
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(rule.weights.data(),
                                                                static_cast<Eigen::Index>(rule.weights.size()));
    const Eigen::VectorXd y = sample(f, rule.nodes);
    fit.error = snap(residual_norm(y - phi * fit.coefficients, &w, p), residual_norm(y, &w, p));
    fit.p = p;
  }
  return fit;
}

double lp_error(const TargetFunction& f, const Element& t, int m, double p, const FitOptions& opts) {
  return fit_local(f, t, m, p, opts).error;
}

// ------------------------------------------------------- Chebyshev via LP
//
// Dual of  min t  s.t. |y_k - phi_k c| <= t:
//   max  sum_k y_k (u_k - v_k)
//   s.t. sum_k (u_k - v_k) phi_k = 0,  sum_k (u_k + v_k) + s = 1,  u, v, s >= 0.
// The simplex multipliers of the optimal basis are (c, t).

Eigen::VectorXd chebyshev_fit(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y, double& value) {
  const Eigen::Index K = phi.rows(), nb = phi.cols(), rows = nb + 1;
  if (K < nb) throw std::runtime_error("chebyshev_fit: fewer samples than basis functions");
  const double yscale = y.cwiseAbs().maxCoeff();
  if (!(yscale > 0)) {
    value = 0.0;
    return Eigen::VectorXd::Zero(nb);
  }
  const Eigen::VectorXd ys = y / yscale;

  // column j < K: u_j; K <= j < 2K: v_{j-K}; j = 2K: s
  const Eigen::Index ncols = 2 * K + 1;
  auto column = [&](Eigen::Index j, Eigen::Ref<Eigen::VectorXd> a) {
    if (j == 2 * K) {
      a.setZero();
      a(nb) = 1.0;
      return;
    }
    const Eigen::Index k = j < K ? j : j - K;
    const double sg = j < K ? 1.0 : -1.0;
    a.head(nb) = sg * phi.row(k).transpose();
    a(nb) = 1.0;
  };
  auto cost = [&](Eigen::Index j) {
    if (j == 2 * K) return 0.0;
    return j < K ? ys(j) : -ys(j - K);
  };

  // initial basis: s plus nb well-spread samples (pivoted QR on phi^T)
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(phi.transpose());
  if (qr.rank() < nb) throw std::runtime_error("chebyshev_fit: sample set is not unisolvent");
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(rows));
  for (Eigen::Index i = 0; i < nb; ++i) basis[i] = qr.colsPermutation().indices()(i);
  basis[nb] = 2 * K;

  Eigen::MatrixXd bmat(rows, rows);
  Eigen::VectorXd a(rows), xb(rows), cb(rows), pi(rows), dir(rows);
  const double tol = 1e-11;
  int degenerate_run = 0;
  for (int iter = 0; iter < 50 * static_cast<int>(ncols); ++iter) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      column(basis[i], bmat.col(i));
      cb(i) = cost(basis[i]);
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
    rhs(nb) = 1.0;
    xb = lu.solve(rhs);
    pi = lu.transpose().solve(cb);

    // pricing: Dantzig, or Bland after a run of degenerate pivots
    const bool bland = degenerate_run > 20;
    Eigen::Index enter = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < ncols; ++j) {
      column(j, a);
      const double d = cost(j) - pi.dot(a);
      if (d > best) {
        enter = j;
        if (bland) break;
        best = d;
      }
    }
    if (enter < 0) {
      value = pi(nb) * yscale;
      return pi.head(nb) * yscale;
    }
    column(enter, a);
    dir = lu.solve(a);
    Eigen::Index leave = -1;
    double ratio = kInf;
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (dir(i) <= 1e-12) continue;
      const double r = std::max(xb(i), 0.0) / dir(i);
      if (r < ratio - 1e-14 || (r <= ratio + 1e-14 && leave >= 0 && basis[i] < basis[leave])) {
        ratio = std::min(ratio, r);
        leave = i;
      }
    }
    if (leave < 0) throw std::runtime_error("chebyshev_fit: unbounded dual (internal error)");
    degenerate_run = ratio <= 1e-14 ? degenerate_run + 1 : 0;
    basis[leave] = enter;
  }
  throw std::runtime_error("chebyshev_fit: iteration limit reached");
}

}  // namespace anisofit
