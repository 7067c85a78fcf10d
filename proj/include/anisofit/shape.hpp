// Shape functions of homogeneous polynomials, optimal element shapes,
// adaptation measures and the integral constants that govern convergence.

#pragma once

#include "anisofit/geometry.hpp"
#include "anisofit/localerr.hpp"
#include "anisofit/targets.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace anisofit {

template <typename Scalar>
struct LinearForm2 {
  Scalar qx{0}, qy{0};
};

/// a x^2 + 2 b x y + c y^2
template <typename Scalar>
struct QuadForm2 {
  Scalar a{0}, b{0}, c{0};

  Scalar det() const { return a * c - b * b; }
  Scalar operator()(const Point2<Scalar>& z) const {
    return a * z.x() * z.x() + 2 * b * z.x() * z.y() + c * z.y() * z.y();
  }
  Eigen::Matrix<Scalar, 2, 2> matrix() const {
    Eigen::Matrix<Scalar, 2, 2> m;
    m << a, b, b, c;
    return m;
  }
  /// q o phi for a linear map phi.
  QuadForm2 compose(const Eigen::Matrix<Scalar, 2, 2>& phi) const {
    const Eigen::Matrix<Scalar, 2, 2> m = phi.transpose() * matrix() * phi;
    return {m(0, 0), m(0, 1), m(1, 1)};
  }
};

/// a x^3 + b x^2 y + c x y^2 + d y^3
template <typename Scalar>
struct CubicForm2 {
  Scalar a{0}, b{0}, c{0}, d{0};

  Scalar operator()(const Point2<Scalar>& z) const {
    const Scalar x = z.x(), y = z.y();
    return ((a * x + b * y) * x + c * y * y) * x + d * y * y * y;
  }
};

template <typename Scalar>
Scalar disc(const CubicForm2<Scalar>& q) {
  const Scalar a = q.a, b = q.b, c = q.c, d = q.d;
  return b * b * c * c - 4 * a * c * c * c - 4 * b * b * b * d + 18 * a * b * c * d - 27 * a * a * d * d;
}

/// (2 / ((p+1)(p+2)))^{1/p}, with the limit 1 at p = inf.
template <typename Scalar>
Scalar rect_constant(Scalar p) {
  using std::pow;
  if (std::isinf(static_cast<double>(p))) return Scalar(1);
  return pow(Scalar(2) / ((p + 1) * (p + 2)), Scalar(1) / p);
}

template <typename Scalar>
Scalar K_rect(Scalar p, const LinearForm2<Scalar>& q) {
  using std::abs;
  using std::sqrt;
  return rect_constant(p) * sqrt(abs(q.qx * q.qy));
}

/// 1/tau = 1/p + m/2 (area exponent of the best error on one element).
inline double inv_tau(double p, double m) { return (std::isinf(p) ? 0.0 : 1.0 / p) + m / 2.0; }

/// Area-`area` rectangle centered at the origin with |I|/|J| = |qy|/|qx|.
/// Throws std::domain_error when qx qy = 0 (the optimum is unbounded).
RectElement optimal_rect(const LinearForm2<double>& q, double area);

/// |log2(|I||qx| / (|J||qy|))|, +inf for degenerate q.
double a_measure(const LinearForm2<double>& q, const RectElement& t);

// ------------------------------------------------------------------ kappa

struct KappaEntry {
  int m = 2;        // 2: quadratic forms, 3: cubic forms
  double p = 2.0;   // 2 or inf
  int sign = 1;     // sign of det (m = 2) or disc (m = 3)
  double value = 0.0;
  std::string settings_hash;
};

class KappaTable {
 public:
  KappaTable() = default;
  explicit KappaTable(std::vector<KappaEntry> entries) : entries_(std::move(entries)) {}

  /// Throws std::out_of_range when no entry exists.
  double get(int m, double p, int sign) const;
  bool has(int m, double p, int sign) const;
  const std::vector<KappaEntry>& entries() const { return entries_; }
  void set(KappaEntry e);

 private:
  std::vector<KappaEntry> entries_;
};

/// Parses `kappa p sign value hash` / `kappa3 ...` lines; '#' starts a comment.
KappaTable read_kappa_table(const std::string& path);
KappaTable parse_kappa_table(const std::string& text);
std::string format_kappa_table(const KappaTable& t);

/// Table shipped with the library (data/kappa.txt), loaded on first use.
const KappaTable& default_kappa_table();

/// kappa^{sign det} sqrt|det|; exactly 0 for det = 0.
double K2(double p, const QuadForm2<double>& q, const KappaTable& kappa = default_kappa_table());
double K3(double p, const CubicForm2<double>& q, const KappaTable& kappa = default_kappa_table());

// ------------------------------------------------------------- the oracle

struct OracleOptions {
  int lattice = 33;        // p = inf: discrete minimax on this triangle lattice
  int max_iterations = 400;
  double size_tol = 1e-7;  // simplex size at convergence
  int starts = 12;         // rotations tried per start shape

  std::string hash() const;  // FNV-1a of the canonical settings line
};

struct OracleResult {
  double value = 0.0;  // min over unit-area triangles of e_{m,T}(q)_p
  TriElement best;
  bool converged = false;
  int evaluations = 0;
};

/// Local error of a homogeneous form on T as used by the oracle: L2
/// projection for p = 2, discrete minimax for p = inf, L2-fit residual else.
double form_error(const TargetFunction& q, const TriElement& t, int m, double p, const OracleOptions& o = {});

/// Brute-force shape function: Nelder-Mead over unit-area triangles
/// parameterized by (log edge, apex offset, rotation).
OracleResult shape_oracle(const TargetFunction& q, int m, double p, const OracleOptions& o = {});
OracleResult shape_oracle(const QuadForm2<double>& q, double p, const OracleOptions& o = {});

/// kappa for x^2 + sign y^2 (m = 2) or the cubic normal forms x^3 - 3 x y^2
/// (disc > 0) and x^3 + y^3 (disc < 0) for m = 3.
double kappa_oracle(double p, int sign, int m = 2, const OracleOptions& o = {});
KappaTable compute_kappa_table(const OracleOptions& o = {});

// ------------------------------------------------------------- adaptation

/// e_{2,T}(q)_p / (|T|^{1/tau} K_{2,p}(q)), 1/tau = 1/p + 1. Throws on det q = 0.
double sigma_adaptation(const QuadForm2<double>& q, const TriElement& t, double p,
                        const KappaTable& kappa = default_kappa_table(), const OracleOptions& o = {});

// ------------------------------------------------------ integral constants

enum class ConstantKind { U, I, A_tri, A_rect };

/// Global constants of a smooth target over its (rectangular) domain:
///   U      = || |d2f| ||_{L^p}
///   I      = || |d2f| ||_{L^tau},          1/tau = 1/p + 1
///   A_tri  = || sqrt|det d2f| ||_{L^tau},  1/tau = 1/p + 1
///   A_rect = || sqrt|fx fy| ||_{L^tau},    1/tau = 1/p + 1/2
/// |d2f| is the spectral norm. Quasi-norms for tau < 1.
double theoretical_constants(const TargetFunction& f, ConstantKind which, double p, int cells = 256);

/// (int g^tau)^{1/tau} of a pointwise quantity over a rectangle (composite Gauss).
double integral_quasi_norm(const std::function<double(const Point&)>& g, const RectElement& dom, double tau,
                           int cells = 256);

}  // namespace anisofit
