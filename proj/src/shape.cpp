#include "anisofit/shape.hpp"

#include "anisofit/quadrature.hpp"

#include <gsl/gsl_multimin.h>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include <array>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

#ifndef ANISOFIT_KAPPA_FILE
#define ANISOFIT_KAPPA_FILE "data/kappa.txt"
#endif

namespace anisofit {

RectElement optimal_rect(const LinearForm2<double>& q, double area) {
  if (q.qx * q.qy == 0.0 || !std::isfinite(q.qx * q.qy))
    throw std::domain_error("optimal_rect: q is constant along an axis, the optimal rectangle is unbounded");
  if (!(area > 0)) throw std::invalid_argument("optimal_rect: area must be positive");
  const double ratio = std::abs(q.qy / q.qx);  // |I| / |J|
  const double w = std::sqrt(area * ratio), h = area / w;
  return {{-w / 2, w / 2, std::nullopt}, {-h / 2, h / 2, std::nullopt}};
}

double a_measure(const LinearForm2<double>& q, const RectElement& t) {
  if (q.qx * q.qy == 0.0) return kInf;
  return std::abs(std::log2(t.width() * std::abs(q.qx) / (t.height() * std::abs(q.qy))));
}

// ------------------------------------------------------------------ kappa

namespace {

bool same_p(double a, double b) { return (std::isinf(a) && std::isinf(b)) || a == b; }

std::string p_text(double p) {
  if (std::isinf(p)) return "inf";
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, p);
  return {buf, r.ptr};
}

double parse_real(const std::string& s) {
  if (s == "inf") return kInf;
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

}  // namespace

bool KappaTable::has(int m, double p, int sign) const {
  for (const auto& e : entries_)
    if (e.m == m && same_p(e.p, p) && e.sign == sign) return true;
  return false;
}

double KappaTable::get(int m, double p, int sign) const {
  for (const auto& e : entries_)
    if (e.m == m && same_p(e.p, p) && e.sign == sign) return e.value;
  throw std::out_of_range("no kappa value for m=" + std::to_string(m) + " p=" + p_text(p) +
                          (sign > 0 ? " sign=+" : " sign=-"));
}

void KappaTable::set(KappaEntry e) {
  for (auto& x : entries_)
    if (x.m == e.m && same_p(x.p, e.p) && x.sign == e.sign) {
      x = std::move(e);
      return;
    }
  entries_.push_back(std::move(e));
}

KappaTable parse_kappa_table(const std::string& text) {
  KappaTable t;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string key, p, sign, value, hash;
    if (!(ls >> key)) continue;
    if (!(ls >> p >> sign >> value >> hash) || (key != "kappa" && key != "kappa3") ||
        (sign != "+" && sign != "-"))
      throw std::invalid_argument("kappa table line " + std::to_string(lineno) + ": malformed");
    t.set({key == "kappa" ? 2 : 3, parse_real(p), sign == "+" ? 1 : -1, parse_real(value), hash});
  }
  return t;
}

KappaTable read_kappa_table(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open kappa table " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_kappa_table(ss.str());
}

std::string format_kappa_table(const KappaTable& t) {
  std::string out = "# shape constants of x^2 +- y^2 and the cubic normal forms, unit-area triangles\n";
  for (const auto& e : t.entries()) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, e.value);
    out += (e.m == 2 ? "kappa " : "kappa3 ") + p_text(e.p) + (e.sign > 0 ? " + " : " - ") +
           std::string(buf, r.ptr) + " " + e.settings_hash + "\n";
  }
  return out;
}

const KappaTable& default_kappa_table() {
  static std::once_flag once;
  static KappaTable table;
  std::call_once(once, [] {
    const char* env = std::getenv("ANISOFIT_KAPPA");
    try {
      table = read_kappa_table(env && *env ? env : ANISOFIT_KAPPA_FILE);
    } catch (const std::runtime_error&) {
      // left empty; lookups then report the missing constant
    }
  });
  return table;
}

double K2(double p, const QuadForm2<double>& q, const KappaTable& kappa) {
  const double d = q.det();
  if (d == 0.0) return 0.0;
  return kappa.get(2, p, d > 0 ? 1 : -1) * std::sqrt(std::abs(d));
}

double K3(double p, const CubicForm2<double>& q, const KappaTable& kappa) {
  const double d = disc(q);
  if (d == 0.0) return 0.0;
  return kappa.get(3, p, d > 0 ? 1 : -1) * std::pow(std::abs(d), 0.25);
}

// ------------------------------------------------------------- the oracle

std::string OracleOptions::hash() const {
  const std::string s = "lattice=" + std::to_string(lattice) + ";iter=" + std::to_string(max_iterations) +
                        ";tol=" + p_text(size_tol) + ";starts=" + std::to_string(starts);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  auto r = std::to_chars(buf, buf + sizeof buf, h, 16);
  return std::string(16 - (r.ptr - buf), '0') + std::string(buf, r.ptr);
}

double form_error(const TargetFunction& q, const TriElement& t, int m, double p, const OracleOptions& o) {
  if (std::isinf(p)) return linf_minimax_fit(q, t, m, o.lattice).error;
  FitOptions fo;
  fo.tri_depth = m >= 3 ? 1 : 0;
  return fit_local(q, t, m, p, fo).error;
}

namespace {

// (log a, beta, theta) -> vertices (0,0), (a,0), (beta a, 2/a), rotated by theta
TriElement unit_triangle(double s, double beta, double theta) {
  const double a = std::exp(s);
  const Eigen::Rotation2Dd rot(theta);
  return make_triangle<double>(Point::Zero(), rot * Point(a, 0.0), rot * Point(beta * a, 2.0 / a));
}

struct OracleCtx {
  const TargetFunction* q;
  int m;
  double p;
  const OracleOptions* o;
  int evaluations = 0;
};

double oracle_objective(const gsl_vector* x, void* params) {
  auto* ctx = static_cast<OracleCtx*>(params);
  const double s = gsl_vector_get(x, 0);
  if (std::abs(s) > 6) return 1e300;  // keep away from absurd aspect ratios
  ++ctx->evaluations;
  return form_error(*ctx->q, unit_triangle(s, gsl_vector_get(x, 1), gsl_vector_get(x, 2)), ctx->m, ctx->p,
                    *ctx->o);
}

}  // namespace

OracleResult shape_oracle(const TargetFunction& q, int m, double p, const OracleOptions& o) {
  OracleCtx ctx{&q, m, p, &o};
  gsl_multimin_function fn{&oracle_objective, 3, &ctx};
  const double pi = std::numbers::pi;
  const double eq_side = 2.0 / std::pow(3.0, 0.25);

  // start shapes: equilateral, right isosceles, a flat and a tall one
  const std::array<std::array<double, 2>, 4> shapes{
      {{std::log(eq_side), 0.5}, {std::log(std::sqrt(2.0)), 0.0}, {std::log(2.5), 0.3}, {std::log(0.8), 0.5}}};

  OracleResult best;
  best.value = kInf;
  gsl_multimin_fminimizer* nm = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3);
  gsl_vector* x = gsl_vector_alloc(3);
  gsl_vector* step = gsl_vector_alloc(3);
  for (const auto& sh : shapes)
    for (int r = 0; r < o.starts; ++r) {
      gsl_vector_set(x, 0, sh[0]);
      gsl_vector_set(x, 1, sh[1]);
      gsl_vector_set(x, 2, pi * r / o.starts);
      gsl_vector_set(step, 0, 0.3);
      gsl_vector_set(step, 1, 0.2);
      gsl_vector_set(step, 2, 0.5 * pi / o.starts);
      gsl_multimin_fminimizer_set(nm, &fn, x, step);
      bool conv = false;
      for (int it = 0; it < o.max_iterations; ++it) {
        if (gsl_multimin_fminimizer_iterate(nm) != GSL_SUCCESS) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(nm), o.size_tol) == GSL_SUCCESS) {
          conv = true;
          break;
        }
      }
      const double v = gsl_multimin_fminimizer_minimum(nm);
      if (v < best.value) {
        const gsl_vector* xm = gsl_multimin_fminimizer_x(nm);
        best.value = v;
        best.best = unit_triangle(gsl_vector_get(xm, 0), gsl_vector_get(xm, 1), gsl_vector_get(xm, 2));
        best.converged = conv;
      }
    }
  gsl_vector_free(step);
  gsl_vector_free(x);
  gsl_multimin_fminimizer_free(nm);
  best.evaluations = ctx.evaluations;
  return best;
}

OracleResult shape_oracle(const QuadForm2<double>& q, double p, const OracleOptions& o) {
  const std::array<double, 3> c{q.a, q.b, q.c};
  return shape_oracle(builtin("quadratic_form", c), 2, p, o);
}

double kappa_oracle(double p, int sign, int m, const OracleOptions& o) {
  if (m == 2) return shape_oracle(QuadForm2<double>{1.0, 0.0, sign > 0 ? 1.0 : -1.0}, p, o).value;
  if (m != 3) throw std::invalid_argument("kappa_oracle: m must be 2 or 3");
  const CubicForm2<double> c = sign > 0 ? CubicForm2<double>{1, 0, -3, 0} : CubicForm2<double>{1, 0, 0, 1};
  const std::array<double, 4> cc{c.a, c.b, c.c, c.d};
  return shape_oracle(builtin("cubic_form", cc), 3, p, o).value / std::pow(std::abs(disc(c)), 0.25);
}

KappaTable compute_kappa_table(const OracleOptions& o) {
  KappaTable t;
  const std::string h = o.hash();
  for (int m : {2, 3})
    for (double p : {2.0, kInf})
      for (int sign : {1, -1}) t.set({m, p, sign, kappa_oracle(p, sign, m, o), h});
  return t;
}

// ------------------------------------------------------------- adaptation

double sigma_adaptation(const QuadForm2<double>& q, const TriElement& t, double p, const KappaTable& kappa,
                        const OracleOptions& o) {
  if (q.det() == 0.0) throw std::domain_error("sigma_adaptation: degenerate quadratic form");
  const std::array<double, 3> c{q.a, q.b, q.c};
  const double e = form_error(builtin("quadratic_form", c), t, 2, p, o);
  return e / (std::pow(t.area(), inv_tau(p, 2.0)) * K2(p, q, kappa));
}

// ------------------------------------------------------ integral constants

double integral_quasi_norm(const std::function<double(const Point&)>& g, const RectElement& dom, double tau,
                           int cells) {
  const auto gl = gauss_legendre(4);
  const double hx = dom.width() / cells, hy = dom.height() / cells;
  double sum = 0.0;
  for (int j = 0; j < cells; ++j) {
    double row = 0.0;
    for (int i = 0; i < cells; ++i) {
      const double cx = dom.ix.lo + (i + 0.5) * hx, cy = dom.iy.lo + (j + 0.5) * hy;
      for (std::size_t b = 0; b < gl.size(); ++b)
        for (std::size_t a = 0; a < gl.size(); ++a) {
          const Point z(cx + hx / 2 * gl.nodes[a].x(), cy + hy / 2 * gl.nodes[b].x());
          const double v = std::abs(g(z));
          const double w = gl.weights[a] * gl.weights[b] * hx * hy / 4;
          row += w * (std::isinf(tau) ? v : std::pow(v, tau));
        }
    }
    sum += row;
  }
  return std::pow(sum, 1.0 / tau);
}

double theoretical_constants(const TargetFunction& f, ConstantKind which, double p, int cells) {
  const auto* dom = std::get_if<RectElement>(&f.domain);
  if (!dom) throw std::invalid_argument("theoretical_constants: needs a rectangular 2D domain");
  const double ip = std::isinf(p) ? 0.0 : 1.0 / p;
  if (which == ConstantKind::A_rect) {
    if (!f.has_grad()) throw std::invalid_argument("theoretical_constants: target has no gradient");
    return integral_quasi_norm(
        [&](const Point& z) {
          const Eigen::Vector2d g = f.grad(z);
          return std::sqrt(std::abs(g.x() * g.y()));
        },
        *dom, 1.0 / (ip + 0.5), cells);
  }
  if (!f.has_hess()) throw std::invalid_argument("theoretical_constants: target has no Hessian");
  if (which == ConstantKind::A_tri)
    return integral_quasi_norm([&](const Point& z) { return std::sqrt(std::abs(f.hess(z).determinant())); },
                               *dom, 1.0 / (ip + 1.0), cells);
  auto spectral = [&](const Point& z) {
    const Eigen::Matrix2d h = f.hess(z);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  };
  if (which == ConstantKind::U) {
    if (std::isinf(p)) throw std::invalid_argument("theoretical_constants: U needs finite p");
    return integral_quasi_norm(spectral, *dom, p, cells);
  }
  return integral_quasi_norm(spectral, *dom, 1.0 / (ip + 1.0), cells);
}

}  // namespace anisofit
