#include "anisofit/analysis.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace anisofit {

double nominal_rate(const TargetFunction& f, const RefineConfig& cfg) {
  return static_cast<double>(cfg.m) / (f.is_1d() ? 1.0 : 2.0);
}

double uniform_1d_error(const TargetFunction& f, std::size_t N, const RefineConfig& cfg) {
  const auto& dom = std::get<Interval1D>(f.domain);
  const double h = dom.length() / static_cast<double>(N);
  double acc = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    const Interval1D in{dom.lo + h * k, k + 1 == N ? dom.hi : dom.lo + h * (k + 1), std::nullopt};
    const double e = fit_local(f, in, cfg.m, cfg.p, cfg.fit).error;
    acc = std::isinf(cfg.p) ? std::max(acc, e) : acc + std::pow(e, cfg.p);
  }
  return std::isinf(cfg.p) ? acc : std::pow(acc, 1.0 / cfg.p);
}

std::vector<ConvergenceRecord> convergence_run(const TargetFunction& f, const RefineConfig& cfg,
                                               std::span<const std::size_t> schedule, bool uniform) {
  for (std::size_t k = 1; k < schedule.size(); ++k)
    if (schedule[k] <= schedule[k - 1]) throw std::invalid_argument("convergence_run: schedule must increase");
  const double r = nominal_rate(f, cfg);
  std::vector<ConvergenceRecord> out;
  auto push = [&](std::size_t n, double e) { out.push_back({n, e, r, std::pow(static_cast<double>(n), r) * e}); };

  if (uniform && f.is_1d()) {
    for (auto n : schedule) push(n, uniform_1d_error(f, n, cfg));
    return out;
  }
  auto tree = init_tree(f, cfg);
  for (auto n : schedule) {
    while (tree.leaf_count() < n) {
      if (uniform)
        refine_uniform(tree, f, cfg);
      else
        refine_step(tree, f, cfg);
    }
    push(tree.leaf_count(), tree.global_error(cfg.p));
  }
  return out;
}

double fit_slope(std::span<const ConvergenceRecord> records) {
  if (records.size() < 3) throw std::invalid_argument("fit_slope: needs at least three records");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : records) {
    if (!(r.error > 0)) throw std::invalid_argument("fit_slope: errors must be positive");
    const double x = std::log(static_cast<double>(r.N)), y = std::log(r.error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(records.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// -------------------------------------------------------- constants table

ConstantsRow constants_row(double delta, const ConstantsOptions& o) {
  const std::array<double, 1> par{delta};
  const auto f = builtin("sharp_ring", par);
  ConstantsRow row;
  row.delta = delta;
  row.U = theoretical_constants(f, ConstantKind::U, 2.0, o.cells);
  row.I = theoretical_constants(f, ConstantKind::I, 2.0, o.cells);
  row.A = theoretical_constants(f, ConstantKind::A_tri, 2.0, o.cells);

  RefineConfig cfg;
  cfg.m = 2;
  cfg.p = 2.0;
  cfg.max_N = o.N;
  const double n = static_cast<double>(o.N);

  cfg.strategy = Strategy::iso_quad;
  cfg.root = RootKind::diagonal;
  auto uni = init_tree(f, cfg);
  while (uni.leaf_count() < o.N) refine_uniform(uni, f, cfg);
  row.C_U = static_cast<double>(uni.leaf_count()) * uni.global_error(2.0);

  cfg.root = RootKind::automatic;
  cfg.strategy = Strategy::iso_newest_vertex;
  row.C_I = n * run_to_N(f, cfg).tree.global_error(2.0);
  cfg.strategy = Strategy::aniso_tri;
  row.C_A = n * run_to_N(f, cfg).tree.global_error(2.0);
  return row;
}

std::vector<ConstantsRow> constants_table(std::span<const double> deltas, const ConstantsOptions& o) {
  std::vector<ConstantsRow> rows;
  for (double d : deltas) rows.push_back(constants_row(d, o));
  return rows;
}

// ------------------------------------------------------------ adaptation

double adaptation_fraction(const PartitionTree& tree, const QuadForm2<double>& q, double threshold, double p,
                           const KappaTable& kappa) {
  std::size_t count = 0, good = 0;
  for (int id : tree.leaves()) {
    const auto* t = std::get_if<TriElement>(&tree.node(id).element);
    if (!t) continue;
    ++count;
    if (sigma_adaptation(q, *t, p, kappa) <= threshold) ++good;
  }
  return count ? static_cast<double>(good) / count : 0.0;
}

std::vector<GenerationFraction> adaptation_by_generation(const PartitionTree& tree, const QuadForm2<double>& q,
                                                         double threshold, double p, const KappaTable& kappa) {
  std::vector<GenerationFraction> out;
  for (std::size_t i = 0; i < tree.node_count(); ++i) {
    const auto* t = std::get_if<TriElement>(&tree.node(static_cast<int>(i)).element);
    if (!t) continue;
    if (static_cast<int>(out.size()) <= t->generation) {
      const auto old = out.size();
      out.resize(t->generation + 1);
      for (auto k = old; k < out.size(); ++k) out[k].generation = static_cast<int>(k);
    }
    auto& g = out[t->generation];
    ++g.count;
    if (sigma_adaptation(q, *t, p, kappa) <= threshold) ++g.well_adapted;
  }
  return out;
}

// ------------------------------------------------------- maximal function

double maximal_norm_1d(std::span<const double> g, double h) {
  const std::size_t n = g.size();
  if (n == 0) return 0.0;
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + std::abs(g[i]);
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = 0.0;
    // window of 2k+1 cells centred on i; cells outside the grid count as zero
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t lo = i >= k ? i - k : 0;
      const std::size_t hi = std::min(n, i + k + 1);
      best = std::max(best, (prefix[hi] - prefix[lo]) / static_cast<double>(2 * k + 1));
      if (lo == 0 && hi == n) break;  // larger windows only add zeros
    }
    norm += best * h;
  }
  return norm;
}

// ------------------------------------------------------------------- CSV

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

std::string records_csv(std::span<const ConvergenceRecord> records) {
  std::string out = "N,error,scaled\n";
  for (const auto& r : records)
    out += std::to_string(r.N) + "," + format_real(r.error) + "," + format_real(r.scaled) + "\n";
  return out;
}

std::string constants_csv(std::span<const ConstantsRow> rows) {
  std::string out = "delta,U,I,A,C_U,C_I,C_A\n";
  for (const auto& r : rows)
    out += format_real(r.delta) + "," + format_real(r.U) + "," + format_real(r.I) + "," + format_real(r.A) + "," +
           format_real(r.C_U) + "," + format_real(r.C_I) + "," + format_real(r.C_A) + "\n";
  return out;
}

}  // namespace anisofit
