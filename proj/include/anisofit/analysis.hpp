// Experiment drivers: convergence runs, slope fits, constants tables,
// adaptation fractions and the 1D maximal function.

#pragma once

#include "anisofit/refine.hpp"
#include "anisofit/shape.hpp"

#include <span>
#include <string>
#include <vector>

namespace anisofit {

struct ConvergenceRecord {
  std::size_t N = 0;
  double error = 0.0;
  double rate = 1.0;    // r
  double scaled = 0.0;  // N^r * error
};

/// m/d for the configuration (the saturation rate of the method).
double nominal_rate(const TargetFunction& f, const RefineConfig& cfg);

/// One record per scheduled N (increasing). Greedy strategies refine until
/// the leaf count reaches each N; `uniform` instead splits every leaf per
/// level (1D: exactly N equal intervals).
std::vector<ConvergenceRecord> convergence_run(const TargetFunction& f, const RefineConfig& cfg,
                                               std::span<const std::size_t> schedule, bool uniform = false);

/// Error of the N-interval uniform partition of a 1D target.
double uniform_1d_error(const TargetFunction& f, std::size_t N, const RefineConfig& cfg);

/// Least-squares slope of log(error) against log(N). Needs three records with
/// positive errors.
double fit_slope(std::span<const ConvergenceRecord> records);

struct ConstantsRow {
  double delta = 0.0;
  double U = 0.0, I = 0.0, A = 0.0;        // integral constants
  double C_U = 0.0, C_I = 0.0, C_A = 0.0;  // N * error at N = `N`
};

struct ConstantsOptions {
  std::size_t N = 8192;  // uniform runs use the quad-split level with this count
  int cells = 256;       // integration grid for U, I, A
};

/// sharp_ring(delta) with m = 2, p = 2: uniform quad-split (C_U),
/// iso_newest_vertex (C_I) and aniso_tri (C_A) greedy runs.
std::vector<ConstantsRow> constants_table(std::span<const double> deltas, const ConstantsOptions& o = {});
ConstantsRow constants_row(double delta, const ConstantsOptions& o = {});

struct GenerationFraction {
  int generation = 0;
  std::size_t count = 0;
  std::size_t well_adapted = 0;
  double fraction() const { return count ? static_cast<double>(well_adapted) / count : 0.0; }
};

/// Fraction of triangle leaves with sigma_adaptation <= threshold.
double adaptation_fraction(const PartitionTree& tree, const QuadForm2<double>& q, double threshold, double p,
                           const KappaTable& kappa = default_kappa_table());

/// The same per generation, counting every triangle the run produced at that
/// generation (leaves and split ones alike).
std::vector<GenerationFraction> adaptation_by_generation(const PartitionTree& tree, const QuadForm2<double>& q,
                                                         double threshold, double p,
                                                         const KappaTable& kappa = default_kappa_table());

/// L1 norm of the discrete maximal function of |g| sampled at the centers
/// of a uniform grid of cell width h: M(x_i) is the largest average of |g|
/// over centered windows [x_i - r, x_i + r], zero outside the grid.
double maximal_norm_1d(std::span<const double> g, double h);

/// CSV with a header row; floats in shortest round-trip form.
std::string records_csv(std::span<const ConvergenceRecord> records);
std::string constants_csv(std::span<const ConstantsRow> rows);
std::string format_real(double v);

}  // namespace anisofit
