#include "anisofit/analysis.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>

using namespace anisofit;

namespace {

TargetFunction make(const std::string& name, std::vector<double> p = {}) { return builtin(name, p); }

}  // namespace

TEST_CASE("slope of synthetic power laws") {
  std::vector<ConvergenceRecord> r;
  for (std::size_t n : {16u, 64u, 256u, 1024u}) r.push_back({n, 3.0 / n, 1.0, 3.0});
  CHECK(fit_slope(r) == doctest::Approx(-1.0).epsilon(1e-10));
  r.pop_back();
  r.pop_back();
  CHECK_THROWS_AS(fit_slope(r), std::invalid_argument);
  std::vector<ConvergenceRecord> zero{{1, 0.0}, {2, 0.0}, {4, 0.0}};
  CHECK_THROWS_AS(fit_slope(zero), std::invalid_argument);
}

TEST_CASE("convergence runs follow the schedule") {
  RefineConfig cfg;
  const std::vector<std::size_t> sched{64, 128};
  const auto rec = convergence_run(make("power_alpha", {0.5}), cfg, sched);
  REQUIRE(rec.size() == 2);
  CHECK(rec[0].N == 64);
  CHECK(rec[1].N == 128);
  CHECK(rec[1].scaled == doctest::Approx(128 * rec[1].error));

  cfg.strategy = Strategy::aniso_tri;
  cfg.m = 2;
  for (const auto& r : convergence_run(make("affine2", {1, 2, 3}), cfg, sched)) CHECK(r.error < 1e-12);
  CHECK_THROWS_AS(convergence_run(make("sin_1d"), RefineConfig{}, std::vector<std::size_t>{8, 4}),
                  std::invalid_argument);
}

TEST_CASE("uniform 1D saturation for sin(pi x)") {
  RefineConfig cfg;
  cfg.p = kInf;
  const double ne = 4096 * uniform_1d_error(make("sin_1d"), 4096, cfg);
  CHECK(ne >= 1.53);
  CHECK(ne <= 1.60);
  CHECK(ne == doctest::Approx(std::numbers::pi / 2).epsilon(1e-4));
}

TEST_CASE("holder rate for uniform partitions") {
  RefineConfig cfg;
  cfg.p = kInf;
  const std::vector<std::size_t> sched{64, 256, 1024, 4096};
  const double s = fit_slope(convergence_run(make("power_alpha", {0.5}), cfg, sched, true));
  CHECK(s == doctest::Approx(-0.5).epsilon(0.1));
}

TEST_CASE("maximal function") {
  std::vector<double> one(500, 1.0);
  CHECK(maximal_norm_1d(one, 1.0 / 500) == doctest::Approx(1.0));
  CHECK(maximal_norm_1d({}, 1.0) == 0.0);

  // x^{-1/2}: finite, and stable under grid refinement
  auto norm = [](std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = 1.0 / std::sqrt((i + 0.5) / n);
    return maximal_norm_1d(g, 1.0 / n);
  };
  const double a = norm(2000), b = norm(8000);
  CHECK(a < 10);
  CHECK(b < 10);
  CHECK(b == doctest::Approx(a).epsilon(0.05));
  // M g >= |g| pointwise
  CHECK(a >= 2.0 * 0.99);
}

TEST_CASE("greedy constant stays below 4 ||M f'||_1") {
  const std::size_t n = 8000;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = 0.5 / std::sqrt((i + 0.5) / n);
  const double bound = 4 * maximal_norm_1d(g, 1.0 / n);
  RefineConfig cfg;
  cfg.p = kInf;
  const std::vector<std::size_t> sched{256, 512, 1024, 2048, 4096};
  for (const auto& r : convergence_run(make("power_alpha", {0.5}), cfg, sched)) CHECK(r.N * r.error <= bound);
}

TEST_CASE("adaptation fractions") {
  // the oracle minimizer alone is fully adapted
  const QuadForm2<double> q{1, 0, 1};
  PartitionTree tree(Strategy::aniso_tri, 2);
  TreeNode n;
  n.element = shape_oracle(q, 2.0).best;
  tree.enqueue(tree.add_node(n));
  CHECK(adaptation_fraction(tree, q, 2.0, 2.0) == 1.0);
  CHECK(adaptation_fraction(tree, q, 0.5, 2.0) == 0.0);

  RefineConfig cfg;
  cfg.m = 2;
  cfg.strategy = Strategy::aniso_tri;
  cfg.root = RootKind::equilateral;
  cfg.max_N = 600;
  const auto run = run_to_N(make("quadratic_form", {1, 0, 100}), cfg);
  const auto gens = adaptation_by_generation(run.tree, {1, 0, 100}, 2.0, 2.0);
  REQUIRE(gens.size() > 8);
  CHECK(gens[0].count == 1);
  CHECK(gens[8].count == 256);
  CHECK(gens[8].fraction() > gens[2].fraction());
}

TEST_CASE("csv output") {
  const std::vector<ConvergenceRecord> r{{4, 0.5, 1.0, 2.0}};
  CHECK(records_csv(r) == "N,error,scaled\n4,0.5,2\n");
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(kInf) == "inf");
  const std::vector<ConstantsRow> rows{{0.2, 1, 2, 3, 4, 5, 6}};
  CHECK(constants_csv(rows) == "delta,U,I,A,C_U,C_I,C_A\n0.2,1,2,3,4,5,6\n");
}
