#include "anisofit/refine.hpp"
#include "anisofit/targets.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace anisofit;

namespace {

TargetFunction make(const std::string& name, std::vector<double> p = {}) { return builtin(name, p); }

const RectElement kSq{{0, 1, std::nullopt}, {0, 1, std::nullopt}};

RefineConfig config(Strategy s, int m = 1, double p = 2.0) {
  RefineConfig c;
  c.strategy = s;
  c.m = m;
  c.p = p;
  return c;
}

TreeNode leaf(double error, Element e = Element{Interval1D{}}) {
  TreeNode n;
  n.element = e;
  n.fit.error = error;
  return n;
}

}  // namespace

TEST_CASE("enum names round trip") {
  for (auto s : {Strategy::greedy_1d, Strategy::iso_quad, Strategy::iso_newest_vertex, Strategy::iso_longest_edge,
                 Strategy::aniso_rect, Strategy::aniso_rect_modified, Strategy::aniso_tri,
                 Strategy::aniso_tri_modified})
    CHECK(parse_strategy(to_string(s)) == s);
  CHECK(parse_decision_norm("linf_interpolation") == DecisionNorm::linf_interpolation);
  CHECK(parse_safety_kind("newest_vertex") == SafetyKind::newest_vertex);
  CHECK(parse_root_kind("equilateral") == RootKind::equilateral);
  CHECK_THROWS_AS(parse_strategy("diagonal"), std::invalid_argument);
}

TEST_CASE("config validation") {
  auto c = config(Strategy::aniso_rect_modified);
  c.rho = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.rho = 0.6;
  CHECK_NOTHROW(c.validate());
  c.m = 4;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_THROWS_AS(init_tree(make("sin_1d"), config(Strategy::aniso_tri)), std::invalid_argument);
  CHECK_THROWS_AS(init_tree(make("affine2", {0, 1, 1}), config(Strategy::greedy_1d)), std::invalid_argument);
}

TEST_CASE("leaf selection") {
  PartitionTree one(Strategy::greedy_1d, 1);
  const int a = one.add_node(leaf(0.1));
  one.enqueue(a);
  CHECK(select_leaf(one) == a);

  PartitionTree two(Strategy::greedy_1d, 1);
  const int x = two.add_node(leaf(0.5)), y = two.add_node(leaf(0.3));
  two.enqueue(x);
  two.enqueue(y);
  CHECK(select_leaf(two) == x);

  PartitionTree tie(Strategy::greedy_1d, 1);
  const int old = tie.add_node(leaf(0.4)), young = tie.add_node(leaf(0.4));
  tie.enqueue(young);
  tie.enqueue(old);
  CHECK(select_leaf(tie) == old);
}

TEST_CASE("rectangle decisions") {
  auto c = config(Strategy::aniso_rect, 1, kInf);
  const auto d = decide_rect(make("affine2", {0, 1, 10}), kSq, c);
  CHECK(d.axis == Axis::halve_y);
  CHECK(d.e_h < d.e_v);
  CHECK(!d.safety);

  const auto flat = decide_rect(make("affine2", {2, 0, 0}), kSq, c);
  CHECK(flat.axis == Axis::halve_y);
  CHECK(flat.e_h == 0.0);

  c.strategy = Strategy::aniso_rect_modified;
  const auto s = decide_rect(make("oscillatory_counterexample"), kSq, c);
  CHECK(s.safety);
  CHECK(s.e_h == doctest::Approx(s.e_T));
  CHECK(s.e_v == doctest::Approx(s.e_T));
}

TEST_CASE("triangle decisions") {
  auto c = config(Strategy::aniso_tri, 2, 2.0);
  const auto t = make_triangle<double>({0, 0}, {0.2, 0}, {0.1, 1.0});
  const auto aff = decide_tri(make("affine2", {1, 2, 3}), t, c);
  CHECK(aff.vertex == 0);
  CHECK(!aff.safety);

  const auto q = make("quadratic_form", {1, 0, 100});
  const auto d = decide_tri(q, t, c);
  // argmin of the three candidates by direct evaluation
  double best = kInf;
  int arg = -1;
  for (int i = 0; i < 3; ++i) {
    auto [a, b] = bisect_triangle(t, i);
    const double e = std::hypot(fit_local(q, a, 2, 2.0).error, fit_local(q, b, 2, 2.0).error);
    CHECK(d.e[i] == doctest::Approx(e));
    if (e < best) best = e, arg = i;
  }
  CHECK(d.vertex == arg);
  // only cuts from a base vertex shorten the y-extent of a child
  CHECK(t.v[d.vertex].y() == doctest::Approx(0.0));

  // constant target on the modified rule: no candidate improves on zero,
  // but zero error never triggers the safety split
  c.strategy = Strategy::aniso_tri_modified;
  CHECK(!decide_tri(make("affine2", {1, 0, 0}), t, c).safety);
}

TEST_CASE("modified triangle rule falls back to the longest edge") {
  // a fine checkerboard has near-zero mean on every child, so no bisection
  // of a constant fit gains anything
  auto c = config(Strategy::aniso_tri_modified, 1, 2.0);
  c.fit.tri_depth = 6;
  const auto f = make("product_sine", {40, 40});
  const auto t = make_triangle<double>({0, 0}, {1, 0}, {0.3, 0.8});
  const auto d = decide_tri(f, t, c);
  for (int i = 0; i < 3; ++i) CHECK(d.e[i] == doctest::Approx(d.e_T).epsilon(0.1));
  CHECK(d.safety);
  CHECK(d.vertex == longest_edge_vertex(t));
  c.safety = SafetyKind::newest_vertex;
  auto child = bisect_triangle(t, 2).first;
  CHECK(decide_tri(f, child, c).vertex == child.newest);
}

TEST_CASE("each step adds the right number of leaves") {
  const auto f = make("product_sine", {2, 1});
  for (auto s : {Strategy::iso_newest_vertex, Strategy::iso_longest_edge, Strategy::aniso_rect,
                 Strategy::aniso_rect_modified, Strategy::aniso_tri, Strategy::aniso_tri_modified}) {
    auto c = config(s);
    auto tree = init_tree(f, c);
    for (int k = 0; k < 10; ++k) {
      const auto n = tree.leaf_count();
      refine_step(tree, f, c);
      CHECK(tree.leaf_count() == n + 1);
    }
  }
  auto c = config(Strategy::iso_quad);
  auto tree = init_tree(f, c);
  refine_step(tree, f, c);
  CHECK(tree.leaf_count() == 4);
}

TEST_CASE("p = inf greedy error never increases") {
  const auto f = make("power_alpha", {0.5});
  auto c = config(Strategy::greedy_1d, 1, kInf);
  c.max_N = 300;
  const auto run = run_to_N(f, c);
  for (std::size_t k = 1; k < run.trace.size(); ++k) CHECK(run.trace[k].error <= run.trace[k - 1].error);
  CHECK(run.tree.leaf_count() == 300);

  const auto flat = run_to_N(make("affine2", {1, 0, 0}), config(Strategy::aniso_tri));
  for (const auto& t : flat.trace) CHECK(t.error == 0.0);
}

TEST_CASE("plain rectangle rule stalls on the counterexample") {
  auto c = config(Strategy::aniso_rect, 1, kInf);
  c.max_N = 256;
  const auto run = run_to_N(make("oscillatory_counterexample"), c);
  CHECK(std::abs(run.trace.back().error - run.trace.front().error) < 1e-9);
}

TEST_CASE("trace checkpoints") {
  auto c = config(Strategy::greedy_1d);
  c.max_N = 3000;
  const auto run = run_to_N(make("sin_1d"), c);
  CHECK(run.trace.front().N == 1);
  CHECK(run.trace.back().N == 3000);
  for (std::size_t k = 1; k < run.trace.size(); ++k) {
    if (run.trace[k].N < 1024) CHECK(run.trace[k].N == run.trace[k - 1].N + 1);
    CHECK(run.trace[k].N > run.trace[k - 1].N);
  }
}

TEST_CASE("deterministic replay") {
  const auto f = make("sharp_ring", {0.2});
  auto c = config(Strategy::aniso_tri, 2, 2.0);
  c.max_N = 300;
  CHECK(tree_hash(run_to_N(f, c).tree) == tree_hash(run_to_N(f, c).tree));
}

TEST_CASE("bitstream sizes") {
  PartitionTree single(Strategy::greedy_1d, 1);
  single.enqueue(single.add_node(leaf(0.0, Interval1D{0, 1, DyadicId{}})));
  CHECK(payload_bits(single) == 1);

  auto c = config(Strategy::greedy_1d);
  for (std::size_t n : {2u, 17u, 100u}) {
    c.max_N = n;
    CHECK(payload_bits(run_to_N(make("power_alpha", {0.5}), c).tree) == 2 * n - 1);
  }
  c = config(Strategy::aniso_rect);
  c.max_N = 50;
  CHECK(payload_bits(run_to_N(make("product_sine"), c).tree) == 3 * 50 - 2);
  // two diagonal roots: 4 bits per split plus one per root leaf
  c = config(Strategy::aniso_tri);
  c.max_N = 50;
  CHECK(payload_bits(run_to_N(make("product_sine"), c).tree) == 4 * 48 + 2);
  c = config(Strategy::iso_newest_vertex);
  c.max_N = 50;
  CHECK(payload_bits(run_to_N(make("product_sine"), c).tree) == 2 * 48 + 2);
}

TEST_CASE("encode and decode round trip") {
  std::mt19937_64 rng(29);
  const std::vector<Strategy> strategies{Strategy::iso_quad, Strategy::iso_newest_vertex, Strategy::aniso_rect,
                                         Strategy::aniso_rect_modified, Strategy::aniso_tri,
                                         Strategy::aniso_tri_modified};
  for (int run = 0; run < 100; ++run) {
    auto c = config(strategies[run % strategies.size()]);
    c.max_N = 5 + rng() % 120;
    const auto f = make("product_sine", {1.0 + rng() % 3, 1.0 + rng() % 3});
    const auto tree = run_to_N(f, c).tree;
    const auto bytes = encode_tree(tree);
    auto back = decode_tree(bytes);
    CHECK(encode_tree(back) == bytes);
    REQUIRE(back.leaf_count() == tree.leaf_count());
    const auto la = tree.leaves(), lb = back.leaves();
    REQUIRE(la.size() == lb.size());
    double da = 0, db = 0;
    for (std::size_t k = 0; k < la.size(); ++k) {
      da += area(tree.node(la[k]).element);
      db += area(back.node(lb[k]).element);
    }
    CHECK(da == doctest::Approx(db));
    refit(back, f, c);
    CHECK(back.global_error(2.0) == doctest::Approx(tree.global_error(2.0)));
  }
  auto c = config(Strategy::greedy_1d);
  c.max_N = 77;
  const auto t1 = run_to_N(make("sin_1d"), c).tree;
  CHECK(encode_tree(decode_tree(encode_tree(t1))) == encode_tree(t1));
}

TEST_CASE("malformed bitstreams") {
  auto c = config(Strategy::aniso_tri);
  c.max_N = 20;
  const auto bytes = encode_tree(run_to_N(make("product_sine"), c).tree);

  CHECK_THROWS_AS(decode_tree({}), DecodeError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_tree(bad_magic), DecodeError);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 2);
  try {
    decode_tree(truncated);
    FAIL("truncated stream decoded");
  } catch (const DecodeError& e) {
    CHECK(e.bit_offset > 0);
  }

  // root is internal (leading 1) with vertex code 3
  auto bad_code = bytes;
  const std::size_t payload = bytes.size() - (payload_bits(decode_tree(bytes)) + 7) / 8;
  bad_code[payload] = static_cast<std::uint8_t>(bad_code[payload] | 0xE0);
  CHECK_THROWS_AS(decode_tree(bad_code), DecodeError);
}
