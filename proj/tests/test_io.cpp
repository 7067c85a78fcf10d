#include "anisofit/io.hpp"

#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <limits>
#include <memory>

using namespace anisofit;

namespace {

std::size_t count(const std::string& s, const std::string& what) {
  std::size_t n = 0;
  for (auto pos = s.find(what); pos != std::string::npos; pos = s.find(what, pos + 1)) ++n;
  return n;
}

PartitionTree small_run(Strategy s, std::size_t N, int m = 2) {
  RefineConfig cfg;
  cfg.strategy = s;
  cfg.m = m;
  cfg.max_N = N;
  const std::vector<double> p{2, 1};
  return run_to_N(builtin("product_sine", p), cfg).tree;
}

}  // namespace

TEST_CASE("plain pgm") {
  const auto img = parse_pgm("P2\n2 2\n255\n0 255 0 255\n");
  CHECK(img.width == 2);
  CHECK(img.height == 2);
  CHECK(img.samples == std::vector<double>{0, 1, 0, 1});
  CHECK(parse_pgm("P2\n# comment\n1 1\n10\n5\n").samples[0] == doctest::Approx(0.5));
}

TEST_CASE("binary pgm") {
  std::string bytes = "P5\n2 2\n255\n";
  bytes += std::string("\x00\xff\x80\x01", 4);
  const auto img = parse_pgm(bytes);
  CHECK(img.width == 2);
  CHECK(img.samples[1] == 1.0);
  CHECK(img.samples[2] == doctest::Approx(128.0 / 255));

  std::string wide = "P5\n1 1\n65535\n";
  wide += std::string("\x80\x00", 2);
  CHECK(parse_pgm(wide).samples[0] == doctest::Approx(32768.0 / 65535));
}

TEST_CASE("truncated and malformed pgm") {
  std::string bytes = "P5\n2 2\n255\n";
  bytes += std::string("\x00\xff", 2);
  try {
    parse_pgm(bytes);
    FAIL("truncated payload accepted");
  } catch (const IoError& e) {
    const std::string what = e.what();
    CHECK(what.find("expected 4") != std::string::npos);
    CHECK(what.find("got 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_pgm("P6\n1 1\n255\n0"), IoError);
  CHECK_THROWS_AS(parse_pgm("P2\n1 1\n70000\n0\n"), IoError);
  CHECK_THROWS_AS(parse_pgm("P2\n2 1\n255\n0\n"), IoError);
  CHECK_THROWS_AS(read_pgm("/nonexistent/file.pgm"), IoError);
}

TEST_CASE("pgm write and read") {
  RasterImage img{3, 2, {0, 0.2, 0.4, 0.6, 0.8, 1.0}};
  const auto back = parse_pgm(format_pgm(img));
  CHECK(back.width == 3);
  for (std::size_t k = 0; k < img.size(); ++k) CHECK(back.samples[k] == doctest::Approx(img.samples[k]).epsilon(0.005));
}

TEST_CASE("mesh documents round trip byte for byte") {
  for (auto s : {Strategy::aniso_tri, Strategy::aniso_rect_modified, Strategy::iso_quad}) {
    const auto doc = mesh_from_tree(small_run(s, 40, 2), {{"strategy", to_string(s)}, {"target", "product_sine:2,1"}});
    CHECK(doc.leaves.size() >= 40);
    const auto text = format_mesh(doc);
    CHECK(format_mesh(parse_mesh(text)) == text);
    CHECK(*parse_mesh(text).find("target") == "product_sine:2,1");
  }
  RefineConfig cfg;
  cfg.max_N = 30;
  const std::vector<double> p{0.5};
  const auto doc = mesh_from_tree(run_to_N(builtin("power_alpha", p), cfg).tree);
  const auto text = format_mesh(doc);
  CHECK(format_mesh(parse_mesh(text)) == text);

  const auto path = (std::filesystem::temp_directory_path() / "anisofit_mesh_test.txt").string();
  write_text(path, text);
  CHECK(format_mesh(read_mesh(path)) == text);
  std::remove(path.c_str());
}

TEST_CASE("malformed mesh documents") {
  CHECK_THROWS_AS(parse_mesh("not a mesh\n"), IoError);
  CHECK_THROWS_AS(parse_mesh("anisofit-mesh 1\nm 1\nleaves 2\n"), IoError);
  CHECK_THROWS_AS(parse_mesh("anisofit-mesh 1\nbogus 1\n"), IoError);
}

TEST_CASE("svg has one polygon per leaf") {
  const auto one = mesh_from_tree(small_run(Strategy::aniso_tri, 1));
  CHECK(count(write_svg(one), "<polygon") == one.leaves.size());
  for (std::size_t n : {2u, 37u, 120u}) {
    const auto doc = mesh_from_tree(small_run(Strategy::aniso_tri, n));
    CHECK(count(write_svg(doc), "<polygon") == doc.leaves.size());
    const auto rect = mesh_from_tree(small_run(Strategy::aniso_rect, n, 1));
    SvgOptions o;
    o.coloring = Coloring::value;
    CHECK(count(write_svg(rect, o), "<polygon") == n);
  }
}

TEST_CASE("sigma coloring") {
  const auto doc = mesh_from_tree(small_run(Strategy::aniso_tri, 60));
  SvgOptions o;
  o.coloring = Coloring::sigma_threshold;
  o.threshold = std::numeric_limits<double>::infinity();
  const auto svg = write_svg(doc, o);
  CHECK(count(svg, "fill=\"#ffffff\"") == doc.leaves.size());
  CHECK(count(svg, "#a0a0a0") == 0);
  o.threshold = 0.5;  // sigma is never below one
  CHECK(count(write_svg(doc, o), "fill=\"#a0a0a0\"") == doc.leaves.size());
}

TEST_CASE("1D meshes are not drawn") {
  RefineConfig cfg;
  cfg.max_N = 4;
  const auto doc = mesh_from_tree(run_to_N(builtin("sin_1d"), cfg).tree);
  CHECK_THROWS_AS(write_svg(doc), std::invalid_argument);
}
