// anisofit: adaptive piecewise polynomial approximation from the command line.

#include "anisofit/analysis.hpp"
#include "anisofit/io.hpp"
#include "anisofit/refine.hpp"
#include "anisofit/shape.hpp"
#include "anisofit/targets.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <memory>
#include <sstream>

using namespace anisofit;

namespace {

// exit codes
constexpr int kNumeric = 1;
constexpr int kBadArgs = 2;
constexpr int kFileError = 3;

double parse_p(const std::string& s) {
  if (s == "inf" || s == "infinity") return kInf;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad --p value '" + s + "'");
  return v;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) {
    std::size_t used = 0;
    out.push_back(std::stod(tok, &used));
    if (used != tok.size()) throw std::invalid_argument("bad number '" + tok + "'");
  }
  return out;
}

TargetFunction load_target(const std::string& spec) {
  if (spec.rfind("pgm:", 0) == 0) {
    auto img = std::make_shared<RasterImage>(read_pgm(spec.substr(4)));
    return raster_target(std::move(img), spec);
  }
  return parse_target(spec);
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    write_text(path, text);
}

// options shared by refine / convergence / encode
struct RunOptions {
  std::string target = "sin_1d";
  std::string strategy = "greedy_1d";
  std::string p = "2";
  std::string decision = "lp";
  std::string safety = "longest_edge";
  std::string root = "automatic";
  std::string linf = "l2_residual";
  int m = 1;
  double rho = 1.0 / std::numbers::sqrt2;
  int lattice = 33;
  std::size_t N = 1024;

  void attach(CLI::App* app) {
    app->add_option("--target", target, "builtin[:params] or pgm:FILE")->capture_default_str();
    app->add_option("--strategy", strategy,
                    "greedy_1d | iso_quad | iso_newest_vertex | iso_longest_edge | aniso_rect | "
                    "aniso_rect_modified | aniso_tri | aniso_tri_modified")
        ->capture_default_str();
    app->add_option("--m", m, "degree bound (polynomials of degree m-1)")->capture_default_str();
    app->add_option("--p", p, "error norm exponent, or inf")->capture_default_str();
    app->add_option("--N", N, "target leaf count")->capture_default_str();
    app->add_option("--rho", rho, "modified-rule threshold in (0,1)")->capture_default_str();
    app->add_option("--decision", decision, "lp | l2_projection | linf_interpolation")->capture_default_str();
    app->add_option("--safety", safety, "longest_edge | newest_vertex")->capture_default_str();
    app->add_option("--root", root, "automatic | domain | diagonal | crisscross | equilateral")
        ->capture_default_str();
    app->add_option("--lattice", lattice, "points per side of the sup-norm sampling lattice")
        ->capture_default_str();
    app->add_option("--linf", linf, "l2_residual | minimax (p = inf, m >= 2)")->capture_default_str();
  }

  RefineConfig config() const {
    RefineConfig c;
    c.m = m;
    c.p = parse_p(p);
    c.strategy = parse_strategy(strategy);
    c.decision_norm = parse_decision_norm(decision);
    c.safety = parse_safety_kind(safety);
    c.root = parse_root_kind(root);
    c.rho = rho;
    c.max_N = N;
    c.fit.lattice = lattice;
    if (linf == "minimax")
      c.fit.linf_mode = LinfMode::minimax;
    else if (linf != "l2_residual")
      throw std::invalid_argument("bad --linf value '" + linf + "'");
    c.validate();
    return c;
  }
};

Coloring parse_coloring(const std::string& s) {
  if (s == "none") return Coloring::none;
  if (s == "value") return Coloring::value;
  if (s == "sigma") return Coloring::sigma_threshold;
  throw std::invalid_argument("bad --coloring '" + s + "' (none | value | sigma)");
}

SvgOptions svg_options(const std::string& coloring, const std::string& q, double threshold, const std::string& p) {
  SvgOptions o;
  o.coloring = parse_coloring(coloring);
  const auto c = parse_list(q);
  if (c.size() != 3) throw std::invalid_argument("--q needs a,b,c");
  o.q = {c[0], c[1], c[2]};
  o.threshold = threshold;
  o.p = parse_p(p);
  return o;
}

std::vector<std::pair<std::string, std::string>> run_meta(const RunOptions& r, const RefineConfig& c) {
  std::vector<std::pair<std::string, std::string>> meta{
      {"strategy", to_string(c.strategy)}, {"target", r.target}, {"config", c.echo()}};
  if (const auto& k = default_kappa_table(); !k.entries().empty())
    meta.emplace_back("kappa_hash", k.entries().front().settings_hash);
  return meta;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Greedy adaptive refinement with isotropic and anisotropic split rules"};
  app.require_subcommand(1);

  // refine
  RunOptions ref;
  std::string ref_out, ref_svg, ref_coloring = "none", ref_q = "1,0,1", ref_sigma_p = "2";
  double ref_threshold = 2.0;
  auto* refine = app.add_subcommand("refine", "run the greedy algorithm and write a mesh document");
  ref.attach(refine);
  refine->add_option("--out", ref_out, "mesh document path (default stdout)");
  refine->add_option("--svg", ref_svg, "also render the mesh to this SVG file");
  refine->add_option("--coloring", ref_coloring, "none | value | sigma")->capture_default_str();
  refine->add_option("--q", ref_q, "quadratic form a,b,c for sigma coloring")->capture_default_str();
  refine->add_option("--threshold", ref_threshold, "sigma threshold")->capture_default_str();
  refine->add_option("--sigma-p", ref_sigma_p, "norm used for sigma")->capture_default_str();

  // convergence
  RunOptions conv;
  std::string conv_schedule = "64,128,256,512,1024,2048,4096", conv_out;
  bool conv_uniform = false;
  auto* convergence = app.add_subcommand("convergence", "error against N as CSV");
  conv.attach(convergence);
  convergence->add_option("--schedule", conv_schedule, "increasing N list")->capture_default_str();
  convergence->add_flag("--uniform", conv_uniform, "uniform refinement instead of greedy");
  convergence->add_option("--out", conv_out, "CSV path (default stdout)");

  // table
  std::string tab_deltas = "0.2,0.1,0.05", tab_out;
  std::size_t tab_N = 8192;
  int tab_cells = 256;
  auto* table = app.add_subcommand("table", "theoretical vs empirical constants for sharp_ring targets");
  table->add_option("--deltas", tab_deltas, "ring widths")->capture_default_str();
  table->add_option("--N", tab_N, "leaf count for the empirical constants")->capture_default_str();
  table->add_option("--cells", tab_cells, "integration cells per side")->capture_default_str();
  table->add_option("--out", tab_out, "CSV path (default stdout)");

  // shape
  std::string sh_p = "2", sh_krect, sh_k2, sh_q, sh_k3, sh_opt, sh_kappa_out, sh_kappa_in;
  double sh_area = 1.0;
  int sh_lattice = 33;
  auto* shape = app.add_subcommand("shape", "shape functions and optimal elements");
  shape->add_option("--p", sh_p, "norm exponent or inf")->capture_default_str();
  shape->add_option("--krect", sh_krect, "K_p of the linear form qx,qy");
  auto* k2 = shape->add_option("--k2", sh_k2, "K_{2,p} of a x^2 + 2b xy + c y^2, given a,b,c or via --q");
  k2->expected(0, 1);
  shape->add_option("--q", sh_q, "quadratic form a,b,c for a bare --k2");
  shape->add_option("--k3", sh_k3, "K_{3,p} of a x^3 + b x^2y + c xy^2 + d y^3, given a,b,c,d");
  shape->add_option("--optimal-rect", sh_opt, "optimal rectangle for qx,qy");
  shape->add_option("--area", sh_area, "area for --optimal-rect")->capture_default_str();
  shape->add_option("--kappa", sh_kappa_in, "constants file to use instead of the shipped one");
  shape->add_option("--kappa-table", sh_kappa_out, "recompute all kappa constants and write them here");
  shape->add_option("--lattice", sh_lattice, "oracle lattice for --kappa-table")->capture_default_str();

  // render
  std::string ren_mesh, ren_out, ren_coloring = "none", ren_q = "1,0,1", ren_p = "2";
  double ren_threshold = 2.0;
  auto* render = app.add_subcommand("render", "mesh document to SVG");
  render->add_option("--mesh", ren_mesh, "mesh document")->required();
  render->add_option("--out", ren_out, "SVG path (default stdout)");
  render->add_option("--coloring", ren_coloring, "none | value | sigma")->capture_default_str();
  render->add_option("--q", ren_q, "quadratic form a,b,c for sigma coloring")->capture_default_str();
  render->add_option("--threshold", ren_threshold, "sigma threshold")->capture_default_str();
  render->add_option("--p", ren_p, "norm used for sigma")->capture_default_str();

  // encode / decode
  RunOptions enc;
  std::string enc_out;
  auto* encode = app.add_subcommand("encode", "run the greedy algorithm and write the tree bitstream");
  enc.attach(encode);
  encode->add_option("--out", enc_out, "bitstream path")->required();

  std::string dec_in, dec_out, dec_target, dec_p = "2";
  auto* decode = app.add_subcommand("decode", "tree bitstream to mesh document");
  decode->add_option("--in", dec_in, "bitstream path")->required();
  decode->add_option("--out", dec_out, "mesh document path (default stdout)");
  decode->add_option("--target", dec_target, "refit leaves against this target");
  decode->add_option("--p", dec_p, "norm for the refit")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kBadArgs;
  }

  try {
    if (*refine) {
      const auto cfg = ref.config();
      const auto f = load_target(ref.target);
      auto run = run_to_N(f, cfg);
      auto doc = mesh_from_tree(run.tree, run_meta(ref, cfg));
      emit(ref_out, format_mesh(doc));
      if (!ref_svg.empty())
        write_text(ref_svg, write_svg(doc, svg_options(ref_coloring, ref_q, ref_threshold, ref_sigma_p)));
      std::fprintf(stderr, "N=%zu error=%s safety_splits=%zu\n", run.tree.leaf_count(),
                   format_real(run.tree.global_error(cfg.p)).c_str(), run.safety_splits);
    } else if (*convergence) {
      const auto cfg = conv.config();
      const auto f = load_target(conv.target);
      std::vector<std::size_t> sched;
      for (double v : parse_list(conv_schedule)) sched.push_back(static_cast<std::size_t>(v));
      const auto rec = convergence_run(f, cfg, sched, conv_uniform);
      emit(conv_out, records_csv(rec));
      if (rec.size() >= 3) std::fprintf(stderr, "slope=%s\n", format_real(fit_slope(rec)).c_str());
    } else if (*table) {
      ConstantsOptions o;
      o.N = tab_N;
      o.cells = tab_cells;
      const auto deltas = parse_list(tab_deltas);
      emit(tab_out, constants_csv(constants_table(deltas, o)));
    } else if (*shape) {
      const double p = parse_p(sh_p);
      KappaTable custom;
      if (!sh_kappa_in.empty()) custom = read_kappa_table(sh_kappa_in);
      const KappaTable& kappa = sh_kappa_in.empty() ? default_kappa_table() : custom;
      if (!sh_kappa_out.empty()) {
        OracleOptions o;
        o.lattice = sh_lattice;
        write_text(sh_kappa_out, format_kappa_table(compute_kappa_table(o)));
      }
      if (!sh_krect.empty()) {
        const auto q = parse_list(sh_krect);
        if (q.size() != 2) throw std::invalid_argument("--krect needs qx,qy");
        std::cout << format_real(K_rect(p, LinearForm2<double>{q[0], q[1]})) << "\n";
      }
      if (k2->count() > 0 || !sh_q.empty()) {
        const auto q = parse_list(sh_k2.empty() ? sh_q : sh_k2);
        if (q.size() != 3) throw std::invalid_argument("--k2 needs a,b,c");
        std::cout << format_real(K2(p, QuadForm2<double>{q[0], q[1], q[2]}, kappa)) << "\n";
      }
      if (!sh_k3.empty()) {
        const auto q = parse_list(sh_k3);
        if (q.size() != 4) throw std::invalid_argument("--k3 needs a,b,c,d");
        std::cout << format_real(K3(p, CubicForm2<double>{q[0], q[1], q[2], q[3]}, kappa)) << "\n";
      }
      if (!sh_opt.empty()) {
        const auto q = parse_list(sh_opt);
        if (q.size() != 2) throw std::invalid_argument("--optimal-rect needs qx,qy");
        const auto r = optimal_rect({q[0], q[1]}, sh_area);
        std::cout << format_real(r.ix.lo) << " " << format_real(r.ix.hi) << " " << format_real(r.iy.lo) << " "
                  << format_real(r.iy.hi) << "\n";
      }
    } else if (*render) {
      const auto doc = read_mesh(ren_mesh);
      emit(ren_out, write_svg(doc, svg_options(ren_coloring, ren_q, ren_threshold, ren_p)));
    } else if (*encode) {
      const auto cfg = enc.config();
      const auto f = load_target(enc.target);
      const auto bytes = encode_tree(run_to_N(f, cfg).tree);
      write_text(enc_out, std::string(bytes.begin(), bytes.end()));
    } else if (*decode) {
      const auto raw = read_text(dec_in);
      auto tree = decode_tree(std::vector<std::uint8_t>(raw.begin(), raw.end()));
      std::vector<std::pair<std::string, std::string>> meta{{"strategy", to_string(tree.strategy())}};
      if (!dec_target.empty()) {
        RefineConfig cfg;
        cfg.m = tree.degree();
        cfg.p = parse_p(dec_p);
        cfg.strategy = tree.strategy();
        refit(tree, load_target(dec_target), cfg);
        meta.emplace_back("target", dec_target);
      }
      emit(dec_out, format_mesh(mesh_from_tree(tree, meta)));
    }
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFileError;
  } catch (const DecodeError& e) {
    std::fprintf(stderr, "error: %s (bit %zu)\n", e.what(), e.bit_offset);
    return kFileError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kBadArgs;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumeric;
  }
  return 0;
}
