#include "anisofit/io.hpp"

#include "anisofit/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace anisofit {

// -------------------------------------------------------------------- PGM

namespace {

struct PgmCursor {
  const std::string& s;
  std::size_t pos = 0;

  void skip_space_and_comments() {
    while (pos < s.size()) {
      if (s[pos] == '#') {
        while (pos < s.size() && s[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(s[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  }
  long number(const char* what) {
    skip_space_and_comments();
    long v = 0;
    auto r = std::from_chars(s.data() + pos, s.data() + s.size(), v);
    if (r.ec != std::errc()) throw IoError(std::string("pgm: expected ") + what + " at byte " + std::to_string(pos));
    pos = static_cast<std::size_t>(r.ptr - s.data());
    return v;
  }
};

}  // namespace

RasterImage parse_pgm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    throw IoError("pgm: unsupported magic, expected P2 or P5");
  const bool binary = bytes[1] == '5';
  PgmCursor c{bytes, 2};
  const long w = c.number("width"), h = c.number("height"), maxval = c.number("maxval");
  if (w <= 0 || h <= 0) throw IoError("pgm: width and height must be positive");
  if (maxval <= 0 || maxval > 65535) throw IoError("pgm: maxval must lie in 1..65535");
  RasterImage img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  img.samples.resize(count);
  if (binary) {
    if (c.pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[c.pos])))
      throw IoError("pgm: missing whitespace after maxval");
    ++c.pos;
    const std::size_t bps = maxval < 256 ? 1 : 2;
    const std::size_t expected = count * bps, actual = bytes.size() - c.pos;
    if (actual < expected)
      throw IoError("pgm: truncated payload, expected " + std::to_string(expected) + " bytes, got " +
                    std::to_string(actual));
    for (std::size_t k = 0; k < count; ++k) {
      const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + c.pos + k * bps);
      const unsigned v = bps == 1 ? p[0] : (static_cast<unsigned>(p[0]) << 8) | p[1];
      img.samples[k] = static_cast<double>(v) / static_cast<double>(maxval);
    }
  } else {
    for (std::size_t k = 0; k < count; ++k) {
      c.skip_space_and_comments();
      if (c.pos >= bytes.size())
        throw IoError("pgm: truncated payload, expected " + std::to_string(count) + " samples, got " +
                      std::to_string(k));
      const long v = c.number("sample");
      if (v < 0 || v > maxval) throw IoError("pgm: sample out of range at index " + std::to_string(k));
      img.samples[k] = static_cast<double>(v) / static_cast<double>(maxval);
    }
  }
  return img;
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << text;
  if (!f) throw IoError("write failed for " + path);
}

RasterImage read_pgm(const std::string& path) { return parse_pgm(read_text(path)); }

std::string format_pgm(const RasterImage& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  for (double v : img.samples)
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
  return out;
}

void write_pgm(const RasterImage& img, const std::string& path) { write_text(path, format_pgm(img)); }

// ------------------------------------------------------------------- mesh

const std::string* MeshDocument::find(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return &v;
  return nullptr;
}

MeshDocument mesh_from_tree(const PartitionTree& tree, std::vector<std::pair<std::string, std::string>> meta) {
  MeshDocument doc;
  doc.meta = std::move(meta);
  doc.m = tree.degree();
  for (int id : tree.leaves()) {
    const auto& n = tree.node(id);
    MeshLeaf leaf;
    leaf.element = n.element;
    if (const auto* t = std::get_if<TriElement>(&n.element)) leaf.generation = t->generation;
    else {
      int g = 0;
      for (int p = n.parent; p >= 0; p = tree.node(p).parent) ++g;
      leaf.generation = g;
    }
    leaf.safety = n.born_of_safety;
    leaf.error = n.fit.error;
    leaf.coefficients.assign(n.fit.coefficients.data(), n.fit.coefficients.data() + n.fit.coefficients.size());
    doc.leaves.push_back(std::move(leaf));
  }
  return doc;
}

namespace {

double parse_double(const std::string& tok, int line) {
  if (tok == "inf") return kInf;
  if (tok == "-inf") return -kInf;
  double v = 0.0;
  auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (r.ec != std::errc() || r.ptr != tok.data() + tok.size())
    throw IoError("mesh line " + std::to_string(line) + ": bad number '" + tok + "'");
  return v;
}

long parse_long(const std::string& tok, int line) {
  long v = 0;
  auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (r.ec != std::errc() || r.ptr != tok.data() + tok.size())
    throw IoError("mesh line " + std::to_string(line) + ": bad integer '" + tok + "'");
  return v;
}

}  // namespace

std::string format_mesh(const MeshDocument& doc) {
  std::string out = "anisofit-mesh 1\n";
  for (const auto& [k, v] : doc.meta) out += "meta " + k + " " + v + "\n";
  out += "m " + std::to_string(doc.m) + "\n";
  out += "leaves " + std::to_string(doc.leaves.size()) + "\n";
  for (const auto& l : doc.leaves) {
    std::vector<double> xs;
    char kind;
    if (const auto* in = std::get_if<Interval1D>(&l.element)) {
      kind = 'I';
      xs = {in->lo, in->hi};
    } else if (const auto* r = std::get_if<RectElement>(&l.element)) {
      kind = 'R';
      xs = {r->ix.lo, r->ix.hi, r->iy.lo, r->iy.hi};
    } else {
      const auto& t = std::get<TriElement>(l.element);
      kind = 'T';
      xs = {t.v[0].x(), t.v[0].y(), t.v[1].x(), t.v[1].y(), t.v[2].x(), t.v[2].y()};
    }
    out += kind;
    out += " " + std::to_string(l.generation) + (l.safety ? " s " : " g ") + format_real(l.error);
    for (double x : xs) out += " " + format_real(x);
    out += " " + std::to_string(l.coefficients.size());
    for (double c : l.coefficients) out += " " + format_real(c);
    out += "\n";
  }
  return out;
}

MeshDocument parse_mesh(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 1;
  if (!std::getline(in, line) || line != "anisofit-mesh 1") throw IoError("mesh: missing 'anisofit-mesh 1' header");
  MeshDocument doc;
  long expected = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("meta ", 0) == 0) {
      const auto sp = line.find(' ', 5);
      if (sp == std::string::npos) throw IoError("mesh line " + std::to_string(lineno) + ": meta needs a value");
      doc.meta.emplace_back(line.substr(5, sp - 5), line.substr(sp + 1));
      continue;
    }
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok[0] == "m" && tok.size() == 2) {
      doc.m = static_cast<int>(parse_long(tok[1], lineno));
    } else if (tok[0] == "leaves" && tok.size() == 2) {
      expected = parse_long(tok[1], lineno);
    } else if (tok[0] == "I" || tok[0] == "R" || tok[0] == "T") {
      const std::size_t nx = tok[0] == "I" ? 2 : tok[0] == "R" ? 4 : 6;
      if (tok.size() < 4 + nx + 1) throw IoError("mesh line " + std::to_string(lineno) + ": short leaf record");
      MeshLeaf l;
      l.generation = static_cast<int>(parse_long(tok[1], lineno));
      if (tok[2] != "g" && tok[2] != "s") throw IoError("mesh line " + std::to_string(lineno) + ": bad split flag");
      l.safety = tok[2] == "s";
      l.error = parse_double(tok[3], lineno);
      std::vector<double> xs;
      for (std::size_t k = 0; k < nx; ++k) xs.push_back(parse_double(tok[4 + k], lineno));
      if (tok[0] == "I") {
        l.element = Interval1D{xs[0], xs[1], std::nullopt};
      } else if (tok[0] == "R") {
        l.element = RectElement{{xs[0], xs[1], std::nullopt}, {xs[2], xs[3], std::nullopt}};
      } else {
        TriElement t{{Point(xs[0], xs[1]), Point(xs[2], xs[3]), Point(xs[4], xs[5])}, -1, l.generation};
        l.element = t;
      }
      const long nc = parse_long(tok[4 + nx], lineno);
      if (nc < 0 || tok.size() != 5 + nx + static_cast<std::size_t>(nc))
        throw IoError("mesh line " + std::to_string(lineno) + ": coefficient count mismatch");
      for (long k = 0; k < nc; ++k) l.coefficients.push_back(parse_double(tok[5 + nx + k], lineno));
      doc.leaves.push_back(std::move(l));
    } else {
      throw IoError("mesh line " + std::to_string(lineno) + ": unknown record '" + tok[0] + "'");
    }
  }
  if (expected >= 0 && static_cast<std::size_t>(expected) != doc.leaves.size())
    throw IoError("mesh: header announces " + std::to_string(expected) + " leaves, found " +
                  std::to_string(doc.leaves.size()));
  return doc;
}

MeshDocument read_mesh(const std::string& path) { return parse_mesh(read_text(path)); }

// -------------------------------------------------------------------- SVG

namespace {

std::vector<Point> corners(const Element& e) {
  if (const auto* r = std::get_if<RectElement>(&e))
    return {{r->ix.lo, r->iy.lo}, {r->ix.hi, r->iy.lo}, {r->ix.hi, r->iy.hi}, {r->ix.lo, r->iy.hi}};
  if (const auto* t = std::get_if<TriElement>(&e)) return {t->v[0], t->v[1], t->v[2]};
  throw std::invalid_argument("write_svg: 2D meshes only");
}

std::string grey(double v) {
  const int g = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", g, g, g);
  return buf;
}

}  // namespace

std::string write_svg(const MeshDocument& doc, const SvgOptions& o) {
  double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf, hmin = kInf;
  double vmin = kInf, vmax = -kInf;
  for (const auto& l : doc.leaves) {
    for (const auto& z : corners(l.element)) {
      x0 = std::min(x0, z.x());
      x1 = std::max(x1, z.x());
      y0 = std::min(y0, z.y());
      y1 = std::max(y1, z.y());
    }
    hmin = std::min(hmin, measures(l.element).diameter);
    if (!l.coefficients.empty()) {
      vmin = std::min(vmin, l.coefficients[0]);
      vmax = std::max(vmax, l.coefficients[0]);
    }
  }
  if (doc.leaves.empty()) x0 = y0 = 0, x1 = y1 = 1, hmin = 1;
  const double span = std::max(x1 - x0, y1 - y0);
  const double s = o.size / span;
  const double w = (x1 - x0) * s, h = (y1 - y0) * s;
  const double stroke = std::clamp(0.1 * hmin * s, 0.02, 1.0);
  const KappaTable& kappa = o.kappa ? *o.kappa : default_kappa_table();

  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + format_real(w) + "\" height=\"" +
         format_real(h) + "\" viewBox=\"0 0 " + format_real(w) + " " + format_real(h) + "\">\n";
  out += "<g stroke=\"#000000\" stroke-width=\"" + format_real(stroke) + "\" stroke-linejoin=\"round\">\n";
  for (const auto& l : doc.leaves) {
    std::string fill = "#ffffff";
    if (o.coloring == Coloring::value && !l.coefficients.empty()) {
      fill = grey(vmax > vmin ? (l.coefficients[0] - vmin) / (vmax - vmin) : 0.5);
    } else if (o.coloring == Coloring::sigma_threshold) {
      if (const auto* t = std::get_if<TriElement>(&l.element))
        fill = std::isinf(o.threshold) || sigma_adaptation(o.q, *t, o.p, kappa) <= o.threshold ? "#ffffff"
                                                                                                : "#a0a0a0";
    }
    out += "<polygon points=\"";
    bool first = true;
    for (const auto& z : corners(l.element)) {
      if (!first) out += ' ';
      first = false;
      out += format_real((z.x() - x0) * s) + "," + format_real((y1 - z.y()) * s);
    }
    out += "\" fill=\"" + fill + "\"/>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

}  // namespace anisofit
