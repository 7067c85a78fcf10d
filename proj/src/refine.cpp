#include "anisofit/refine.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <map>
#include <stdexcept>

namespace anisofit {

// ---------------------------------------------------------------- names

namespace {

template <typename E>
const std::map<E, std::string>& names();

template <>
const std::map<Strategy, std::string>& names<Strategy>() {
  static const std::map<Strategy, std::string> m{{Strategy::greedy_1d, "greedy_1d"},
                                                 {Strategy::iso_quad, "iso_quad"},
                                                 {Strategy::iso_newest_vertex, "iso_newest_vertex"},
                                                 {Strategy::iso_longest_edge, "iso_longest_edge"},
                                                 {Strategy::aniso_rect, "aniso_rect"},
                                                 {Strategy::aniso_rect_modified, "aniso_rect_modified"},
                                                 {Strategy::aniso_tri, "aniso_tri"},
                                                 {Strategy::aniso_tri_modified, "aniso_tri_modified"}};
  return m;
}
template <>
const std::map<DecisionNorm, std::string>& names<DecisionNorm>() {
  static const std::map<DecisionNorm, std::string> m{{DecisionNorm::lp, "lp"},
                                                     {DecisionNorm::l2_projection, "l2_projection"},
                                                     {DecisionNorm::linf_interpolation, "linf_interpolation"}};
  return m;
}
template <>
const std::map<SafetyKind, std::string>& names<SafetyKind>() {
  static const std::map<SafetyKind, std::string> m{{SafetyKind::longest_edge, "longest_edge"},
                                                   {SafetyKind::newest_vertex, "newest_vertex"}};
  return m;
}
template <>
const std::map<RootKind, std::string>& names<RootKind>() {
  static const std::map<RootKind, std::string> m{{RootKind::automatic, "automatic"},
                                                 {RootKind::domain, "domain"},
                                                 {RootKind::diagonal, "diagonal"},
                                                 {RootKind::crisscross, "crisscross"},
                                                 {RootKind::equilateral, "equilateral"}};
  return m;
}

template <typename E>
E parse_name(const std::string& s, const char* what) {
  for (const auto& [k, v] : names<E>())
    if (v == s) return k;
  throw std::invalid_argument(std::string("unknown ") + what + " '" + s + "'");
}

std::string real_text(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

}  // namespace

std::string to_string(Strategy s) { return names<Strategy>().at(s); }
std::string to_string(DecisionNorm d) { return names<DecisionNorm>().at(d); }
std::string to_string(SafetyKind s) { return names<SafetyKind>().at(s); }
std::string to_string(RootKind r) { return names<RootKind>().at(r); }
Strategy parse_strategy(const std::string& s) { return parse_name<Strategy>(s, "strategy"); }
DecisionNorm parse_decision_norm(const std::string& s) { return parse_name<DecisionNorm>(s, "decision norm"); }
SafetyKind parse_safety_kind(const std::string& s) { return parse_name<SafetyKind>(s, "safety kind"); }
RootKind parse_root_kind(const std::string& s) { return parse_name<RootKind>(s, "root kind"); }

bool uses_triangles(Strategy s) {
  return s == Strategy::iso_newest_vertex || s == Strategy::iso_longest_edge || s == Strategy::aniso_tri ||
         s == Strategy::aniso_tri_modified;
}
bool uses_rectangles(Strategy s) { return s == Strategy::aniso_rect || s == Strategy::aniso_rect_modified; }

void RefineConfig::validate() const {
  if (m < 1 || m > 3) throw std::invalid_argument("m must be 1, 2 or 3");
  if (!(p >= 1.0)) throw std::invalid_argument("p must lie in [1, inf]");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0, 1)");
  if (decision_norm == DecisionNorm::linf_interpolation && (!uses_triangles(strategy) || m != 2))
    throw std::invalid_argument("linf_interpolation decisions need triangles and m = 2");
  if (max_N < 1) throw std::invalid_argument("max_N must be positive");
}

std::string RefineConfig::echo() const {
  return "m=" + std::to_string(m) + " p=" + real_text(p) + " strategy=" + to_string(strategy) +
         " decision=" + to_string(decision_norm) + " rho=" + real_text(rho) + " safety=" + to_string(safety) +
         " root=" + to_string(root) + " lattice=" + std::to_string(fit.lattice) +
         " gauss=" + std::to_string(fit.gauss_points) + " tri_depth=" + std::to_string(fit.tri_depth) +
         " sharp_tri_depth=" + std::to_string(fit.sharp_tri_depth) +
         " linf=" + (fit.linf_mode == LinfMode::minimax ? "minimax" : "l2_residual") +
         " N=" + std::to_string(max_N);
}

// ------------------------------------------------------------------ tree

int PartitionTree::add_node(TreeNode n) {
  const int id = static_cast<int>(nodes_.size());
  n.creation = id;
  if (n.parent < 0) {
    roots_.push_back(id);
  } else {
    auto& par = nodes_[static_cast<std::size_t>(n.parent)];
    if (par.children.empty()) --leaves_;
    par.children.push_back(id);
  }
  ++leaves_;
  nodes_.push_back(std::move(n));
  return id;
}

std::vector<int> PartitionTree::leaves() const {
  std::vector<int> out;
  out.reserve(leaves_);
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].is_leaf()) out.push_back(static_cast<int>(i));
  return out;
}

void PartitionTree::enqueue(int id) {
  const auto& n = node(id);
  queue_.push({n.fit.error, n.creation, id});
}

int PartitionTree::top() const {
  while (!queue_.empty() && !node(queue_.top().id).is_leaf()) queue_.pop();
  if (queue_.empty()) throw std::logic_error("partition tree has no queued leaf");
  return queue_.top().id;
}

double PartitionTree::global_error(double p) const {
  double acc = 0.0;
  for (const auto& n : nodes_) {
    if (!n.is_leaf()) continue;
    const double e = n.fit.error;
    if (std::isinf(p))
      acc = std::max(acc, e);
    else
      acc += p == 2.0 ? e * e : std::pow(e, p);
  }
  if (std::isinf(p)) return acc;
  return p == 2.0 ? std::sqrt(acc) : std::pow(acc, 1.0 / p);
}

double PartitionTree::root_area() const {
  double a = 0.0;
  for (int r : roots_) a += area(node(r).element);
  return a;
}

// ------------------------------------------------------------- splitting

namespace {

// kind: axis or vertex for binary splits, -1 for the strategy's fixed split
std::vector<Element> split_element(const Element& e, int kind, Strategy s) {
  if (const auto* in = std::get_if<Interval1D>(&e)) {
    auto [a, b] = split_interval(*in);
    return {a, b};
  }
  if (const auto* r = std::get_if<RectElement>(&e)) {
    if (kind < 0) return iso_split(e, IsoRule::quad_split);
    auto [a, b] = split_rect(*r, static_cast<Axis>(kind));
    return {a, b};
  }
  const auto& t = std::get<TriElement>(e);
  if (kind < 0) {
    if (s == Strategy::iso_quad) return iso_split(e, IsoRule::quad_split);
    return iso_split(e, s == Strategy::iso_newest_vertex ? IsoRule::newest_vertex : IsoRule::longest_edge);
  }
  auto [a, b] = bisect_triangle(t, kind);
  return {a, b};
}

std::vector<std::vector<std::uint32_t>> split_pixels(const RasterImage& img, const Element& e, int kind,
                                                     Strategy s, const std::vector<std::uint32_t>& px) {
  std::vector<std::vector<std::uint32_t>> out;
  if (const auto* r = std::get_if<RectElement>(&e)) {
    out.resize(kind < 0 ? 4 : 2);
    for (auto idx : px) {
      const Point z = img.center(idx);
      out[kind < 0 ? quad_child_of(*r, z) : child_of(*r, static_cast<Axis>(kind), z)].push_back(idx);
    }
    return out;
  }
  const auto& t = std::get<TriElement>(e);
  int vertex = kind;
  if (kind < 0 && s != Strategy::iso_quad)
    vertex = s == Strategy::iso_newest_vertex ? newest_vertex_or_longest(t) : longest_edge_vertex(t);
  out.resize(vertex < 0 ? 4 : 2);
  for (auto idx : px) {
    const Point z = img.center(idx);
    out[vertex < 0 ? quad_child_of(t, z) : child_of(t, vertex, z)].push_back(idx);
  }
  return out;
}

struct Candidate {
  int kind = -1;
  std::vector<Element> kids;
  std::vector<std::vector<std::uint32_t>> px;
  std::vector<LocalFit> fits;  // queue fits, filled when the decision used them
  double value = 0.0;          // combined decision quantity
};

LocalFit queue_fit(const TargetFunction& f, const Element& e, const RefineConfig& cfg,
                   const std::vector<std::uint32_t>* px) {
  return fit_local(f, e, cfg.m, cfg.p, cfg.fit, px);
}

// Decision quantity of one element; fills *fit when it is the queue fit.
double decision_value(const TargetFunction& f, const Element& e, const RefineConfig& cfg,
                      const std::vector<std::uint32_t>* px, LocalFit* fit) {
  switch (cfg.decision_norm) {
    case DecisionNorm::lp: {
      auto q = queue_fit(f, e, cfg, px);
      const double v = q.error;
      if (fit) *fit = std::move(q);
      return v;
    }
    case DecisionNorm::l2_projection:
      return fit_local(f, e, cfg.m, 2.0, cfg.fit, px).error;
    case DecisionNorm::linf_interpolation:
      return interpolate_linear(f, std::get<TriElement>(e), cfg.fit.lattice).error;
  }
  return 0.0;
}

double combine(const std::vector<double>& v, const RefineConfig& cfg) {
  double acc = 0.0;
  switch (cfg.decision_norm) {
    case DecisionNorm::linf_interpolation:
      for (double x : v) acc += x;
      return acc;
    case DecisionNorm::l2_projection:
      for (double x : v) acc += x * x;
      return std::sqrt(acc);
    case DecisionNorm::lp:
      if (std::isinf(cfg.p)) {
        for (double x : v) acc = std::max(acc, x);
        return acc;
      }
      for (double x : v) acc += std::pow(x, cfg.p);
      return std::pow(acc, 1.0 / cfg.p);
  }
  return acc;
}

Candidate evaluate(const TargetFunction& f, const Element& e, int kind, const RefineConfig& cfg,
                   const std::vector<std::uint32_t>* px) {
  Candidate c;
  c.kind = kind;
  c.kids = split_element(e, kind, cfg.strategy);
  if (f.raster && px) c.px = split_pixels(*f.raster, e, kind, cfg.strategy, *px);
  std::vector<double> vals;
  for (std::size_t k = 0; k < c.kids.size(); ++k) {
    LocalFit fit;
    const auto* kpx = c.px.empty() ? nullptr : &c.px[k];
    vals.push_back(decision_value(f, c.kids[k], cfg, kpx, &fit));
    if (cfg.decision_norm == DecisionNorm::lp) c.fits.push_back(std::move(fit));
  }
  c.value = combine(vals, cfg);
  return c;
}

bool is_modified(Strategy s) { return s == Strategy::aniso_rect_modified || s == Strategy::aniso_tri_modified; }

struct Plan {
  int kind = -1;
  bool safety = false;
  Candidate chosen;
};

Plan plan_rect(const TargetFunction& f, const RectElement& t, const RefineConfig& cfg,
               const std::vector<std::uint32_t>* px, RectDecision* report) {
  const Element e = t;
  Candidate h = evaluate(f, e, static_cast<int>(Axis::halve_y), cfg, px);
  Candidate v = evaluate(f, e, static_cast<int>(Axis::halve_x), cfg, px);
  RectDecision d;
  d.e_h = h.value;
  d.e_v = v.value;
  d.axis = d.e_h <= d.e_v ? Axis::halve_y : Axis::halve_x;
  if (is_modified(cfg.strategy)) {
    d.e_T = decision_value(f, e, cfg, px, nullptr);
    if (std::min(d.e_h, d.e_v) > cfg.rho * d.e_T) {
      d.safety = true;
      d.axis = t.width() <= t.height() ? Axis::halve_y : Axis::halve_x;
    }
  }
  if (report) *report = d;
  Plan plan{static_cast<int>(d.axis), d.safety, {}};
  plan.chosen = std::move(d.axis == Axis::halve_y ? h : v);
  return plan;
}

Plan plan_tri(const TargetFunction& f, const TriElement& t, const RefineConfig& cfg,
              const std::vector<std::uint32_t>* px, TriDecision* report) {
  const Element e = t;
  std::array<Candidate, 3> c;
  TriDecision d;
  for (int i = 0; i < 3; ++i) {
    c[i] = evaluate(f, e, i, cfg, px);
    d.e[i] = c[i].value;
  }
  d.vertex = 0;
  for (int i = 1; i < 3; ++i)
    if (d.e[i] < d.e[d.vertex]) d.vertex = i;
  if (is_modified(cfg.strategy)) {
    d.e_T = decision_value(f, e, cfg, px, nullptr);
    if (d.e[d.vertex] > cfg.rho * d.e_T) {
      d.safety = true;
      d.vertex = cfg.safety == SafetyKind::newest_vertex ? newest_vertex_or_longest(t) : longest_edge_vertex(t);
    }
  }
  if (report) *report = d;
  Plan plan{d.vertex, d.safety, {}};
  plan.chosen = std::move(c[d.vertex]);
  return plan;
}

Plan plan_split(const TargetFunction& f, const TreeNode& n, const RefineConfig& cfg) {
  const auto* px = f.raster ? &n.pixels : nullptr;
  if (uses_rectangles(cfg.strategy)) {
    if (const auto* r = std::get_if<RectElement>(&n.element)) return plan_rect(f, *r, cfg, px, nullptr);
    throw std::invalid_argument("rectangle strategy on a non-rectangular element");
  }
  if (cfg.strategy == Strategy::aniso_tri || cfg.strategy == Strategy::aniso_tri_modified) {
    if (const auto* t = std::get_if<TriElement>(&n.element)) return plan_tri(f, *t, cfg, px, nullptr);
    throw std::invalid_argument("triangle strategy on a non-triangular element");
  }
  // fixed splits: no decision to make
  Plan plan;
  plan.chosen.kind = -1;
  plan.chosen.kids = split_element(n.element, -1, cfg.strategy);
  if (f.raster) plan.chosen.px = split_pixels(*f.raster, n.element, -1, cfg.strategy, n.pixels);
  if (const auto* t = std::get_if<TriElement>(&n.element); t && cfg.strategy != Strategy::iso_quad)
    plan.kind = cfg.strategy == Strategy::iso_newest_vertex ? newest_vertex_or_longest(*t) : longest_edge_vertex(*t);
  return plan;
}

void apply_plan(PartitionTree& tree, int id, Plan&& plan, const TargetFunction& f, const RefineConfig& cfg,
                SplitReport* rep) {
  {
    auto& n = tree.node(id);
    n.split = plan.kind;
    n.safety = plan.safety;
    if (rep) {
      rep->leaf = id;
      rep->decision = plan.kind;
      rep->safety = plan.safety;
      rep->parent_error = n.fit.error;
    }
  }
  auto& c = plan.chosen;
  for (std::size_t k = 0; k < c.kids.size(); ++k) {
    TreeNode child;
    child.element = c.kids[k];
    child.parent = id;
    child.born_of_safety = plan.safety;
    if (!c.px.empty()) child.pixels = std::move(c.px[k]);
    child.fit = k < c.fits.size() ? std::move(c.fits[k])
                                  : queue_fit(f, child.element, cfg, f.raster ? &child.pixels : nullptr);
    const int cid = tree.add_node(std::move(child));
    tree.enqueue(cid);
    if (rep) {
      rep->children.push_back(cid);
      rep->child_errors.push_back(tree.node(cid).fit.error);
    }
  }
}

std::vector<Element> root_elements(const TargetFunction& f, const RefineConfig& cfg) {
  if (const auto* in = std::get_if<Interval1D>(&f.domain)) {
    if (cfg.strategy != Strategy::greedy_1d) throw std::invalid_argument("1D targets need greedy_1d");
    return {*in};
  }
  if (cfg.strategy == Strategy::greedy_1d) throw std::invalid_argument("greedy_1d needs a 1D target");
  RootKind kind = cfg.root;
  if (kind == RootKind::automatic)
    kind = uses_triangles(cfg.strategy) ? RootKind::diagonal : RootKind::domain;
  if (uses_rectangles(cfg.strategy) && kind != RootKind::domain)
    throw std::invalid_argument("rectangle strategies start from the domain rectangle");
  if (uses_triangles(cfg.strategy) && kind == RootKind::domain)
    throw std::invalid_argument("triangle strategies need a triangular root");
  if (kind == RootKind::equilateral) return {unit_equilateral<double>()};
  const auto* dom = std::get_if<RectElement>(&f.domain);
  if (!dom) {
    if (const auto* t = std::get_if<TriElement>(&f.domain)) return {*t};
    throw std::invalid_argument("unsupported domain");
  }
  if (kind == RootKind::domain) return {*dom};
  std::vector<Element> out;
  for (const auto& t : kind == RootKind::crisscross ? crisscross_split(*dom) : diagonal_split(*dom))
    out.emplace_back(t);
  return out;
}

}  // namespace

RectDecision decide_rect(const TargetFunction& f, const RectElement& t, const RefineConfig& cfg,
                         const std::vector<std::uint32_t>* pixels) {
  RectDecision d;
  plan_rect(f, t, cfg, pixels, &d);
  return d;
}

TriDecision decide_tri(const TargetFunction& f, const TriElement& t, const RefineConfig& cfg,
                       const std::vector<std::uint32_t>* pixels) {
  TriDecision d;
  plan_tri(f, t, cfg, pixels, &d);
  return d;
}

// ---------------------------------------------------------------- engine

PartitionTree init_tree(const TargetFunction& f, const RefineConfig& cfg) {
  cfg.validate();
  PartitionTree tree(cfg.strategy, cfg.m);
  const auto roots = root_elements(f, cfg);
  std::vector<bool> taken;
  if (f.raster) taken.assign(f.raster->size(), false);
  for (const auto& e : roots) {
    TreeNode n;
    n.element = e;
    if (f.raster) {
      // each pixel goes to the first root containing it
      for (auto idx : pixels_in(*f.raster, e))
        if (!taken[idx]) {
          taken[idx] = true;
          n.pixels.push_back(idx);
        }
    }
    n.fit = queue_fit(f, e, cfg, f.raster ? &n.pixels : nullptr);
    tree.enqueue(tree.add_node(std::move(n)));
  }
  return tree;
}

int select_leaf(const PartitionTree& tree) { return tree.top(); }

SplitReport refine_step(PartitionTree& tree, const TargetFunction& f, const RefineConfig& cfg) {
  const int id = tree.top();
  SplitReport rep;
  apply_plan(tree, id, plan_split(f, tree.node(id), cfg), f, cfg, &rep);
  return rep;
}

void refine_uniform(PartitionTree& tree, const TargetFunction& f, const RefineConfig& cfg) {
  for (int id : tree.leaves()) apply_plan(tree, id, plan_split(f, tree.node(id), cfg), f, cfg, nullptr);
}

RunResult run_to_N(const TargetFunction& f, const RefineConfig& cfg) {
  RunResult run{init_tree(f, cfg), {}, 0, 0};
  auto& tree = run.tree;
  auto record = [&] {
    run.trace.push_back({tree.leaf_count(), tree.global_error(cfg.p), tree.node(tree.top()).fit.error});
  };
  record();
  std::size_t next = 1024;
  while (tree.leaf_count() < cfg.max_N) {
    const auto rep = refine_step(tree, f, cfg);
    ++run.splits;
    if (rep.safety) ++run.safety_splits;
    const std::size_t n = tree.leaf_count();
    if (n < 1024) {
      record();
    } else if (n >= next || n >= cfg.max_N) {
      record();
      next = std::max(next + 1, static_cast<std::size_t>(std::ceil(static_cast<double>(n) * 1.05)));
    }
  }
  return run;
}

void refit(PartitionTree& tree, const TargetFunction& f, const RefineConfig& cfg) {
  if (f.raster) {
    // rebuild the pixel partition top-down
    std::vector<bool> taken(f.raster->size(), false);
    for (int r : tree.roots()) {
      auto& n = tree.node(r);
      n.pixels.clear();
      for (auto idx : pixels_in(*f.raster, n.element))
        if (!taken[idx]) {
          taken[idx] = true;
          n.pixels.push_back(idx);
        }
    }
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
      auto& n = tree.node(static_cast<int>(i));
      if (n.is_leaf()) continue;
      auto parts = split_pixels(*f.raster, n.element, n.split, tree.strategy(), n.pixels);
      for (std::size_t k = 0; k < n.children.size(); ++k) tree.node(n.children[k]).pixels = std::move(parts[k]);
    }
  }
  for (std::size_t i = 0; i < tree.node_count(); ++i) {
    auto& n = tree.node(static_cast<int>(i));
    n.fit = queue_fit(f, n.element, cfg, f.raster ? &n.pixels : nullptr);
    if (n.is_leaf()) tree.enqueue(static_cast<int>(i));
  }
}

// ------------------------------------------------------------------ codec

namespace {

constexpr std::uint8_t kVersion = 1;

int code_bits(Strategy s) {
  if (uses_rectangles(s)) return 1;
  if (s == Strategy::aniso_tri || s == Strategy::aniso_tri_modified) return 2;
  return 0;
}

class BitWriter {
 public:
  void put(unsigned v, int bits) {
    for (int b = bits - 1; b >= 0; --b) {
      if (count_ % 8 == 0) bytes_.push_back(0);
      if ((v >> b) & 1u) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (count_ % 8));
      ++count_;
    }
  }
  std::size_t count() const { return count_; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t count_ = 0;
};

class BitReader {
 public:
  BitReader(const std::uint8_t* data, std::size_t nbits) : data_(data), nbits_(nbits) {}
  unsigned get(int bits) {
    unsigned v = 0;
    for (int b = 0; b < bits; ++b) {
      if (pos_ >= nbits_) throw DecodeError("tree stream truncated", pos_);
      v = (v << 1) | ((data_[pos_ / 8] >> (7 - pos_ % 8)) & 1u);
      ++pos_;
    }
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::uint8_t* data_;
  std::size_t nbits_;
  std::size_t pos_ = 0;
};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

struct ByteReader {
  const std::vector<std::uint8_t>& in;
  std::size_t pos = 0;
  template <typename T>
  T get() {
    if (pos + sizeof(T) > in.size()) throw DecodeError("tree header truncated", pos * 8);
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, in.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    pos += sizeof(T);
    return v;
  }
};

void put_interval(std::vector<std::uint8_t>& out, const Interval1D& in) {
  put_le(out, in.lo);
  put_le(out, in.hi);
  put_le<std::uint8_t>(out, in.dyadic ? 1 : 0);
  if (in.dyadic) {
    put_le<std::int32_t>(out, in.dyadic->level);
    put_le<std::int64_t>(out, in.dyadic->index);
  }
}

Interval1D get_interval(ByteReader& r) {
  Interval1D in;
  in.lo = r.get<double>();
  in.hi = r.get<double>();
  if (r.get<std::uint8_t>()) {
    const auto level = r.get<std::int32_t>();
    const auto index = r.get<std::int64_t>();
    in.dyadic = DyadicId{level, index};
  }
  return in;
}

void encode_node(const PartitionTree& tree, int id, int bits, BitWriter& w) {
  const auto& n = tree.node(id);
  w.put(n.is_leaf() ? 0 : 1, 1);
  if (n.is_leaf()) return;
  if (bits > 0) w.put(static_cast<unsigned>(n.split), bits);
  for (int c : n.children) encode_node(tree, c, bits, w);
}

}  // namespace

std::size_t payload_bits(const PartitionTree& tree) {
  BitWriter w;
  for (int r : tree.roots()) encode_node(tree, r, code_bits(tree.strategy()), w);
  return w.count();
}

std::vector<std::uint8_t> encode_tree(const PartitionTree& tree) {
  std::vector<std::uint8_t> out{'A', 'F', 'T', 'B', kVersion, static_cast<std::uint8_t>(tree.strategy()),
                                static_cast<std::uint8_t>(tree.degree())};
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tree.roots().size()));
  for (int r : tree.roots()) {
    const auto& e = tree.node(r).element;
    if (const auto* in = std::get_if<Interval1D>(&e)) {
      out.push_back(0);
      put_interval(out, *in);
    } else if (const auto* rc = std::get_if<RectElement>(&e)) {
      out.push_back(1);
      put_interval(out, rc->ix);
      put_interval(out, rc->iy);
    } else {
      const auto& t = std::get<TriElement>(e);
      out.push_back(2);
      for (const auto& v : t.v) {
        put_le(out, v.x());
        put_le(out, v.y());
      }
      put_le<std::int8_t>(out, static_cast<std::int8_t>(t.newest));
      put_le<std::int32_t>(out, t.generation);
    }
  }
  BitWriter w;
  for (int r : tree.roots()) encode_node(tree, r, code_bits(tree.strategy()), w);
  put_le<std::uint64_t>(out, w.count());
  out.insert(out.end(), w.bytes().begin(), w.bytes().end());
  return out;
}

PartitionTree decode_tree(const std::vector<std::uint8_t>& bytes) {
  ByteReader br{bytes};
  if (bytes.size() < 7 || std::memcmp(bytes.data(), "AFTB", 4) != 0) throw DecodeError("not a tree stream", 0);
  br.pos = 4;
  if (br.get<std::uint8_t>() != kVersion) throw DecodeError("unsupported tree stream version", 32);
  const auto sraw = br.get<std::uint8_t>();
  if (sraw > static_cast<std::uint8_t>(Strategy::aniso_tri_modified))
    throw DecodeError("unknown strategy code", 40);
  const auto strategy = static_cast<Strategy>(sraw);
  const int m = br.get<std::uint8_t>();
  PartitionTree tree(strategy, m);
  const auto nroots = br.get<std::uint32_t>();
  std::vector<Element> roots;
  for (std::uint32_t k = 0; k < nroots; ++k) {
    const auto kind = br.get<std::uint8_t>();
    if (kind == 0) {
      roots.emplace_back(get_interval(br));
    } else if (kind == 1) {
      RectElement r;
      r.ix = get_interval(br);
      r.iy = get_interval(br);
      roots.emplace_back(r);
    } else if (kind == 2) {
      TriElement t;
      for (auto& v : t.v) {
        v.x() = br.get<double>();
        v.y() = br.get<double>();
      }
      t.newest = br.get<std::int8_t>();
      t.generation = br.get<std::int32_t>();
      roots.emplace_back(t);
    } else {
      throw DecodeError("unknown root element kind", (br.pos - 1) * 8);
    }
  }
  const auto nbits = br.get<std::uint64_t>();
  const std::size_t header_bits = br.pos * 8;
  if ((nbits + 7) / 8 > bytes.size() - br.pos)
    throw DecodeError("tree payload truncated: header announces " + std::to_string(nbits) + " bits", header_bits);
  BitReader bits(bytes.data() + br.pos, nbits);
  const int cb = code_bits(strategy);

  // explicit stack keeps deep trees off the call stack
  for (const auto& e : roots) {
    TreeNode root;
    root.element = e;
    root.fit.element = e;
    std::vector<int> stack{tree.add_node(std::move(root))};
    while (!stack.empty()) {
      const int id = stack.back();
      stack.pop_back();
      const std::size_t at = bits.pos();
      if (bits.get(1) == 0) continue;
      int kind = -1;
      if (cb > 0) {
        kind = static_cast<int>(bits.get(cb));
        if (cb == 2 && kind == 3) throw DecodeError("invalid triangle split code 3", header_bits + at + 1);
      }
      const Element parent = tree.node(id).element;
      if (cb == 1 && !std::holds_alternative<RectElement>(parent))
        throw DecodeError("axis code on a non-rectangle", header_bits + at);
      if (cb == 2 && !std::holds_alternative<TriElement>(parent))
        throw DecodeError("vertex code on a non-triangle", header_bits + at);
      auto kids = split_element(parent, kind, strategy);
      int stored = kind;
      if (kind < 0 && uses_triangles(strategy))
        stored = strategy == Strategy::iso_newest_vertex ? newest_vertex_or_longest(std::get<TriElement>(parent))
                                                         : longest_edge_vertex(std::get<TriElement>(parent));
      tree.node(id).split = stored;
      std::vector<int> ids;
      for (auto& k : kids) {
        TreeNode c;
        c.element = k;
        c.fit.element = k;
        c.parent = id;
        ids.push_back(tree.add_node(std::move(c)));
      }
      // preorder: first child on top
      for (auto it = ids.rbegin(); it != ids.rend(); ++it) stack.push_back(*it);
    }
  }
  if (bits.pos() != nbits) throw DecodeError("trailing bits after the last tree", header_bits + bits.pos());
  return tree;
}

std::uint64_t tree_hash(const PartitionTree& tree) {
  std::uint64_t h = 1469598103934665603ull;
  for (auto b : encode_tree(tree)) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace anisofit
