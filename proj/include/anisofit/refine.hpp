// Greedy refinement: partition tree, max-error selection, split decision
// rules, and the tree bitstream codec.

#pragma once

#include "anisofit/geometry.hpp"
#include "anisofit/localerr.hpp"
#include "anisofit/targets.hpp"

#include <array>
#include <cstdint>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace anisofit {

enum class Strategy : std::uint8_t {
  greedy_1d,
  iso_quad,
  iso_newest_vertex,
  iso_longest_edge,
  aniso_rect,
  aniso_rect_modified,
  aniso_tri,
  aniso_tri_modified,
};

enum class DecisionNorm : std::uint8_t { lp, l2_projection, linf_interpolation };
enum class SafetyKind : std::uint8_t { longest_edge, newest_vertex };

/// Initial partition. `automatic` picks the domain itself for intervals and
/// rectangle strategies and the diagonal split for triangle strategies.
enum class RootKind : std::uint8_t { automatic, domain, diagonal, crisscross, equilateral };

std::string to_string(Strategy s);
std::string to_string(DecisionNorm d);
std::string to_string(SafetyKind s);
std::string to_string(RootKind r);
Strategy parse_strategy(const std::string& s);
DecisionNorm parse_decision_norm(const std::string& s);
SafetyKind parse_safety_kind(const std::string& s);
RootKind parse_root_kind(const std::string& s);

bool uses_triangles(Strategy s);
bool uses_rectangles(Strategy s);

struct RefineConfig {
  int m = 1;
  double p = 2.0;
  Strategy strategy = Strategy::greedy_1d;
  DecisionNorm decision_norm = DecisionNorm::lp;
  double rho = 1.0 / std::numbers::sqrt2;
  SafetyKind safety = SafetyKind::longest_edge;
  RootKind root = RootKind::automatic;
  FitOptions fit;
  std::size_t max_N = 1024;

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
  /// One-line `key=value` echo for run metadata.
  std::string echo() const;
};

struct TreeNode {
  Element element;
  int parent = -1;
  std::vector<int> children;
  int split = -1;       // rect axis (0 = halve_x, 1 = halve_y) or bisection vertex; -1 for fixed splits
  bool safety = false;  // this node was split by a safety split
  LocalFit fit;
  std::int64_t creation = 0;
  std::vector<std::uint32_t> pixels;  // raster targets only
  bool born_of_safety = false;        // produced by a safety split

  bool is_leaf() const { return children.empty(); }
};

class PartitionTree {
 public:
  PartitionTree() = default;
  PartitionTree(Strategy s, int m) : strategy_(s), m_(m) {}

  Strategy strategy() const { return strategy_; }
  int degree() const { return m_; }

  int add_node(TreeNode n);
  const TreeNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  TreeNode& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t node_count() const { return nodes_.size(); }
  const std::vector<int>& roots() const { return roots_; }

  std::size_t leaf_count() const { return leaves_; }
  /// Leaves in creation order.
  std::vector<int> leaves() const;

  /// Leaf with the largest cached error; ties go to the oldest leaf.
  int top() const;
  void enqueue(int id);

  /// (sum_T e_T^p)^{1/p}, or max_T e_T for p = inf, in creation order.
  double global_error(double p) const;
  double root_area() const;

 private:
  struct Key {
    double error;
    std::int64_t creation;
    int id;
    bool operator<(const Key& o) const {
      if (error != o.error) return error < o.error;
      return creation > o.creation;
    }
  };
  Strategy strategy_ = Strategy::greedy_1d;
  int m_ = 1;
  std::vector<TreeNode> nodes_;
  std::vector<int> roots_;
  std::size_t leaves_ = 0;
  mutable std::priority_queue<Key> queue_;
};

// ------------------------------------------------------------- decisions

struct RectDecision {
  Axis axis = Axis::halve_y;
  bool safety = false;
  double e_h = 0.0;  // candidate error after halve_y (horizontal cut)
  double e_v = 0.0;  // candidate error after halve_x (vertical cut)
  double e_T = 0.0;
};

struct TriDecision {
  int vertex = 0;
  bool safety = false;
  std::array<double, 3> e{};  // candidate errors per bisection vertex
  double e_T = 0.0;
};

RectDecision decide_rect(const TargetFunction& f, const RectElement& t, const RefineConfig& cfg,
                         const std::vector<std::uint32_t>* pixels = nullptr);
TriDecision decide_tri(const TargetFunction& f, const TriElement& t, const RefineConfig& cfg,
                       const std::vector<std::uint32_t>* pixels = nullptr);

// ------------------------------------------------------------ the engine

/// Builds the initial partition with fitted, enqueued leaves.
PartitionTree init_tree(const TargetFunction& f, const RefineConfig& cfg);

int select_leaf(const PartitionTree& tree);

struct SplitReport {
  int leaf = -1;
  int decision = -1;  // axis / vertex / -1
  bool safety = false;
  double parent_error = 0.0;
  std::vector<double> child_errors;
  std::vector<int> children;
};

SplitReport refine_step(PartitionTree& tree, const TargetFunction& f, const RefineConfig& cfg);

/// Splits every leaf once (isotropic rule for the strategy).
void refine_uniform(PartitionTree& tree, const TargetFunction& f, const RefineConfig& cfg);

struct TracePoint {
  std::size_t N;
  double error;
  double eta;  // largest local error
};

struct RunResult {
  PartitionTree tree;
  std::vector<TracePoint> trace;
  std::size_t safety_splits = 0;
  std::size_t splits = 0;
};

/// Refines until the leaf count reaches cfg.max_N. The trace has every step
/// below N = 1024 and geometric checkpoints (ratio 1.05) beyond.
RunResult run_to_N(const TargetFunction& f, const RefineConfig& cfg);

/// Recomputes all cached fits (e.g. after decoding).
void refit(PartitionTree& tree, const TargetFunction& f, const RefineConfig& cfg);

// ------------------------------------------------------------------ codec
//
// Header (little endian): "AFTB", version u8, strategy u8, degree u8,
// root count u32, then per root a kind byte and its float64 coordinates
// (triangles also carry newest i8 and generation i32), then the payload bit
// count u64. Payload, MSB first, preorder over each root: 1 bit
// internal/leaf, then for internal nodes the split code (1 bit rect axis,
// 2 bits triangle vertex, nothing for fixed splits).

std::vector<std::uint8_t> encode_tree(const PartitionTree& tree);
/// Payload bits only (no header).
std::size_t payload_bits(const PartitionTree& tree);

/// Throws DecodeError (with bit offset) on malformed input. Decoded leaves
/// carry no fits; call refit to populate them.
PartitionTree decode_tree(const std::vector<std::uint8_t>& bytes);

struct DecodeError : std::runtime_error {
  DecodeError(const std::string& what, std::size_t bit) : std::runtime_error(what), bit_offset(bit) {}
  std::size_t bit_offset;
};

/// FNV-1a of the encoded bitstream; equal trees hash equal.
std::uint64_t tree_hash(const PartitionTree& tree);

}  // namespace anisofit
