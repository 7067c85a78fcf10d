// File formats: PGM input, the textual mesh document, SVG output.

#pragma once

#include "anisofit/refine.hpp"
#include "anisofit/shape.hpp"
#include "anisofit/targets.hpp"

#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace anisofit {

/// Unreadable or malformed files.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// P2 or P5, maxval <= 65535; samples scaled to [0, 1].
RasterImage parse_pgm(const std::string& bytes);
RasterImage read_pgm(const std::string& path);
/// Binary P5 with maxval 255.
std::string format_pgm(const RasterImage& img);
void write_pgm(const RasterImage& img, const std::string& path);

struct MeshLeaf {
  Element element;
  int generation = 0;
  bool safety = false;  // produced by a safety split
  double error = 0.0;
  std::vector<double> coefficients;
};

struct MeshDocument {
  std::vector<std::pair<std::string, std::string>> meta;  // ordered key/value lines
  int m = 1;
  std::vector<MeshLeaf> leaves;

  const std::string* find(const std::string& key) const;
};

MeshDocument mesh_from_tree(const PartitionTree& tree, std::vector<std::pair<std::string, std::string>> meta = {});

/// Line-oriented text; floats in shortest round-trip form.
std::string format_mesh(const MeshDocument& doc);
MeshDocument parse_mesh(const std::string& text);
MeshDocument read_mesh(const std::string& path);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

enum class Coloring { none, value, sigma_threshold };

struct SvgOptions {
  Coloring coloring = Coloring::none;
  QuadForm2<double> q{1.0, 0.0, 1.0};
  double threshold = 2.0;
  double p = 2.0;
  int size = 800;  // pixels along the longer side
  const KappaTable* kappa = nullptr;  // default table when null
};

/// One polygon per leaf.
std::string write_svg(const MeshDocument& doc, const SvgOptions& o = {});

}  // namespace anisofit
