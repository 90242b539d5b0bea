#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "d2d/grid.hpp"
#include "d2d/tensor_io.hpp"

namespace d2d {

enum class SaliencyKind { AS, RS, D2D, External };

const char* to_string(SaliencyKind kind);
SaliencyKind saliency_kind_from_string(const std::string& s);

/// Scalar score per descriptor-grid cell.
struct SaliencyMap {
  Grid<double> values;
  SaliencyKind kind = SaliencyKind::External;
  GridGeometry geometry;
  ImageSize image_size;

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t cols() const noexcept { return values.cols(); }
};

enum class WindowWeights { Uniform, Gaussian };

struct Offset {
  int dx = 0;
  int dy = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

/// Neighbourhood sampled by the relative-saliency operator. Offsets form
/// the lattice {-r, -r+s, ...} (values <= r) on each axis, minus (0, 0).
/// r = 5, s = 2 gives {-5,-3,-1,1,3,5}^2: 36 neighbours, the furthest
/// 5 cells (20 px at stride 4) from the center.
struct RsWindow {
  int radius = 5;
  int sample_step = 2;
  WindowWeights weights = WindowWeights::Uniform;
  double sigma = 2.0;  // Gaussian only, in grid units

  void validate() const;
  /// Row-major (dy outer, dx inner) ascending.
  std::vector<Offset> offsets() const;
  double weight(Offset o) const;
};

/// Standard deviation of each cell's channels (population variance, C in
/// the denominator). Requires raw, unnormalized descriptors.
SaliencyMap absolute_saliency(const DescriptorMap& map);

/// Mean weighted L2 distance from every cell to its in-grid window
/// neighbours. Each unordered neighbour pair is evaluated once and shared
/// by both endpoints; per-cell accumulation order is the lattice order.
SaliencyMap relative_saliency(const DescriptorMap& map, const RsWindow& window);

/// Direct per-cell, per-offset evaluation. Reference kernel for `bench`.
SaliencyMap relative_saliency_naive(const DescriptorMap& map,
                                    const RsWindow& window);

/// Elementwise AS * RS.
SaliencyMap d2d_score(const SaliencyMap& as_map, const SaliencyMap& rs_map);

/// Classical intensity SSD autocorrelation over the same lattice, divided
/// by the in-image neighbour count like relative_saliency.
SaliencyMap ssd_autocorrelation(const Grid<float>& image, const RsWindow& window);

/// Per-offset terms of the window sums. terms[i](y, x) is the contribution
/// of offsets[i] at cell (y, x), before weighting; NaN where the neighbour
/// falls outside the grid.
struct NeighborTerms {
  std::vector<Offset> offsets;
  std::vector<Grid<double>> terms;
};

/// ||F(x,y) - F(x+u,y+v)||_2 per offset.
NeighborTerms relative_saliency_terms(const DescriptorMap& map,
                                      const RsWindow& window);
/// (I(x,y) - I(x+u,y+v))^2 per offset.
NeighborTerms ssd_terms(const Grid<float>& image, const RsWindow& window);

enum class ScoreMode { AS, RS, Both };

const char* to_string(ScoreMode mode);
ScoreMode score_mode_from_string(const std::string& s);

/// AS, RS, or their product depending on mode.
SaliencyMap compute_score(const DescriptorMap& map, ScoreMode mode,
                          const RsWindow& window);

/// Shape, finiteness and nonnegativity check for maps built by hand or
/// loaded from disk. External maps may be negative.
void validate_saliency(const SaliencyMap& map);

void save_saliency_map(const SaliencyMap& map,
                       const std::filesystem::path& tensor_path);
SaliencyMap load_saliency_map(const std::filesystem::path& tensor_path);

}  // namespace d2d
