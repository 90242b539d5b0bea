#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "d2d/detect.hpp"
#include "d2d/grid.hpp"
#include "d2d/saliency.hpp"

namespace d2d {

/// Min-max normalization to [0, 1]. A constant grid maps to all zeros and
/// sets *constant when given.
Grid<double> normalize_minmax(const Grid<double>& values,
                              bool* constant = nullptr);

/// round(255 * v) of values clamped to [0, 1].
Grid<std::uint8_t> quantize(const Grid<double>& normalized);

struct Heatmaps {
  Grid<double> as;
  Grid<double> rs;
  Grid<double> d2d;
  Grid<double> as_minus_rs;
  Grid<double> rs_minus_as;
  std::vector<std::string> warnings;
};

/// AS and RS are normalized first; the difference maps are max(0, .) of the
/// normalized pair and are normalized again; d2d is the raw product,
/// normalized.
Heatmaps compute_heatmaps(const SaliencyMap& as_map, const SaliencyMap& rs_map);

enum class HeatmapFormat { Pgm, Png };

/// 256-entry perceptual colormap (viridis anchors, linear interpolation).
const std::array<std::array<std::uint8_t, 3>, 256>& viridis_lut();

/// Writes `<prefix>_as`, `_rs`, `_d2d`, `_as_minus_rs`, `_rs_minus_as`.
/// When overlay is given, a 5-cell cross is drawn at each keypoint cell at
/// full intensity. Returns the written paths in that order.
std::vector<std::filesystem::path> render_heatmaps(
    const Heatmaps& maps, const std::filesystem::path& prefix,
    HeatmapFormat format, const KeypointSet* overlay = nullptr);

}  // namespace d2d
