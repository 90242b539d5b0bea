#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "d2d/grid.hpp"
#include "d2d/saliency.hpp"
#include "d2d/tensor_io.hpp"

namespace d2d {

struct Keypoint {
  double x = 0.0;  // pixels, source image
  double y = 0.0;
  double score = 0.0;
  int grid_x = 0;
  int grid_y = 0;
};

/// Keypoints in descending score order. When present, descriptors has one
/// L2-normalized row per keypoint.
struct KeypointSet {
  std::vector<Keypoint> keypoints;
  std::optional<Grid<float>> descriptors;
  ImageSize image_size;

  std::size_t size() const noexcept { return keypoints.size(); }
  bool empty() const noexcept { return keypoints.empty(); }
};

/// The k highest-scoring cells (all cells when k exceeds the grid). Equal
/// scores are ordered row-major by (grid_y, grid_x), so the result for k
/// is a prefix of the result for k + 1.
KeypointSet extract_topk(const SaliencyMap& score, const DescriptorMap& map,
                         std::size_t k);

/// All cells whose score strictly exceeds threshold, in top-k order.
KeypointSet extract_above(const SaliencyMap& score, const DescriptorMap& map,
                          double threshold);

/// SuperPoint-style threshold transfer:
/// alpha* = E[S_D2D * S_O] / E[S_O] * alpha, means over every cell.
double rescale_threshold(const SaliencyMap& d2d, const SaliencyMap& original,
                         double alpha);

enum class MeanScope { FullMap, Candidates };

/// Keeps candidates whose d2d score is strictly above the mean d2d score,
/// taken over the full map or over the candidate cells only.
KeypointSet filter_maxima(const SaliencyMap& d2d, const KeypointSet& candidates,
                          MeanScope scope = MeanScope::FullMap);

/// Zeroes every cell that is not a strict maximum of its
/// (2 * radius + 1)^2 neighbourhood (clipped to the grid). radius 0 is the
/// identity.
SaliencyMap nms(const SaliencyMap& score, int radius);

/// Strict local maxima of score as keypoints, in top-k order.
KeypointSet local_maxima(const SaliencyMap& score, const DescriptorMap& map,
                         int radius);

/// Copies the descriptor of each keypoint's source cell and L2-normalizes
/// it. Zero vectors stay zero.
void attach_descriptors(KeypointSet& set, const DescriptorMap& map);

/// `# image_height=H image_width=W` comment, `x y score grid_x grid_y`
/// header, one row per keypoint.
void write_keypoints(const std::filesystem::path& path, const KeypointSet& set);
KeypointSet read_keypoints(const std::filesystem::path& path);

/// N x C float32 NPY companion.
void write_keypoint_descriptors(const std::filesystem::path& path,
                                const KeypointSet& set);
void read_keypoint_descriptors(const std::filesystem::path& path,
                               KeypointSet& set);

}  // namespace d2d
