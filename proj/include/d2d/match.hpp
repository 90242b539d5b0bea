#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "d2d/detect.hpp"

namespace d2d {

struct Match {
  std::size_t index_a = 0;
  std::size_t index_b = 0;
  double distance = 0.0;
};

/// One-to-one correspondences ordered by index_a.
struct MatchSet {
  std::vector<Match> pairs;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

/// Mutual nearest neighbours under L2 distance on the attached descriptors.
/// Ties go to the lowest index. No ratio test.
MatchSet mutual_nn(const KeypointSet& a, const KeypointSet& b);

/// `idx_a idx_b distance` rows after a header line.
void write_matches(const std::filesystem::path& path, const MatchSet& matches);
MatchSet read_matches(const std::filesystem::path& path);

}  // namespace d2d
