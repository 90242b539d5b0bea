#pragma once

#include <cstddef>
#include <string>

namespace d2d::tools {

struct BenchOptions {
  std::size_t rows = 57;
  std::size_t cols = 57;
  std::size_t channels = 128;
  int radius = 5;
  int step = 2;
  int repeats = 11;
  unsigned seed = 7;
};

/// Times AS, naive RS and optimized RS on a seeded random map and returns
/// CSV rows: kernel, shape, window, repeats, median wall time, a checksum
/// of the output, and the max relative deviation from the naive kernel.
std::string run_bench(const BenchOptions& options);

}  // namespace d2d::tools
