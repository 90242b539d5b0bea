#include "d2d/refdesc.hpp"

#include <cmath>
#include <numbers>

#include "d2d/error.hpp"
#include "d2d/parallel.hpp"

namespace d2d {
namespace {

constexpr int kSpatialBins = 4;
constexpr int kOrientationBins = 8;
constexpr int kChannels = kSpatialBins * kSpatialBins * kOrientationBins;
constexpr int kHalfWindow = 25;  // 51 x 51

}  // namespace

DescriptorMap describe_dense(const Grid<float>& gray) {
  const int height = static_cast<int>(gray.rows());
  const int width = static_cast<int>(gray.cols());
  if (height < 32 || width < 32)
    fail(ErrorKind::Validation, "dense description needs an image of at least 32x32, got " +
                                    std::to_string(height) + "x" + std::to_string(width));

  const auto geometry = GridGeometry::hardnet();
  const int rows = hardnet_grid_extent(height);
  const int cols = hardnet_grid_extent(width);

  Grid<float> magnitude(height, width, 0.0f);
  Grid<std::uint8_t> orientation(height, width, 0);
  parallel_for(static_cast<std::size_t>(height), [&](std::size_t y0, std::size_t y1) {
    for (std::size_t y = y0; y < y1; ++y) {
      if (y == 0 || y + 1 >= static_cast<std::size_t>(height)) continue;
      for (int x = 1; x + 1 < width; ++x) {
        const float gx = 0.5f * (gray(y, x + 1) - gray(y, x - 1));
        const float gy = 0.5f * (gray(y + 1, x) - gray(y - 1, x));
        const float m = std::sqrt(gx * gx + gy * gy);
        if (m == 0.0f) continue;
        const double theta = std::atan2(static_cast<double>(gy), static_cast<double>(gx));
        int bin = static_cast<int>(std::floor((theta + std::numbers::pi) /
                                              (2.0 * std::numbers::pi) * kOrientationBins));
        if (bin >= kOrientationBins) bin -= kOrientationBins;
        if (bin < 0) bin = 0;
        magnitude(y, x) = m;
        orientation(y, x) = static_cast<std::uint8_t>(bin);
      }
    }
  });

  // Spatial bin of a window-relative coordinate in [0, 51).
  int spatial_bin[2 * kHalfWindow + 1];
  for (int d = 0; d <= 2 * kHalfWindow; ++d) spatial_bin[d] = d * kSpatialBins / (2 * kHalfWindow + 1);

  std::vector<float> data(static_cast<std::size_t>(rows) * cols * kChannels, 0.0f);
  parallel_for(static_cast<std::size_t>(rows), [&](std::size_t r0, std::size_t r1) {
    double hist[kChannels];
    for (std::size_t gy = r0; gy < r1; ++gy) {
      const int cy = static_cast<int>(geometry.to_image(static_cast<int>(gy)));
      for (int gx = 0; gx < cols; ++gx) {
        const int cx = static_cast<int>(geometry.to_image(gx));
        std::fill(std::begin(hist), std::end(hist), 0.0);
        for (int dy = -kHalfWindow; dy <= kHalfWindow; ++dy) {
          const int y = cy + dy;
          if (y < 0 || y >= height) continue;
          const int by = spatial_bin[dy + kHalfWindow];
          for (int dx = -kHalfWindow; dx <= kHalfWindow; ++dx) {
            const int x = cx + dx;
            if (x < 0 || x >= width) continue;
            const float m = magnitude(y, x);
            if (m == 0.0f) continue;
            const int bx = spatial_bin[dx + kHalfWindow];
            hist[(by * kSpatialBins + bx) * kOrientationBins + orientation(y, x)] += m;
          }
        }
        float* dst = data.data() + (gy * cols + gx) * kChannels;
        for (int c = 0; c < kChannels; ++c) dst[c] = static_cast<float>(hist[c]);
      }
    }
  });

  return DescriptorMap(rows, cols, kChannels, std::move(data), geometry,
                       ImageSize{height, width}, false, kRefdescName);
}

}  // namespace d2d
