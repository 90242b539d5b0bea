#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "d2d/grid.hpp"

namespace d2d {

/// 8-bit interleaved image with 1 (gray) or 3 (RGB) channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;
};

/// Loads binary PGM/PPM (P5/P6, maxval <= 255) or PNG. Channel layout is
/// passed through; 16-bit PNGs are reduced to 8 bits, alpha is dropped.
Image load_image(const std::filesystem::path& path);

/// Luma (BT.601 weights) for RGB input, identity for gray. Values in [0, 255].
Grid<float> to_gray(const Image& image);

void save_pgm(const std::filesystem::path& path, const Grid<std::uint8_t>& gray);
void save_ppm(const std::filesystem::path& path, const Image& rgb);
void save_png(const std::filesystem::path& path, const Image& image);

}  // namespace d2d
