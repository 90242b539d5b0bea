#pragma once

#include "d2d/grid.hpp"
#include "d2d/tensor_io.hpp"

namespace d2d {

inline constexpr const char* kRefdescName = "refdesc-ghist-128";

/// Handcrafted dense descriptor on the HardNet grid: for every 51x51 window
/// centered at (4x+14, 4y+14), a 4x4 spatial by 8 orientation histogram of
/// central-difference gradient magnitudes (128 channels, hard binning, no
/// normalization). Gradients are zero on the one-pixel image border and
/// outside the image.
DescriptorMap describe_dense(const Grid<float>& gray);

}  // namespace d2d
