#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "d2d/homography.hpp"
#include "d2d/image.hpp"

namespace d2d {

/// Affine relation between descriptor-grid indices and image pixels:
/// pixel = stride * index + offset, along each axis.
struct GridGeometry {
  int stride = 4;
  int offset = 14;
  int receptive_field = 51;

  /// HardNet/SOSNet (L2-Net architecture): two stride-2 layers, 51 px
  /// receptive field, first cell centered at pixel 14.
  static constexpr GridGeometry hardnet() { return {4, 14, 51}; }
  /// Cells of a dense per-pixel map.
  static constexpr GridGeometry identity() { return {1, 0, 1}; }

  double to_image(int grid_index) const {
    return static_cast<double>(stride) * grid_index + offset;
  }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

struct ImageSize {
  int height = 0;
  int width = 0;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

/// Grid extent produced by the HardNet geometry on an HxW input.
constexpr int hardnet_grid_extent(int image_extent) {
  return image_extent / 4 - 7;
}

/// Dense H_f x W_f x C descriptor tensor (C-order float32) plus the
/// metadata tying cells to image pixels. Immutable once constructed; the
/// constructor enforces every shape, geometry and finiteness invariant.
class DescriptorMap {
public:
  DescriptorMap(std::size_t rows, std::size_t cols, std::size_t channels,
                std::vector<float> data, GridGeometry geometry,
                ImageSize image_size, bool normalized = false,
                std::string descriptor_name = {});

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t cell_count() const noexcept { return rows_ * cols_; }

  std::span<const float> cell(std::size_t y, std::size_t x) const {
    return {data_.data() + (y * cols_ + x) * channels_, channels_};
  }
  std::span<const float> data() const noexcept { return data_; }

  const GridGeometry& geometry() const noexcept { return geometry_; }
  const ImageSize& image_size() const noexcept { return image_size_; }
  bool normalized() const noexcept { return normalized_; }
  const std::string& descriptor_name() const noexcept { return name_; }

  friend bool operator==(const DescriptorMap&, const DescriptorMap&) = default;

private:
  std::size_t rows_;
  std::size_t cols_;
  std::size_t channels_;
  std::vector<float> data_;
  GridGeometry geometry_;
  ImageSize image_size_;
  bool normalized_;
  std::string name_;
};

/// Checks stride/offset/receptive_field ranges and that every cell center
/// of a rows x cols grid lies inside the image. The HardNet geometry
/// additionally pins the grid extent to floor(size/4) - 7.
void validate_geometry(const GridGeometry& geometry, std::size_t rows,
                       std::size_t cols, ImageSize image);

/// `<stem>.json` next to the tensor file.
std::filesystem::path sidecar_path(const std::filesystem::path& tensor_path);

DescriptorMap load_descriptor_map(const std::filesystem::path& tensor_path,
                                  const std::filesystem::path& meta_path);
DescriptorMap load_descriptor_map(const std::filesystem::path& tensor_path);

/// Writes the tensor and its JSON sidecar.
void save_descriptor_map(const DescriptorMap& map,
                         const std::filesystem::path& tensor_path);

enum class SequenceKind { Viewpoint, Illumination };

const char* to_string(SequenceKind kind);

struct HpatchesSequence {
  std::string name;
  SequenceKind kind = SequenceKind::Viewpoint;
  std::vector<Image> images;              // 1..6
  std::vector<Homography> homographies;   // H_1_2 .. H_1_6
};

/// Reads `1.ppm`..`6.ppm` (or `.png`) and `H_1_2`..`H_1_6` from `dir`. The
/// kind comes from the directory-name prefix (`v_` or `i_`).
HpatchesSequence load_hpatches_sequence(const std::filesystem::path& dir);

/// Parses nine whitespace-separated numbers, row-major.
Homography load_homography(const std::filesystem::path& path);
void save_homography(const std::filesystem::path& path, const Homography& h);

/// Sorted list of sequence directories (`v_*`, `i_*`) directly under root.
std::vector<std::filesystem::path> list_hpatches_sequences(
    const std::filesystem::path& root);

}  // namespace d2d
