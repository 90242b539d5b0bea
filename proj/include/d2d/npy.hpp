#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace d2d::npy {

enum class Dtype { Float32, Float64 };

struct Header {
  Dtype dtype = Dtype::Float32;
  bool fortran_order = false;
  std::vector<std::size_t> shape;

  std::size_t element_count() const;
};

/// Parses the magic string, version and header dict of an .npy stream and
/// leaves the stream positioned at the first data byte. Accepts format
/// versions 1.0, 2.0 and 3.0 with little-endian '<f4' or '<f8' data.
Header read_header(std::istream& in);

/// Reads a little-endian float32 array. Any other dtype is a format error.
std::vector<float> read_f32(const std::filesystem::path& path,
                            std::vector<std::size_t>& shape);

/// Reads a '<f4' or '<f8' array, widening to double.
std::vector<double> read_real(const std::filesystem::path& path,
                              std::vector<std::size_t>& shape);

/// Writes a version 1.0 C-order '<f4' array. The header is padded so the
/// data starts on a 64-byte boundary.
void write_f32(const std::filesystem::path& path,
               std::span<const std::size_t> shape, std::span<const float> data);

}  // namespace d2d::npy
