#include "d2d/tensor_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "d2d/error.hpp"
#include "d2d/npy.hpp"

namespace d2d {

using nlohmann::json;

namespace {

constexpr double kUnitNormTolerance = 1e-4;

std::string shape_string(std::size_t rows, std::size_t cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

json read_json(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::NotFound, path.string() + ": no such file");
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, path.string() + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, path.string() + ": " + e.what());
  }
}

template <typename T>
T required(const json& meta, const char* key, const std::filesystem::path& path) {
  if (!meta.contains(key)) fail(ErrorKind::Format, path.string() + ": sidecar lacks '" + key + "'");
  try {
    return meta.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::Format, path.string() + ": sidecar key '" + key + "' has the wrong type");
  }
}

}  // namespace

void validate_geometry(const GridGeometry& g, std::size_t rows, std::size_t cols,
                       ImageSize image) {
  if (g.stride < 1 || g.offset < 0 || g.receptive_field < 1)
    fail(ErrorKind::Validation, "grid geometry out of range (stride >= 1, offset >= 0, receptive_field >= 1)");
  if (image.height < 1 || image.width < 1)
    fail(ErrorKind::Validation, "source image size must be positive");
  if (rows < 1 || cols < 1) fail(ErrorKind::Validation, "descriptor grid is empty");
  if (g == GridGeometry::hardnet()) {
    const int want_rows = hardnet_grid_extent(image.height);
    const int want_cols = hardnet_grid_extent(image.width);
    if (static_cast<long>(rows) != want_rows || static_cast<long>(cols) != want_cols)
      fail(ErrorKind::Validation,
           "grid " + shape_string(rows, cols) + " contradicts image " +
               std::to_string(image.height) + "x" + std::to_string(image.width) +
               " under stride 4 / offset 14 (expected " +
               std::to_string(want_rows) + "x" + std::to_string(want_cols) + ")");
  }
  const double last_y = g.to_image(static_cast<int>(rows) - 1);
  const double last_x = g.to_image(static_cast<int>(cols) - 1);
  if (last_y >= image.height || last_x >= image.width)
    fail(ErrorKind::Validation, "grid " + shape_string(rows, cols) +
                                    " has cell centers outside the source image");
}

DescriptorMap::DescriptorMap(std::size_t rows, std::size_t cols, std::size_t channels,
                             std::vector<float> data, GridGeometry geometry,
                             ImageSize image_size, bool normalized,
                             std::string descriptor_name)
    : rows_(rows),
      cols_(cols),
      channels_(channels),
      data_(std::move(data)),
      geometry_(geometry),
      image_size_(image_size),
      normalized_(normalized),
      name_(std::move(descriptor_name)) {
  if (channels_ < 1) fail(ErrorKind::Validation, "descriptor maps need at least one channel");
  if (rows_ < 1 || cols_ < 1) fail(ErrorKind::Validation, "descriptor grid is empty");
  if (data_.size() != rows_ * cols_ * channels_)
    fail(ErrorKind::Validation, "descriptor data size does not match its shape");
  validate_geometry(geometry_, rows_, cols_, image_size_);
  for (float v : data_) {
    if (!std::isfinite(v)) fail(ErrorKind::Data, "descriptor map contains non-finite values");
  }
  if (normalized_) {
    for (std::size_t i = 0; i < rows_ * cols_; ++i) {
      double sq = 0.0;
      for (std::size_t c = 0; c < channels_; ++c) {
        const double v = data_[i * channels_ + c];
        sq += v * v;
      }
      const double norm = std::sqrt(sq);
      if (norm != 0.0 && std::abs(norm - 1.0) > kUnitNormTolerance)
        fail(ErrorKind::Validation, "map flagged normalized but cell " + std::to_string(i) +
                                        " has L2 norm " + std::to_string(norm));
    }
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& tensor_path) {
  auto p = tensor_path;
  p.replace_extension(".json");
  return p;
}

DescriptorMap load_descriptor_map(const std::filesystem::path& tensor_path,
                                  const std::filesystem::path& meta_path) {
  std::vector<std::size_t> shape;
  auto data = npy::read_f32(tensor_path, shape);
  if (shape.size() != 3)
    fail(ErrorKind::Format, tensor_path.string() + ": expected a 3-D (H_f, W_f, C) array");

  const json meta = read_json(meta_path);
  if (!meta.is_object()) fail(ErrorKind::Format, meta_path.string() + ": sidecar must be an object");
  ImageSize image{required<int>(meta, "image_height", meta_path),
                  required<int>(meta, "image_width", meta_path)};

  const bool has_stride = meta.contains("stride");
  const bool has_offset = meta.contains("offset");
  const bool has_rf = meta.contains("receptive_field");
  GridGeometry geometry = GridGeometry::hardnet();
  if (has_stride || has_offset || has_rf) {
    if (!(has_stride && has_offset && has_rf))
      fail(ErrorKind::Format, meta_path.string() +
                                  ": stride, offset and receptive_field must be given together");
    geometry = {required<int>(meta, "stride", meta_path),
                required<int>(meta, "offset", meta_path),
                required<int>(meta, "receptive_field", meta_path)};
  }
  const bool normalized = meta.contains("normalized") ? required<bool>(meta, "normalized", meta_path) : false;
  std::string name = meta.contains("descriptor_name")
                         ? required<std::string>(meta, "descriptor_name", meta_path)
                         : std::string{};

  try {
    return DescriptorMap(shape[0], shape[1], shape[2], std::move(data), geometry, image,
                         normalized, std::move(name));
  } catch (const Error& e) {
    fail(e.kind(), tensor_path.string() + ": " + e.what());
  }
}

DescriptorMap load_descriptor_map(const std::filesystem::path& tensor_path) {
  return load_descriptor_map(tensor_path, sidecar_path(tensor_path));
}

void save_descriptor_map(const DescriptorMap& map, const std::filesystem::path& tensor_path) {
  const std::size_t shape[3] = {map.rows(), map.cols(), map.channels()};
  npy::write_f32(tensor_path, shape, map.data());

  json meta;
  meta["stride"] = map.geometry().stride;
  meta["offset"] = map.geometry().offset;
  meta["receptive_field"] = map.geometry().receptive_field;
  meta["normalized"] = map.normalized();
  meta["image_height"] = map.image_size().height;
  meta["image_width"] = map.image_size().width;
  meta["descriptor_name"] = map.descriptor_name();
  const auto meta_path = sidecar_path(tensor_path);
  std::ofstream out(meta_path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, meta_path.string() + ": cannot open for writing");
  out << meta.dump(2) << '\n';
  if (!out) fail(ErrorKind::Io, meta_path.string() + ": write failed");
}

const char* to_string(SequenceKind kind) {
  return kind == SequenceKind::Viewpoint ? "viewpoint" : "illumination";
}

Homography load_homography(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::NotFound, path.string() + ": no such file");
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, path.string() + ": cannot open");
  Homography h;
  for (auto& v : h.m) {
    if (!(in >> v)) fail(ErrorKind::Format, path.string() + ": expected 9 numbers");
  }
  std::string extra;
  if (in >> extra) fail(ErrorKind::Format, path.string() + ": trailing content after 9 numbers");
  for (double v : h.m) {
    if (!std::isfinite(v)) fail(ErrorKind::Data, path.string() + ": non-finite homography entry");
  }
  if (std::abs(h.determinant()) <= 1e-12)
    fail(ErrorKind::Validation, path.string() + ": homography is not invertible");
  return h;
}

void save_homography(const std::filesystem::path& path, const Homography& h) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, path.string() + ": cannot open for writing");
  out << std::setprecision(17);
  for (int r = 0; r < 3; ++r) {
    out << h(r, 0) << ' ' << h(r, 1) << ' ' << h(r, 2) << '\n';
  }
  if (!out) fail(ErrorKind::Io, path.string() + ": write failed");
}

HpatchesSequence load_hpatches_sequence(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) fail(ErrorKind::NotFound, dir.string() + ": not a directory");
  HpatchesSequence seq;
  seq.name = dir.filename().string();
  if (seq.name.empty()) seq.name = dir.parent_path().filename().string();
  if (seq.name.rfind("v_", 0) == 0) {
    seq.kind = SequenceKind::Viewpoint;
  } else if (seq.name.rfind("i_", 0) == 0) {
    seq.kind = SequenceKind::Illumination;
  } else {
    fail(ErrorKind::Validation, dir.string() + ": sequence name must start with v_ or i_");
  }

  for (int k = 1; k <= 6; ++k) {
    auto path = dir / (std::to_string(k) + ".ppm");
    if (!std::filesystem::exists(path)) path = dir / (std::to_string(k) + ".png");
    if (!std::filesystem::exists(path))
      fail(ErrorKind::NotFound, (dir / (std::to_string(k) + ".ppm")).string() + ": no such file");
    seq.images.push_back(load_image(path));
  }
  for (int k = 2; k <= 6; ++k) {
    seq.homographies.push_back(load_homography(dir / ("H_1_" + std::to_string(k))));
  }
  return seq;
}

std::vector<std::filesystem::path> list_hpatches_sequences(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) fail(ErrorKind::NotFound, root.string() + ": not a directory");
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const auto name = entry.path().filename().string();
    if (name.rfind("v_", 0) == 0 || name.rfind("i_", 0) == 0) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace d2d
