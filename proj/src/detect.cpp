#include "d2d/detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "d2d/error.hpp"
#include "d2d/npy.hpp"

namespace d2d {
namespace {

void require_aligned(const SaliencyMap& score, const DescriptorMap& map) {
  if (score.rows() != map.rows() || score.cols() != map.cols())
    fail(ErrorKind::Validation, "score map and descriptor map differ in shape");
  if (!(score.geometry == map.geometry()))
    fail(ErrorKind::Validation, "score map and descriptor map differ in grid geometry");
}

void require_finite(const SaliencyMap& score) {
  for (double v : score.values.values()) {
    if (!std::isfinite(v)) fail(ErrorKind::Data, "score map contains non-finite values");
  }
}

// Descending score, then row-major cell index. A strict total order, so any
// correct sort yields the same sequence.
std::vector<std::size_t> ranked_cells(const SaliencyMap& score, std::vector<std::size_t> cells,
                                      std::size_t k) {
  const auto v = score.values.values();
  auto before = [&](std::size_t a, std::size_t b) {
    if (v[a] != v[b]) return v[a] > v[b];
    return a < b;
  };
  k = std::min(k, cells.size());
  std::partial_sort(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(k), cells.end(), before);
  cells.resize(k);
  return cells;
}

KeypointSet make_keypoints(const SaliencyMap& score, const DescriptorMap& map,
                           const std::vector<std::size_t>& cells) {
  KeypointSet set;
  set.image_size = map.image_size();
  set.keypoints.reserve(cells.size());
  const auto& g = map.geometry();
  for (std::size_t cell : cells) {
    const int gy = static_cast<int>(cell / map.cols());
    const int gx = static_cast<int>(cell % map.cols());
    set.keypoints.push_back({g.to_image(gx), g.to_image(gy), score.values.values()[cell], gx, gy});
  }
  attach_descriptors(set, map);
  return set;
}

// Accumulated relative to the first value, so a constant input returns that
// constant exactly.
double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x - v[0];
  return v[0] + s / static_cast<double>(v.size());
}

bool strict_local_max(const Grid<double>& g, std::size_t y, std::size_t x, int radius) {
  const double c = g(y, x);
  const long y0 = std::max(0L, static_cast<long>(y) - radius);
  const long y1 = std::min(static_cast<long>(g.rows()) - 1, static_cast<long>(y) + radius);
  const long x0 = std::max(0L, static_cast<long>(x) - radius);
  const long x1 = std::min(static_cast<long>(g.cols()) - 1, static_cast<long>(x) + radius);
  for (long yy = y0; yy <= y1; ++yy) {
    for (long xx = x0; xx <= x1; ++xx) {
      if (yy == static_cast<long>(y) && xx == static_cast<long>(x)) continue;
      if (!(c > g(yy, xx))) return false;
    }
  }
  return true;
}

}  // namespace

void attach_descriptors(KeypointSet& set, const DescriptorMap& map) {
  Grid<float> desc(set.size(), map.channels());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& kp = set.keypoints[i];
    if (kp.grid_x < 0 || kp.grid_y < 0 || static_cast<std::size_t>(kp.grid_x) >= map.cols() ||
        static_cast<std::size_t>(kp.grid_y) >= map.rows())
      fail(ErrorKind::Validation, "keypoint grid index outside the descriptor map");
    const auto src = map.cell(kp.grid_y, kp.grid_x);
    double sq = 0.0;
    for (float v : src) sq += static_cast<double>(v) * v;
    const double norm = std::sqrt(sq);
    auto dst = desc.row(i);
    for (std::size_t c = 0; c < src.size(); ++c)
      dst[c] = norm > 0.0 ? static_cast<float>(src[c] / norm) : 0.0f;
  }
  set.descriptors = std::move(desc);
}

KeypointSet extract_topk(const SaliencyMap& score, const DescriptorMap& map, std::size_t k) {
  require_aligned(score, map);
  require_finite(score);
  if (k < 1) fail(ErrorKind::Validation, "k must be >= 1");
  std::vector<std::size_t> cells(score.values.size());
  std::iota(cells.begin(), cells.end(), 0);
  return make_keypoints(score, map, ranked_cells(score, std::move(cells), k));
}

KeypointSet extract_above(const SaliencyMap& score, const DescriptorMap& map, double threshold) {
  require_aligned(score, map);
  require_finite(score);
  std::vector<std::size_t> cells;
  const auto v = score.values.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] > threshold) cells.push_back(i);
  }
  const std::size_t n = cells.size();
  return make_keypoints(score, map, ranked_cells(score, std::move(cells), n));
}

double rescale_threshold(const SaliencyMap& d2d, const SaliencyMap& original, double alpha) {
  if (!d2d.values.same_shape(original.values))
    fail(ErrorKind::Validation, "D2D and original score maps differ in shape");
  const auto s = d2d.values.values();
  const auto o = original.values.values();
  if (s.empty()) fail(ErrorKind::Degenerate, "score maps are empty");
  // E[S*O] / E[O] is the O-weighted mean of S. Shifting S by its first value
  // keeps a constant S exact.
  double weighted = 0.0;
  double original_sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    weighted += (s[i] - s[0]) * o[i];
    original_sum += o[i];
  }
  if (original_sum == 0.0 || !std::isfinite(original_sum))
    fail(ErrorKind::Degenerate, "original score map has zero mean");
  return (s[0] + weighted / original_sum) * alpha;
}

KeypointSet filter_maxima(const SaliencyMap& d2d, const KeypointSet& candidates, MeanScope scope) {
  for (const auto& kp : candidates.keypoints) {
    if (kp.grid_x < 0 || kp.grid_y < 0 || static_cast<std::size_t>(kp.grid_x) >= d2d.cols() ||
        static_cast<std::size_t>(kp.grid_y) >= d2d.rows())
      fail(ErrorKind::Validation, "candidate grid index outside the D2D map");
  }
  double mean = 0.0;
  if (scope == MeanScope::FullMap) {
    mean = mean_of(d2d.values.values());
  } else {
    std::vector<double> at;
    for (const auto& kp : candidates.keypoints) at.push_back(d2d.values(kp.grid_y, kp.grid_x));
    mean = mean_of(at);
  }

  KeypointSet out;
  out.image_size = candidates.image_size;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& kp = candidates.keypoints[i];
    if (d2d.values(kp.grid_y, kp.grid_x) > mean) {
      out.keypoints.push_back(kp);
      kept.push_back(i);
    }
  }
  if (candidates.descriptors) {
    Grid<float> desc(kept.size(), candidates.descriptors->cols());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      const auto src = candidates.descriptors->row(kept[i]);
      std::copy(src.begin(), src.end(), desc.row(i).begin());
    }
    out.descriptors = std::move(desc);
  }
  return out;
}

SaliencyMap nms(const SaliencyMap& score, int radius) {
  if (radius < 0) fail(ErrorKind::Validation, "NMS radius must be >= 0");
  if (radius == 0) return score;
  SaliencyMap out = score;
  for (std::size_t y = 0; y < score.rows(); ++y) {
    for (std::size_t x = 0; x < score.cols(); ++x) {
      if (!strict_local_max(score.values, y, x, radius)) out.values(y, x) = 0.0;
    }
  }
  return out;
}

KeypointSet local_maxima(const SaliencyMap& score, const DescriptorMap& map, int radius) {
  require_aligned(score, map);
  require_finite(score);
  if (radius < 0) fail(ErrorKind::Validation, "NMS radius must be >= 0");
  std::vector<std::size_t> cells;
  for (std::size_t y = 0; y < score.rows(); ++y) {
    for (std::size_t x = 0; x < score.cols(); ++x) {
      if (radius == 0 || strict_local_max(score.values, y, x, radius)) cells.push_back(y * score.cols() + x);
    }
  }
  const std::size_t n = cells.size();
  return make_keypoints(score, map, ranked_cells(score, std::move(cells), n));
}

void write_keypoints(const std::filesystem::path& path, const KeypointSet& set) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, path.string() + ": cannot open for writing");
  out << "# image_height=" << set.image_size.height << " image_width=" << set.image_size.width << '\n';
  out << "x y score grid_x grid_y\n";
  out << std::setprecision(17);
  for (const auto& kp : set.keypoints) {
    out << kp.x << ' ' << kp.y << ' ' << kp.score << ' ' << kp.grid_x << ' ' << kp.grid_y << '\n';
  }
  if (!out) fail(ErrorKind::Io, path.string() + ": write failed");
}

KeypointSet read_keypoints(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::NotFound, path.string() + ": no such file");
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, path.string() + ": cannot open");
  KeypointSet set;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string token;
      while (meta >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const auto key = token.substr(0, eq);
        const int value = std::atoi(token.c_str() + eq + 1);
        if (key == "image_height") set.image_size.height = value;
        if (key == "image_width") set.image_size.width = value;
      }
      continue;
    }
    if (!header_seen) {
      if (line.rfind("x y score grid_x grid_y", 0) != 0)
        fail(ErrorKind::Format, path.string() + ": missing 'x y score grid_x grid_y' header");
      header_seen = true;
      continue;
    }
    std::istringstream row(line);
    Keypoint kp;
    if (!(row >> kp.x >> kp.y >> kp.score >> kp.grid_x >> kp.grid_y))
      fail(ErrorKind::Format, path.string() + ":" + std::to_string(line_no) + ": malformed row");
    set.keypoints.push_back(kp);
  }
  if (!header_seen) fail(ErrorKind::Format, path.string() + ": missing header");
  return set;
}

void write_keypoint_descriptors(const std::filesystem::path& path, const KeypointSet& set) {
  if (!set.descriptors) fail(ErrorKind::Precondition, "keypoint set carries no descriptors");
  const std::size_t shape[2] = {set.descriptors->rows(), set.descriptors->cols()};
  npy::write_f32(path, shape, set.descriptors->values());
}

void read_keypoint_descriptors(const std::filesystem::path& path, KeypointSet& set) {
  std::vector<std::size_t> shape;
  auto data = npy::read_f32(path, shape);
  if (shape.size() != 2) fail(ErrorKind::Format, path.string() + ": expected an N x C array");
  if (shape[0] != set.size())
    fail(ErrorKind::Validation, path.string() + ": descriptor count does not match keypoint count");
  set.descriptors = Grid<float>(shape[0], shape[1], std::move(data));
}

}  // namespace d2d
