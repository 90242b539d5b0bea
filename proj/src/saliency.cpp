#include "d2d/saliency.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "d2d/error.hpp"
#include "d2d/npy.hpp"
#include "d2d/parallel.hpp"

namespace d2d {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool inside(long y, long x, std::size_t rows, std::size_t cols) {
  return y >= 0 && x >= 0 && y < static_cast<long>(rows) && x < static_cast<long>(cols);
}

// Squared L2 distance of two float vectors. Eight float lanes of at most
// C/8 terms each, reduced in double; the lane layout is fixed so results do
// not depend on the caller.
double squared_distance(const float* a, const float* b, std::size_t n) {
  constexpr std::size_t kLanes = 8;
  float lanes[kLanes] = {};
  std::size_t c = 0;
  for (; c + kLanes <= n; c += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      const float d = a[c + l] - b[c + l];
      lanes[l] += d * d;
    }
  }
  double total = 0.0;
  for (float l : lanes) total += l;
  for (; c < n; ++c) {
    const double d = static_cast<double>(a[c]) - b[c];
    total += d * d;
  }
  return total;
}

double exact_distance(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double d = static_cast<double>(a[c]) - b[c];
    s += d * d;
  }
  return std::sqrt(s);
}

SaliencyMap make_map(const DescriptorMap& map, SaliencyKind kind) {
  return SaliencyMap{Grid<double>(map.rows(), map.cols()), kind, map.geometry(),
                     map.image_size()};
}

void require_any_neighbor(std::size_t rows, std::size_t cols,
                          const std::vector<Offset>& offsets) {
  for (const auto& o : offsets) {
    if (static_cast<std::size_t>(std::abs(o.dy)) < rows &&
        static_cast<std::size_t>(std::abs(o.dx)) < cols)
      return;
  }
  fail(ErrorKind::Validation, "window has no in-grid neighbour for any cell of a " +
                                  std::to_string(rows) + "x" + std::to_string(cols) + " grid");
}

}  // namespace

const char* to_string(SaliencyKind kind) {
  switch (kind) {
    case SaliencyKind::AS: return "AS";
    case SaliencyKind::RS: return "RS";
    case SaliencyKind::D2D: return "D2D";
    case SaliencyKind::External: return "external";
  }
  return "external";
}

SaliencyKind saliency_kind_from_string(const std::string& s) {
  if (s == "AS") return SaliencyKind::AS;
  if (s == "RS") return SaliencyKind::RS;
  if (s == "D2D") return SaliencyKind::D2D;
  if (s == "external") return SaliencyKind::External;
  fail(ErrorKind::Format, "unknown saliency kind '" + s + "'");
}

const char* to_string(ScoreMode mode) {
  switch (mode) {
    case ScoreMode::AS: return "as";
    case ScoreMode::RS: return "rs";
    case ScoreMode::Both: return "both";
  }
  return "both";
}

ScoreMode score_mode_from_string(const std::string& s) {
  if (s == "as" || s == "AS") return ScoreMode::AS;
  if (s == "rs" || s == "RS") return ScoreMode::RS;
  if (s == "both" || s == "BOTH") return ScoreMode::Both;
  fail(ErrorKind::Validation, "unknown score mode '" + s + "' (expected as, rs or both)");
}

void RsWindow::validate() const {
  if (radius < 1) fail(ErrorKind::Validation, "window radius must be >= 1");
  if (sample_step < 1) fail(ErrorKind::Validation, "window sample step must be >= 1");
  if (weights == WindowWeights::Gaussian && !(sigma > 0.0))
    fail(ErrorKind::Validation, "Gaussian window needs sigma > 0");
}

std::vector<Offset> RsWindow::offsets() const {
  validate();
  std::vector<int> axis;
  for (int v = -radius; v <= radius; v += sample_step) axis.push_back(v);
  std::vector<Offset> out;
  out.reserve(axis.size() * axis.size());
  for (int dy : axis) {
    for (int dx : axis) {
      if (dx == 0 && dy == 0) continue;
      out.push_back({dx, dy});
    }
  }
  return out;
}

double RsWindow::weight(Offset o) const {
  if (weights == WindowWeights::Uniform) return 1.0;
  return std::exp(-(o.dx * o.dx + o.dy * o.dy) / (2.0 * sigma * sigma));
}

SaliencyMap absolute_saliency(const DescriptorMap& map) {
  if (map.normalized())
    fail(ErrorKind::Precondition,
         "absolute saliency needs descriptors taken before L2 normalization");
  if (map.channels() < 1) fail(ErrorKind::Validation, "descriptor map has no channels");
  auto out = make_map(map, SaliencyKind::AS);
  const double inv_c = 1.0 / static_cast<double>(map.channels());
  parallel_for(map.rows(), [&](std::size_t y0, std::size_t y1) {
    for (std::size_t y = y0; y < y1; ++y) {
      for (std::size_t x = 0; x < map.cols(); ++x) {
        double sum = 0.0;
        double sum_sq = 0.0;
        for (float v : map.cell(y, x)) {
          sum += v;
          sum_sq += static_cast<double>(v) * v;
        }
        const double mean = sum * inv_c;
        const double var = sum_sq * inv_c - mean * mean;
        out.values(y, x) = std::sqrt(std::max(0.0, var));
      }
    }
  });
  return out;
}

SaliencyMap relative_saliency(const DescriptorMap& map, const RsWindow& window) {
  const auto offsets = window.offsets();
  const std::size_t rows = map.rows();
  const std::size_t cols = map.cols();
  const std::size_t channels = map.channels();
  require_any_neighbor(rows, cols, offsets);

  // source[i] names the offset whose distance grid serves offset i. A
  // mirrored offset -o reads the grid of o shifted by -o.
  const std::size_t n = offsets.size();
  std::vector<std::size_t> source(n);
  std::vector<bool> mirrored(n, false);
  std::vector<std::size_t> canonical;
  for (std::size_t i = 0; i < n; ++i) {
    source[i] = i;
    for (std::size_t j = 0; j < i; ++j) {
      if (offsets[j].dx == -offsets[i].dx && offsets[j].dy == -offsets[i].dy) {
        source[i] = j;
        mirrored[i] = true;
        break;
      }
    }
    if (!mirrored[i]) canonical.push_back(i);
  }

  std::vector<std::vector<double>> dist(n);
  for (std::size_t i : canonical) dist[i].assign(rows * cols, kNaN);
  const float* base = map.data().data();

  parallel_for(rows, [&](std::size_t y0, std::size_t y1) {
    for (std::size_t y = y0; y < y1; ++y) {
      for (std::size_t i : canonical) {
        const long qy = static_cast<long>(y) + offsets[i].dy;
        if (qy < 0 || qy >= static_cast<long>(rows)) continue;
        const long dx = offsets[i].dx;
        const long x_begin = std::max(0L, -dx);
        const long x_end = std::min(static_cast<long>(cols), static_cast<long>(cols) - dx);
        double* drow = dist[i].data() + y * cols;
        for (long x = x_begin; x < x_end; ++x) {
          const float* a = base + (y * cols + x) * channels;
          const float* b = base + (static_cast<std::size_t>(qy) * cols + (x + dx)) * channels;
          drow[x] = std::sqrt(squared_distance(a, b, channels));
        }
      }
    }
  });

  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) weights[i] = window.weight(offsets[i]);

  auto out = make_map(map, SaliencyKind::RS);
  parallel_for(rows, [&](std::size_t y0, std::size_t y1) {
    for (std::size_t y = y0; y < y1; ++y) {
      for (std::size_t x = 0; x < cols; ++x) {
        double sum = 0.0;
        std::size_t valid = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const long qy = static_cast<long>(y) + offsets[i].dy;
          const long qx = static_cast<long>(x) + offsets[i].dx;
          if (!inside(qy, qx, rows, cols)) continue;
          const double d = mirrored[i]
                               ? dist[source[i]][static_cast<std::size_t>(qy) * cols + qx]
                               : dist[i][y * cols + x];
          sum += weights[i] * d;
          ++valid;
        }
        out.values(y, x) = valid ? sum / static_cast<double>(valid) : 0.0;
      }
    }
  });
  return out;
}

SaliencyMap relative_saliency_naive(const DescriptorMap& map, const RsWindow& window) {
  const auto offsets = window.offsets();
  require_any_neighbor(map.rows(), map.cols(), offsets);
  auto out = make_map(map, SaliencyKind::RS);
  parallel_for(map.rows(), [&](std::size_t y0, std::size_t y1) {
    for (std::size_t y = y0; y < y1; ++y) {
      for (std::size_t x = 0; x < map.cols(); ++x) {
        double sum = 0.0;
        std::size_t valid = 0;
        for (const auto& o : offsets) {
          const long qy = static_cast<long>(y) + o.dy;
          const long qx = static_cast<long>(x) + o.dx;
          if (!inside(qy, qx, map.rows(), map.cols())) continue;
          sum += window.weight(o) * exact_distance(map.cell(y, x), map.cell(qy, qx));
          ++valid;
        }
        out.values(y, x) = valid ? sum / static_cast<double>(valid) : 0.0;
      }
    }
  });
  return out;
}

SaliencyMap d2d_score(const SaliencyMap& as_map, const SaliencyMap& rs_map) {
  if (!as_map.values.same_shape(rs_map.values))
    fail(ErrorKind::Validation, "AS and RS maps differ in shape");
  if (!(as_map.geometry == rs_map.geometry))
    fail(ErrorKind::Validation, "AS and RS maps differ in grid geometry");
  if (as_map.kind != SaliencyKind::AS || rs_map.kind != SaliencyKind::RS)
    fail(ErrorKind::Precondition, "d2d_score expects an AS map and an RS map");
  SaliencyMap out{Grid<double>(as_map.rows(), as_map.cols()), SaliencyKind::D2D,
                  as_map.geometry, as_map.image_size};
  const auto a = as_map.values.values();
  const auto r = rs_map.values.values();
  auto o = out.values.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] * r[i];
  return out;
}

SaliencyMap ssd_autocorrelation(const Grid<float>& image, const RsWindow& window) {
  const auto offsets = window.offsets();
  require_any_neighbor(image.rows(), image.cols(), offsets);
  SaliencyMap out{Grid<double>(image.rows(), image.cols()), SaliencyKind::External,
                  GridGeometry::identity(),
                  ImageSize{static_cast<int>(image.rows()), static_cast<int>(image.cols())}};
  parallel_for(image.rows(), [&](std::size_t y0, std::size_t y1) {
    for (std::size_t y = y0; y < y1; ++y) {
      for (std::size_t x = 0; x < image.cols(); ++x) {
        double sum = 0.0;
        std::size_t valid = 0;
        for (const auto& o : offsets) {
          const long qy = static_cast<long>(y) + o.dy;
          const long qx = static_cast<long>(x) + o.dx;
          if (!inside(qy, qx, image.rows(), image.cols())) continue;
          const double d = static_cast<double>(image(y, x)) - image(qy, qx);
          sum += window.weight(o) * d * d;
          ++valid;
        }
        out.values(y, x) = valid ? sum / static_cast<double>(valid) : 0.0;
      }
    }
  });
  return out;
}

NeighborTerms relative_saliency_terms(const DescriptorMap& map, const RsWindow& window) {
  NeighborTerms out;
  out.offsets = window.offsets();
  for (const auto& o : out.offsets) {
    Grid<double> g(map.rows(), map.cols(), kNaN);
    for (std::size_t y = 0; y < map.rows(); ++y) {
      for (std::size_t x = 0; x < map.cols(); ++x) {
        const long qy = static_cast<long>(y) + o.dy;
        const long qx = static_cast<long>(x) + o.dx;
        if (inside(qy, qx, map.rows(), map.cols()))
          g(y, x) = exact_distance(map.cell(y, x), map.cell(qy, qx));
      }
    }
    out.terms.push_back(std::move(g));
  }
  return out;
}

NeighborTerms ssd_terms(const Grid<float>& image, const RsWindow& window) {
  NeighborTerms out;
  out.offsets = window.offsets();
  for (const auto& o : out.offsets) {
    Grid<double> g(image.rows(), image.cols(), kNaN);
    for (std::size_t y = 0; y < image.rows(); ++y) {
      for (std::size_t x = 0; x < image.cols(); ++x) {
        const long qy = static_cast<long>(y) + o.dy;
        const long qx = static_cast<long>(x) + o.dx;
        if (inside(qy, qx, image.rows(), image.cols())) {
          const double d = static_cast<double>(image(y, x)) - image(qy, qx);
          g(y, x) = d * d;
        }
      }
    }
    out.terms.push_back(std::move(g));
  }
  return out;
}

SaliencyMap compute_score(const DescriptorMap& map, ScoreMode mode, const RsWindow& window) {
  switch (mode) {
    case ScoreMode::AS: return absolute_saliency(map);
    case ScoreMode::RS: return relative_saliency(map, window);
    case ScoreMode::Both: {
      auto as_map = absolute_saliency(map);
      return d2d_score(as_map, relative_saliency(map, window));
    }
  }
  fail(ErrorKind::Validation, "unknown score mode");
}

void validate_saliency(const SaliencyMap& map) {
  if (map.values.empty()) fail(ErrorKind::Validation, "saliency map is empty");
  validate_geometry(map.geometry, map.rows(), map.cols(), map.image_size);
  for (double v : map.values.values()) {
    if (!std::isfinite(v)) fail(ErrorKind::Data, "saliency map contains non-finite values");
    if (v < 0.0 && map.kind != SaliencyKind::External)
      fail(ErrorKind::Data, std::string(to_string(map.kind)) + " map contains negative values");
  }
}

void save_saliency_map(const SaliencyMap& map, const std::filesystem::path& tensor_path) {
  std::vector<float> data(map.values.size());
  const auto v = map.values.values();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(v[i]);
  const std::size_t shape[2] = {map.rows(), map.cols()};
  npy::write_f32(tensor_path, shape, data);

  nlohmann::json meta;
  meta["kind"] = to_string(map.kind);
  meta["stride"] = map.geometry.stride;
  meta["offset"] = map.geometry.offset;
  meta["receptive_field"] = map.geometry.receptive_field;
  meta["image_height"] = map.image_size.height;
  meta["image_width"] = map.image_size.width;
  const auto meta_path = sidecar_path(tensor_path);
  std::ofstream out(meta_path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, meta_path.string() + ": cannot open for writing");
  out << meta.dump(2) << '\n';
}

SaliencyMap load_saliency_map(const std::filesystem::path& tensor_path) {
  std::vector<std::size_t> shape;
  auto values = npy::read_real(tensor_path, shape);
  if (shape.size() != 2) fail(ErrorKind::Format, tensor_path.string() + ": expected a 2-D score map");
  const auto meta_path = sidecar_path(tensor_path);
  if (!std::filesystem::exists(meta_path)) fail(ErrorKind::NotFound, meta_path.string() + ": no such file");
  std::ifstream in(meta_path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(in);
    SaliencyMap map;
    map.values = Grid<double>(shape[0], shape[1], std::move(values));
    map.kind = saliency_kind_from_string(meta.value("kind", std::string("external")));
    map.geometry = GridGeometry{meta.value("stride", 4), meta.value("offset", 14),
                                meta.value("receptive_field", 51)};
    map.image_size = ImageSize{meta.at("image_height").get<int>(), meta.at("image_width").get<int>()};
    validate_saliency(map);
    return map;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, meta_path.string() + ": " + e.what());
  } catch (const Error& e) {
    fail(e.kind(), tensor_path.string() + ": " + e.what());
  }
}

}  // namespace d2d
