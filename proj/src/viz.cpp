#include "d2d/viz.hpp"

#include <algorithm>
#include <cmath>

#include "d2d/error.hpp"
#include "d2d/image.hpp"

namespace d2d {
namespace {

const char* const kSuffixes[5] = {"_as", "_rs", "_d2d", "_as_minus_rs", "_rs_minus_as"};

Grid<double> positive_difference(const Grid<double>& a, const Grid<double>& b) {
  Grid<double> out(a.rows(), a.cols());
  const auto av = a.values();
  const auto bv = b.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = std::max(0.0, av[i] - bv[i]);
  return out;
}

Grid<double> normalized_with_warning(const Grid<double>& g, const char* name,
                                     std::vector<std::string>& warnings) {
  bool constant = false;
  auto out = normalize_minmax(g, &constant);
  if (constant) warnings.push_back(std::string(name) + " map is constant; rendered as zeros");
  return out;
}

void draw_cross(Grid<std::uint8_t>* gray, Image* rgb, const KeypointSet& overlay) {
  static constexpr int kArm[5][2] = {{0, 0}, {-1, 0}, {1, 0}, {0, -1}, {0, 1}};
  for (const auto& kp : overlay.keypoints) {
    for (const auto& d : kArm) {
      const long y = kp.grid_y + d[0];
      const long x = kp.grid_x + d[1];
      if (gray) {
        if (y < 0 || x < 0 || y >= static_cast<long>(gray->rows()) || x >= static_cast<long>(gray->cols()))
          continue;
        (*gray)(y, x) = 255;
      } else {
        if (y < 0 || x < 0 || y >= rgb->height || x >= rgb->width) continue;
        auto* p = &rgb->pixels[(static_cast<std::size_t>(y) * rgb->width + x) * 3];
        p[0] = 255;
        p[1] = 0;
        p[2] = 0;
      }
    }
  }
}

}  // namespace

Grid<double> normalize_minmax(const Grid<double>& values, bool* constant) {
  Grid<double> out(values.rows(), values.cols());
  if (values.empty()) {
    if (constant) *constant = true;
    return out;
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.values().begin(), values.values().end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (constant) *constant = !(hi > lo);
  if (!(hi > lo)) return out;
  const double scale = 1.0 / (hi - lo);
  const auto in = values.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = (in[i] - lo) * scale;
  return out;
}

Grid<std::uint8_t> quantize(const Grid<double>& normalized) {
  Grid<std::uint8_t> out(normalized.rows(), normalized.cols());
  const auto in = normalized.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i)
    o[i] = static_cast<std::uint8_t>(std::lround(std::clamp(in[i], 0.0, 1.0) * 255.0));
  return out;
}

Heatmaps compute_heatmaps(const SaliencyMap& as_map, const SaliencyMap& rs_map) {
  if (!as_map.values.same_shape(rs_map.values))
    fail(ErrorKind::Validation, "AS and RS maps differ in shape");
  Heatmaps h;
  h.as = normalized_with_warning(as_map.values, "AS", h.warnings);
  h.rs = normalized_with_warning(rs_map.values, "RS", h.warnings);

  Grid<double> product(as_map.rows(), as_map.cols());
  for (std::size_t i = 0; i < product.size(); ++i)
    product.values()[i] = as_map.values.values()[i] * rs_map.values.values()[i];
  h.d2d = normalized_with_warning(product, "D2D", h.warnings);
  h.as_minus_rs = normalized_with_warning(positive_difference(h.as, h.rs), "AS-RS", h.warnings);
  h.rs_minus_as = normalized_with_warning(positive_difference(h.rs, h.as), "RS-AS", h.warnings);
  return h;
}

const std::array<std::array<std::uint8_t, 3>, 256>& viridis_lut() {
  static const auto lut = [] {
    static constexpr double kAnchors[9][3] = {
        {68, 1, 84},    {71, 44, 122},  {59, 81, 139},  {44, 113, 142}, {33, 144, 141},
        {39, 173, 129}, {92, 200, 99},  {170, 220, 50}, {253, 231, 37}};
    std::array<std::array<std::uint8_t, 3>, 256> t{};
    for (int i = 0; i < 256; ++i) {
      const double pos = i / 255.0 * 8.0;
      const int seg = std::min(7, static_cast<int>(pos));
      const double f = pos - seg;
      for (int c = 0; c < 3; ++c) {
        const double v = kAnchors[seg][c] + f * (kAnchors[seg + 1][c] - kAnchors[seg][c]);
        t[i][c] = static_cast<std::uint8_t>(std::lround(v));
      }
    }
    return t;
  }();
  return lut;
}

std::vector<std::filesystem::path> render_heatmaps(const Heatmaps& maps, const std::filesystem::path& prefix,
                                                   HeatmapFormat format, const KeypointSet* overlay) {
  const Grid<double>* grids[5] = {&maps.as, &maps.rs, &maps.d2d, &maps.as_minus_rs, &maps.rs_minus_as};
  std::vector<std::filesystem::path> written;
  for (int i = 0; i < 5; ++i) {
    auto gray = quantize(*grids[i]);
    auto path = prefix;
    path += std::string(kSuffixes[i]) + (format == HeatmapFormat::Pgm ? ".pgm" : ".png");
    if (format == HeatmapFormat::Pgm) {
      if (overlay) draw_cross(&gray, nullptr, *overlay);
      save_pgm(path, gray);
    } else {
      Image rgb;
      rgb.width = static_cast<int>(gray.cols());
      rgb.height = static_cast<int>(gray.rows());
      rgb.channels = 3;
      rgb.pixels.resize(gray.size() * 3);
      const auto& lut = viridis_lut();
      for (std::size_t p = 0; p < gray.size(); ++p) {
        const auto& c = lut[gray.values()[p]];
        std::copy(c.begin(), c.end(), rgb.pixels.begin() + static_cast<std::ptrdiff_t>(p * 3));
      }
      if (overlay) draw_cross(nullptr, &rgb, *overlay);
      save_png(path, rgb);
    }
    written.push_back(path);
  }
  return written;
}

}  // namespace d2d
