#include <doctest.h>

#include <random>

#include "d2d/image.hpp"
#include "d2d/viz.hpp"
#include "error_kind.hpp"
#include "synth.hpp"
#include "tmpdir.hpp"

using namespace d2d;

namespace {

SaliencyMap map_of(std::size_t rows, std::size_t cols, std::vector<double> v, SaliencyKind kind) {
  return {Grid<double>(rows, cols, std::move(v)), kind, GridGeometry::identity(),
          {static_cast<int>(rows), static_cast<int>(cols)}};
}

}  // namespace

TEST_SUITE("viz") {
  TEST_CASE("min-max normalization") {
    bool constant = true;
    const auto n = normalize_minmax(Grid<double>(1, 4, std::vector<double>{2, 4, 3, 6}), &constant);
    CHECK_FALSE(constant);
    CHECK(n.values()[0] == 0.0);
    CHECK(n.values()[1] == 0.5);
    CHECK(n.values()[3] == 1.0);

    const auto z = normalize_minmax(Grid<double>(2, 2, 7.0), &constant);
    CHECK(constant);
    CHECK(z == Grid<double>(2, 2, 0.0));
  }

  TEST_CASE("quantization rounds and clamps") {
    const auto q = quantize(Grid<double>(1, 5, std::vector<double>{0.0, 0.5, 1.0, -0.2, 1.5}));
    CHECK(q.values()[0] == 0);
    CHECK(q.values()[1] == 128);
    CHECK(q.values()[2] == 255);
    CHECK(q.values()[3] == 0);
    CHECK(q.values()[4] == 255);
  }

  TEST_CASE("heatmaps from two maps") {
    const auto as = map_of(1, 3, {1, 2, 3}, SaliencyKind::AS);
    const auto rs = map_of(1, 3, {3, 1, 2}, SaliencyKind::RS);
    const auto h = compute_heatmaps(as, rs);
    CHECK(h.as.values()[2] == 1.0);
    CHECK(h.rs.values()[0] == 1.0);
    // Raw products 3, 2, 6.
    CHECK(h.d2d.values()[0] == doctest::Approx(0.25));
    CHECK(h.d2d.values()[1] == 0.0);
    CHECK(h.d2d.values()[2] == 1.0);
    // Normalized AS 0, .5, 1 and RS 1, 0, .5: AS-RS is 0, .5, .5 -> 0, 1, 1.
    CHECK(h.as_minus_rs.values()[1] == 1.0);
    CHECK(h.as_minus_rs.values()[2] == 1.0);
    CHECK(h.rs_minus_as.values()[0] == 1.0);
    CHECK(h.warnings.empty());

    const auto flat = map_of(1, 3, {2, 2, 2}, SaliencyKind::RS);
    CHECK_FALSE(compute_heatmaps(as, flat).warnings.empty());
    CHECK(testing::error_kind([&] { compute_heatmaps(as, map_of(3, 1, {1, 2, 3}, SaliencyKind::RS)); }) ==
          ErrorKind::Validation);
  }

  TEST_CASE("colormap endpoints") {
    const auto& lut = viridis_lut();
    CHECK(lut[0] == std::array<std::uint8_t, 3>{68, 1, 84});
    CHECK(lut[255] == std::array<std::uint8_t, 3>{253, 231, 37});
  }

  TEST_CASE("rendered files") {
    testing::TempDir dir;
    std::mt19937 rng(61);
    const auto as = synth::random_saliency(6, 7, rng, SaliencyKind::AS);
    const auto rs = synth::random_saliency(6, 7, rng, SaliencyKind::RS);
    const auto h = compute_heatmaps(as, rs);

    KeypointSet kp;
    kp.keypoints.push_back({0, 0, 1, 3, 2});
    const auto pgm = render_heatmaps(h, dir / "h", HeatmapFormat::Pgm, &kp);
    REQUIRE(pgm.size() == 5);
    CHECK(pgm[0].filename() == "h_as.pgm");
    CHECK(pgm[4].filename() == "h_rs_minus_as.pgm");
    const auto img = load_image(pgm[2]);
    CHECK(img.width == 7);
    CHECK(img.height == 6);
    CHECK(img.channels == 1);
    CHECK(img.pixels[2 * 7 + 3] == 255);
    CHECK(img.pixels[1 * 7 + 3] == 255);
    CHECK(img.pixels[2 * 7 + 4] == 255);

    const auto png = render_heatmaps(h, dir / "h", HeatmapFormat::Png);
    CHECK(png[1].filename() == "h_rs.png");
    const auto color = load_image(png[0]);
    CHECK(color.channels == 3);
    const auto q = quantize(h.as);
    for (std::size_t p = 0; p < q.size(); ++p)
      CHECK(color.pixels[p * 3 + 1] == viridis_lut()[q.values()[p]][1]);
  }
}
