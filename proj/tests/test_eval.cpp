#include <doctest.h>

#include <random>

#include <json.hpp>

#include "d2d/error.hpp"
#include "d2d/eval.hpp"
#include "d2d/refdesc.hpp"
#include "error_kind.hpp"
#include "keypoints.hpp"
#include "oracles.hpp"
#include "synth.hpp"
#include "tmpdir.hpp"

using namespace d2d;
using testing::error_kind;
using testing::keypoints_at;

namespace {

std::vector<Point2> random_points(std::size_t n, double extent, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, extent);
  std::vector<Point2> out(n);
  for (auto& p : out) p = {u(rng), u(rng)};
  return out;
}

PairResult result(SequenceKind kind, std::vector<double> mma, std::size_t ka, std::size_t kb,
                  std::size_t matches, bool excluded = false) {
  PairResult r;
  r.kind = kind;
  r.mma = std::move(mma);
  r.keypoints_a = ka;
  r.keypoints_b = kb;
  r.matches = matches;
  r.excluded = excluded;
  return r;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("mma agrees with direct counting") {
    std::mt19937 rng(51);
    const Homography h{{1.01, 0.02, 3.0, -0.015, 0.99, -2.0, 1e-5, -2e-5, 1.0}};
    std::normal_distribution<double> noise(0.0, 4.0);
    for (int t = 0; t < 20; ++t) {
      const auto pa = random_points(40, 300, rng);
      std::vector<Point2> pb;
      for (const auto& p : pa) {
        const auto q = oracle::project(h, p);
        pb.push_back({q.x + noise(rng), q.y + noise(rng)});
      }
      MatchSet m;
      std::vector<std::pair<Point2, Point2>> matched;
      for (std::size_t i = 0; i < pa.size(); i += 1 + rng() % 3) {
        const std::size_t j = (i * 7 + t) % pb.size();
        const std::size_t jj = rng() % 2 ? i : j;
        m.pairs.push_back({i, jj, 0.0});
        matched.emplace_back(pa[i], pb[jj]);
      }
      const auto got = mma(m, keypoints_at(pa), keypoints_at(pb), h, default_thresholds());
      const auto want = oracle::mma(matched, h, default_thresholds());
      CHECK(got == want);
      for (std::size_t k = 1; k < got.size(); ++k) CHECK(got[k - 1] <= got[k]);
    }
  }

  TEST_CASE("mma edge cases") {
    const auto a = keypoints_at({{0, 0}, {10, 0}});
    const auto b = keypoints_at({{1, 0}, {10, 3}});
    MatchSet m;
    CHECK(mma(m, a, b, Homography::identity(), {1, 2}) == std::vector<double>{0, 0});
    m.pairs = {{0, 0, 0}, {1, 1, 0}};
    // Thresholds are inclusive.
    CHECK(mma(m, a, b, Homography::identity(), {1, 3}) == std::vector<double>{0.5, 1.0});
    // A point sent to infinity is a miss, not an error.
    const Homography vanish{{1, 0, 0, 0, 1, 0, -0.1, 0, 1}};
    CHECK(mma(m, a, b, vanish, {100}) == std::vector<double>{0.5});
    m.pairs.push_back({2, 0, 0});
    CHECK(error_kind([&] { mma(m, a, b, Homography::identity(), {1}); }) == ErrorKind::Validation);
    CHECK(error_kind([&] { mma({}, a, b, Homography::identity(), {0}); }) == ErrorKind::Validation);
    CHECK(default_thresholds() == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  }

  TEST_CASE("repeatability of a set with itself is one") {
    std::mt19937 rng(52);
    for (int t = 0; t < 10; ++t) {
      const auto a = keypoints_at(random_points(1 + rng() % 300, 640, rng), 640, 640);
      CHECK(repeatability(a, a, Homography::identity(), 3.0) == 1.0);
    }
  }

  TEST_CASE("greedy assignment on well separated points is maximal") {
    std::mt19937 rng(53);
    std::uniform_real_distribution<double> jitter(-2.5, 2.5);
    for (int t = 0; t < 30; ++t) {
      // Points on a 10 px lattice; eps = 3 makes each point see at most one partner.
      std::vector<Point2> pa, pb;
      for (int i = 0; i < 8; ++i) {
        const Point2 p{10.0 * (rng() % 10) + 5, 10.0 * (rng() % 10) + 5};
        pa.push_back(p);
        if (rng() % 3) pb.push_back({p.x + jitter(rng) / 1.5, p.y + jitter(rng) / 1.5});
      }
      auto dedupe = [](std::vector<Point2>& v) {
        std::vector<Point2> out;
        for (const auto& p : v) {
          bool dup = false;
          for (const auto& q : out) dup = dup || std::hypot(p.x - q.x, p.y - q.y) < 4.0;
          if (!dup) out.push_back(p);
        }
        v = out;
      };
      dedupe(pa);
      dedupe(pb);
      const double got = repeatability(keypoints_at(pa, 120, 120), keypoints_at(pb, 120, 120),
                                       Homography::identity(), 3.0);
      CHECK(got == double(oracle::max_assignment(pa, pb, 3.0)) / pa.size());
    }
  }

  TEST_CASE("greedy never beats the maximum assignment") {
    std::mt19937 rng(54);
    for (int t = 0; t < 40; ++t) {
      const auto pa = random_points(7, 12, rng);
      const auto pb = random_points(7, 12, rng);
      const double got =
          repeatability(keypoints_at(pa, 12, 12), keypoints_at(pb, 12, 12), Homography::identity(), 3.0);
      CHECK(got <= double(oracle::max_assignment(pa, pb, 3.0)) / 7.0 + 1e-15);
    }
  }

  TEST_CASE("repeatability only counts points projecting into b") {
    const auto a = keypoints_at({{5, 5}, {50, 50}, {95, 5}}, 100, 100);
    const auto b = keypoints_at({{25, 5}, {70, 50}}, 100, 100);
    // Shift by +20: (95, 5) leaves the image.
    CHECK(repeatability(a, b, Homography::translation(20, 0), 3.0) == 1.0);
    CHECK(repeatability(a, b, Homography::translation(200, 0), 3.0) == 0.0);
    CHECK(error_kind([&] { repeatability(a, b, Homography::identity(), 0.0); }) == ErrorKind::Validation);
  }

  TEST_CASE("repeatability table normalizes rows by the diagonal") {
    const auto a = keypoints_at({{5, 5}, {20, 20}, {40, 40}, {60, 60}}, 100, 100);
    const auto b = keypoints_at({{5, 5}, {20, 20}, {40, 40}}, 100, 100);
    DetectorOutput da{"a", {{a, a}}};
    DetectorOutput db{"b", {{b, b}}};
    const auto t = repeatability_table({da, db}, {Homography::identity()}, 3.0);
    CHECK(t.detectors == std::vector<std::string>{"a", "b"});
    CHECK(t.values(0, 0) == 1.0);
    CHECK(t.values(1, 1) == 1.0);
    CHECK(t.values(0, 1) == doctest::Approx(0.75));
    CHECK(t.values(1, 0) == doctest::Approx(1.0));
    CHECK(table_csv(t).rfind("source,a,b\n", 0) == 0);

    DetectorOutput empty{"e", {{keypoints_at({}, 100, 100), keypoints_at({}, 100, 100)}}};
    CHECK(error_kind([&] { repeatability_table({empty}, {Homography::identity()}, 3.0); }) ==
          ErrorKind::Degenerate);
    CHECK(error_kind([&] { repeatability_table({da}, {}, 3.0); }) == ErrorKind::Validation);
  }

  TEST_CASE("summaries average non-excluded pairs") {
    auto report = summarize({result(SequenceKind::Viewpoint, {0.5, 1.0}, 10, 20, 6),
                             result(SequenceKind::Illumination, {0.0, 0.5}, 10, 10, 4),
                             result(SequenceKind::Viewpoint, {0.0, 0.0}, 0, 10, 0, true)},
                            {1, 2});
    CHECK(report.overall.pairs == 3);
    CHECK(report.overall.excluded == 1);
    CHECK(report.overall.mma == std::vector<double>{0.25, 0.75});
    CHECK(report.viewpoint.mma == std::vector<double>{0.5, 1.0});
    CHECK(report.illumination.mma == std::vector<double>{0.0, 0.5});
    CHECK(report.overall.mean_keypoints == doctest::Approx((15.0 + 10.0 + 5.0) / 3));
    CHECK(report.overall.mean_matches == doctest::Approx(10.0 / 3));
    CHECK(report.overall.match_ratio == doctest::Approx(1.0 / 3));

    const auto j = nlohmann::json::parse(report_json(report));
    CHECK(j["pairs"].size() == 3);
    CHECK(j["overall"]["excluded"] == 1);
    CHECK(report_csv(report) == "threshold,mma_overall,mma_viewpoint,mma_illumination\n1,0.25,0.5,0\n2,0.75,1,0.5\n");
    CHECK(error_kind([] { summarize({result(SequenceKind::Viewpoint, {0.5}, 1, 1, 1)}, {1, 2}); }) ==
          ErrorKind::Validation);
  }

  TEST_CASE("pipeline on a synthetic fixture") {
    testing::TempDir dir;
    synth::write_hpatches_sequence(dir.path(), "v_syn", 128, 5);
    synth::write_hpatches_sequence(dir.path(), "i_syn", 128, 6);
    const auto seqs = load_sequence_maps(dir.path(), {});
    REQUIRE(seqs.size() == 2);
    const auto pairs = make_pairs(seqs);
    REQUIRE(pairs.size() == 10);
    CHECK(pairs[0].sequence == "i_syn");
    CHECK(pairs[0].target == 2);
    CHECK(pairs[9].target == 6);

    PipelineConfig cfg;
    cfg.k = 50;
    const auto report = evaluate(pairs, cfg);
    CHECK(report.pairs.size() == 10);
    CHECK(report.overall.excluded == 0);
    CHECK(report.overall.mean_keypoints == 50.0);
    for (std::size_t t = 1; t < report.overall.mma.size(); ++t) CHECK(report.overall.mma[t - 1] <= report.overall.mma[t]);
    // Illumination pairs share the geometry exactly.
    CHECK(report.illumination.mma[2] > 0.5);

    const auto abl = ablation_run(pairs, ScoreMode::AS, 50);
    CHECK(abl.pairs_used == 10);
    CHECK_FALSE(abl.degenerate);
    const auto sweep = sweep_rrs(pairs, {1, 3}, 50);
    REQUIRE(sweep.size() == 2);
    CHECK(sweep[1].radius == 3);

    cfg.k = 0;
    CHECK(error_kind([&] { evaluate_pair(pairs[0], cfg); }) == ErrorKind::Validation);
  }

  TEST_CASE("flat images are degenerate, not errors") {
    testing::TempDir dir;
    const auto flat = std::make_shared<const DescriptorMap>(describe_dense(Grid<float>(64, 64, 10.0f)));
    const DescriptorPair p{flat, flat, Homography::identity(), "v_flat", SequenceKind::Viewpoint, 2};
    const auto abl = ablation_run({p}, ScoreMode::Both, 10);
    CHECK(abl.degenerate);
  }

  TEST_CASE("external descriptor directories") {
    testing::TempDir dir;
    synth::write_hpatches_sequence(dir / "root", "v_ext", 96, 7);
    std::mt19937 rng(55);
    std::filesystem::create_directories(dir / "desc" / "v_ext");
    for (int k = 1; k <= 6; ++k) {
      const auto m = synth::random_map(17, 17, 8, rng);
      const DescriptorMap hm(17, 17, 8, std::vector<float>(m.data().begin(), m.data().end()),
                             GridGeometry::hardnet(), {96, 96});
      save_descriptor_map(hm, dir / "desc" / "v_ext" / (std::to_string(k) + ".npy"));
    }
    const auto seqs = load_sequence_maps(dir / "root", dir / "desc");
    CHECK(seqs[0].maps[3]->rows() == 17);
    std::filesystem::remove(dir / "desc" / "v_ext" / "4.npy");
    CHECK(error_kind([&] { load_sequence_maps(dir / "root", dir / "desc"); }) == ErrorKind::NotFound);
    CHECK(error_kind([&] { load_sequence_maps(dir / "desc", {}); }) == ErrorKind::NotFound);
  }
}
