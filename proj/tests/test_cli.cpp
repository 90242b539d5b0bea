#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "d2d/detect.hpp"
#include "d2d/image.hpp"
#include "d2d/match.hpp"
#include "d2d/npy.hpp"
#include "d2d/saliency.hpp"
#include "d2d/tensor_io.hpp"
#include "run.hpp"
#include "synth.hpp"
#include "tmpdir.hpp"

using namespace d2d;
using testing::read_file;

namespace {

struct Fixture {
  testing::TempDir dir;

  Fixture() {
    std::mt19937 rng(71);
    const auto tex = synth::smooth_texture(256, 256, 2.0, rng);
    Grid<std::uint8_t> gray(256, 256);
    for (std::size_t i = 0; i < tex.size(); ++i) gray.values()[i] = static_cast<std::uint8_t>(tex.values()[i]);
    save_pgm(dir / "img.pgm", gray);
    synth::write_hpatches_sequence(dir / "hp", "v_one", 128, 72);
    synth::write_hpatches_sequence(dir / "hp", "i_two", 128, 73);
    REQUIRE(run({"describe", "--image", (dir / "img.pgm").string(), "--out", (dir / "img.npy").string()}) == 0);
  }

  int run(const std::vector<std::string>& args) const { return testing::run_cli(args, dir.path()); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  std::string stdout_text() const { return read_file(dir / "stdout.txt"); }
  std::string stderr_text() const { return read_file(dir / "stderr.txt"); }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

std::size_t data_rows(const std::string& text) {
  std::size_t n = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#' && line[0] != 'x') ++n;
  return n;
}

void write_json(const std::string& path, const nlohmann::json& j) { std::ofstream(path) << j.dump(); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("version and usage") {
    auto& f = fixture();
    CHECK(f.run({"--version"}) == 0);
    CHECK(f.stdout_text().rfind("d2d ", 0) == 0);
    CHECK(f.run({}) == 2);
    CHECK(f.run({"detect", "--bogus"}) == 2);
    CHECK(f.run({"detect", "--desc", f.path("img.npy"), "--out", f.path("k.txt")}) == 2);  // --k is required
  }

  TEST_CASE("describe writes a tensor with sidecar") {
    auto& f = fixture();
    const auto m = load_descriptor_map(f.path("img.npy"));
    CHECK(m.rows() == 57);
    CHECK(m.cols() == 57);
    CHECK(m.channels() == 128);
  }

  TEST_CASE("detect returns exactly k keypoints") {
    auto& f = fixture();
    REQUIRE(f.run({"detect", "--desc", f.path("img.npy"), "--k", "100", "--out", f.path("k100.txt"), "--desc-out",
                   f.path("k100.npy"), "--score-out", f.path("score.npy")}) == 0);
    const auto kp = read_keypoints(f.path("k100.txt"));
    CHECK(kp.size() == 100);
    CHECK(data_rows(read_file(f.path("k100.txt"))) == 100);
    for (std::size_t i = 1; i < kp.size(); ++i) CHECK(kp.keypoints[i - 1].score >= kp.keypoints[i].score);
    std::vector<std::size_t> shape;
    CHECK(npy::read_f32(f.path("k100.npy"), shape).size() == 100 * 128);
    CHECK(load_saliency_map(f.path("score.npy")).kind == SaliencyKind::D2D);

    // Budget larger than the grid: every cell.
    REQUIRE(f.run({"detect", "--desc", f.path("img.npy"), "--k", "100000", "--out", f.path("kall.txt")}) == 0);
    CHECK(read_keypoints(f.path("kall.txt")).size() == 57 * 57);

    REQUIRE(f.run({"detect", "--desc", f.path("img.npy"), "--k", "100", "--nms", "2", "--mode", "rs",
                   "--weights", "gaussian", "--out", f.path("knms.txt")}) == 0);
    const auto nmsd = read_keypoints(f.path("knms.txt"));
    CHECK(nmsd.size() <= 100);
    for (std::size_t i = 0; i < nmsd.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        CHECK(std::max(std::abs(nmsd.keypoints[i].grid_x - nmsd.keypoints[j].grid_x),
                       std::abs(nmsd.keypoints[i].grid_y - nmsd.keypoints[j].grid_y)) > 2);
  }

  TEST_CASE("combined detectors") {
    auto& f = fixture();
    std::mt19937 rng(74);
    SaliencyMap so{Grid<double>(57, 57), SaliencyKind::External, GridGeometry::hardnet(), {256, 256}};
    for (auto& v : so.values.values()) v = std::uniform_real_distribution<double>(0, 1)(rng);
    save_saliency_map(so, f.path("so.npy"));
    REQUIRE(f.run({"detect", "--desc", f.path("img.npy"), "--k", "200", "--combine", "superpoint", "--score-map",
                   f.path("so.npy"), "--alpha", "0.015", "--out", f.path("ksp.txt")}) == 0);
    CHECK(read_keypoints(f.path("ksp.txt")).size() <= 200);
    REQUIRE(f.run({"detect", "--desc", f.path("img.npy"), "--k", "200", "--combine", "d2net", "--score-map",
                   f.path("so.npy"), "--out", f.path("kd2.txt")}) == 0);
    CHECK(read_keypoints(f.path("kd2.txt")).size() <= 200);
    REQUIRE(f.run({"detect", "--desc", f.path("img.npy"), "--k", "200", "--combine", "d2net", "--mean-scope",
                   "candidates", "--out", f.path("kd3.txt")}) == 0);

    // Zero-mean native score map: the threshold transfer is undefined.
    SaliencyMap zero = so;
    for (auto& v : zero.values.values()) v = 0.0;
    save_saliency_map(zero, f.path("zero.npy"));
    CHECK(f.run({"detect", "--desc", f.path("img.npy"), "--k", "10", "--combine", "superpoint", "--score-map",
                 f.path("zero.npy"), "--out", f.path("kz.txt")}) == 8);
    CHECK(f.run({"detect", "--desc", f.path("img.npy"), "--k", "10", "--score-map", f.path("so.npy"), "--out",
                 f.path("kz.txt")}) == 5);
  }

  TEST_CASE("match, repeatability and heatmap") {
    auto& f = fixture();
    REQUIRE(f.run({"detect", "--desc", f.path("img.npy"), "--k", "100", "--out", f.path("ka.txt"), "--desc-out",
                   f.path("ka.npy")}) == 0);
    REQUIRE(f.run({"match", "--a", f.path("ka.txt"), "--a-desc", f.path("ka.npy"), "--b", f.path("ka.txt"),
                   "--b-desc", f.path("ka.npy"), "--out", f.path("m.txt")}) == 0);
    CHECK(read_matches(f.path("m.txt")).pairs.size() <= 100);
    CHECK(read_matches(f.path("m.txt")).pairs.size() >= 90);

    save_homography(f.path("H"), Homography::identity());
    REQUIRE(f.run({"repeatability", "--a", f.path("ka.txt"), "--b", f.path("ka.txt"), "--homography", f.path("H")}) ==
            0);
    CHECK(std::stod(f.stdout_text()) == 1.0);

    REQUIRE(f.run({"heatmap", "--desc", f.path("img.npy"), "--out-prefix", f.path("heat"), "--keypoints",
                   f.path("ka.txt")}) == 0);
    CHECK(std::filesystem::exists(f.path("heat_d2d.pgm")));
    REQUIRE(f.run({"heatmap", "--desc", f.path("img.npy"), "--out-prefix", f.path("heat"), "--png"}) == 0);
    CHECK(std::filesystem::exists(f.path("heat_rs_minus_as.png")));
  }

  TEST_CASE("evaluation subcommands") {
    auto& f = fixture();
    const auto root = f.path("hp");
    REQUIRE(f.run({"eval-hpatches", "--root", root, "--k", "100", "--out", f.path("e.json"), "--csv",
                   f.path("e.csv")}) == 0);
    const auto j = nlohmann::json::parse(read_file(f.path("e.json")));
    CHECK(j["pairs"].size() == 10);
    CHECK(j["thresholds"].size() == 10);
    CHECK(read_file(f.path("e.csv")).rfind("threshold,mma_overall", 0) == 0);

    REQUIRE(f.run({"ablate", "--root", root, "--k", "100", "--out", f.path("ab.csv")}) == 0);
    const auto ab = read_file(f.path("ab.csv"));
    CHECK(ab.rfind("mode,mean_mma,pairs_used,pairs_excluded,degenerate\n", 0) == 0);
    CHECK(data_rows(ab) == 4);

    REQUIRE(f.run({"sweep-rrs", "--root", root, "--k", "100", "--r", "1,3,5", "--out", f.path("sw.csv")}) == 0);
    const auto sw = read_file(f.path("sw.csv"));
    CHECK(std::count(sw.begin(), sw.end(), '\n') == 4);

    REQUIRE(f.run({"repeatability", "--root", root, "--k", "100", "--detector", "ref=refdesc", "--out",
                   f.path("rt.csv")}) == 0);
    CHECK(read_file(f.path("rt.csv")).rfind("source,", 0) == 0);
  }

  TEST_CASE("bench") {
    auto& f = fixture();
    REQUIRE(f.run({"bench", "--rows", "12", "--cols", "12", "--channels", "8", "--repeats", "3"}) == 0);
    const auto text = f.stdout_text();
    CHECK(text.rfind("kernel,rows,cols,channels,radius,step,repeats,median_ms,checksum,max_rel_diff_vs_naive", 0) == 0);
    CHECK(data_rows(text) >= 3);
  }

  TEST_CASE("exit codes distinguish error kinds") {
    auto& f = fixture();
    std::set<int> codes;
    auto expect = [&](int code, const std::vector<std::string>& args) {
      const int got = f.run(args);
      CHECK_MESSAGE(got == code, f.stderr_text());
      CHECK_FALSE(f.stderr_text().empty());
      codes.insert(got);
    };
    // Missing input.
    expect(3, {"detect", "--desc", f.path("nope.npy"), "--k", "5", "--out", f.path("x.txt")});
    // Not an npy file.
    std::ofstream(f.path("junk.npy")) << "junk";
    write_json(f.path("junk.json"), {{"image_height", 256}, {"image_width", 256}});
    expect(4, {"detect", "--desc", f.path("junk.npy"), "--k", "5", "--out", f.path("x.txt")});
    // Bad window.
    expect(5, {"detect", "--desc", f.path("img.npy"), "--k", "5", "--r-rs", "0", "--out", f.path("x.txt")});
    // Non-finite tensor.
    {
      std::vector<float> v(57 * 57 * 4, 1.0f);
      v[17] = std::numeric_limits<float>::quiet_NaN();
      const std::vector<std::size_t> shape{57, 57, 4};
      npy::write_f32(f.path("nan.npy"), shape, v);
      write_json(f.path("nan.json"), {{"image_height", 256}, {"image_width", 256}});
    }
    expect(6, {"detect", "--desc", f.path("nan.npy"), "--k", "5", "--out", f.path("x.txt")});
    // AS needs unnormalized descriptors.
    {
      std::vector<float> v(57 * 57 * 4, 0.5f);
      const std::vector<std::size_t> shape{57, 57, 4};
      npy::write_f32(f.path("unit.npy"), shape, v);
      write_json(f.path("unit.json"), {{"image_height", 256}, {"image_width", 256}, {"normalized", true}});
    }
    expect(7, {"detect", "--desc", f.path("unit.npy"), "--k", "5", "--mode", "as", "--out", f.path("x.txt")});
    // A failed write.
    expect(9, {"describe", "--image", f.path("img.pgm"), "--out", f.path("no/such/dir/out.npy")});
    // Usage.
    expect(2, {"detect", "--k", "five"});
    CHECK(codes.size() == 7);
  }

  TEST_CASE("outputs are deterministic across runs and thread counts") {
    auto& f = fixture();
    auto detect = [&](const std::string& threads, const std::string& tag) {
      REQUIRE(f.run({"--threads", threads, "detect", "--desc", f.path("img.npy"), "--k", "300", "--out",
                     f.path("det" + tag + ".txt"), "--desc-out", f.path("det" + tag + ".npy")}) == 0);
      return read_file(f.path("det" + tag + ".txt")) + read_file(f.path("det" + tag + ".npy"));
    };
    const auto first = detect("1", "a");
    CHECK(detect("1", "b") == first);
    CHECK(detect("4", "c") == first);

    auto eval = [&](const std::string& threads, const std::string& tag) {
      REQUIRE(f.run({"--threads", threads, "eval-hpatches", "--root", f.path("hp"), "--k", "80", "--out",
                     f.path("ev" + tag + ".json")}) == 0);
      return read_file(f.path("ev" + tag + ".json"));
    };
    const auto e1 = eval("1", "a");
    CHECK(eval("4", "b") == e1);
  }
}
