// d2d command-line front end.

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "bench.hpp"
#include "d2d/detect.hpp"
#include "d2d/error.hpp"
#include "d2d/eval.hpp"
#include "d2d/match.hpp"
#include "d2d/parallel.hpp"
#include "d2d/refdesc.hpp"
#include "d2d/saliency.hpp"
#include "d2d/tensor_io.hpp"
#include "d2d/version.hpp"
#include "d2d/viz.hpp"

namespace fs = std::filesystem;
using namespace d2d;

namespace {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kNotFound = 3,
  kFormat = 4,
  kValidation = 5,
  kData = 6,
  kPrecondition = 7,
  kDegenerate = 8,
  kIo = 9,
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotFound: return kNotFound;
    case ErrorKind::Format: return kFormat;
    case ErrorKind::Validation: return kValidation;
    case ErrorKind::Data: return kData;
    case ErrorKind::Precondition: return kPrecondition;
    case ErrorKind::Degenerate: return kDegenerate;
    case ErrorKind::Io: return kIo;
  }
  return kInternal;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) fail(ErrorKind::Io, path.string() + ": cannot open for writing");
  out << text;
  if (!out) fail(ErrorKind::Io, path.string() + ": write failed");
}

struct WindowFlags {
  int radius = 5;
  int step = 2;
  std::string weights = "uniform";
  double sigma = 2.0;

  void add(CLI::App* cmd) {
    cmd->add_option("--r-rs", radius, "relative-saliency window radius, grid units")->capture_default_str();
    cmd->add_option("--step", step, "neighbour sampling step, grid units")->capture_default_str();
    cmd->add_option("--weights", weights, "window weights")
        ->check(CLI::IsMember({"uniform", "gaussian"}))
        ->capture_default_str();
    cmd->add_option("--sigma", sigma, "Gaussian weight sigma, grid units")->capture_default_str();
  }

  RsWindow window() const {
    RsWindow w;
    w.radius = radius;
    w.sample_step = step;
    w.weights = weights == "gaussian" ? WindowWeights::Gaussian : WindowWeights::Uniform;
    w.sigma = sigma;
    w.validate();
    return w;
  }
};

struct DescribeCmd {
  std::string image, out;
  CLI::App* add(CLI::App& app) {
    auto* c = app.add_subcommand("describe", "compute the gradient-histogram dense descriptor of an image");
    c->add_option("--image", image, "input PGM/PPM/PNG")->required();
    c->add_option("--out", out, "output tensor (.npy); the .json sidecar is written next to it")->required();
    return c;
  }
  void run() const { save_descriptor_map(describe_dense(to_gray(load_image(image))), out); }
};

struct DetectCmd {
  std::string desc, out, desc_out, score_out, mode = "both", combine = "none", score_map,
                                              mean_scope = "full";
  std::size_t k = 0;
  int nms_radius = 0;
  double alpha = 0.015;
  WindowFlags window;

  CLI::App* add(CLI::App& app) {
    auto* c = app.add_subcommand("detect", "select keypoints from a descriptor map");
    c->add_option("--desc", desc, "descriptor tensor (.npy with .json sidecar)")->required();
    c->add_option("--k", k, "keypoint budget")->required()->check(CLI::PositiveNumber);
    c->add_option("--mode", mode, "score: as, rs or both (product)")
        ->check(CLI::IsMember({"as", "rs", "both"}))
        ->capture_default_str();
    window.add(c);
    c->add_option("--nms", nms_radius, "keep strict local maxima within this radius (0 = off)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    c->add_option("--combine", combine, "joint-detector combination")
        ->check(CLI::IsMember({"none", "superpoint", "d2net"}))
        ->capture_default_str();
    c->add_option("--score-map", score_map, "native detector score map (.npy + .json)");
    c->add_option("--alpha", alpha, "original detection threshold (--combine superpoint)")->capture_default_str();
    c->add_option("--mean-scope", mean_scope, "mean used by --combine d2net")
        ->check(CLI::IsMember({"full", "candidates"}))
        ->capture_default_str();
    c->add_option("--out", out, "keypoint CSV")->required();
    c->add_option("--desc-out", desc_out, "normalized keypoint descriptors (.npy)");
    c->add_option("--score-out", score_out, "score map (.npy + .json)");
    return c;
  }

  void run() const {
    const auto map = load_descriptor_map(desc);
    const auto w = window.window();
    const auto score_mode = score_mode_from_string(mode);
    auto score = compute_score(map, score_mode, w);
    KeypointSet kps;
    if (combine == "none") {
      if (!score_map.empty()) fail(ErrorKind::Validation, "--score-map requires --combine");
      kps = nms_radius > 0 ? local_maxima(score, map, nms_radius) : extract_topk(score, map, k);
    } else {
      if (score_mode != ScoreMode::Both) fail(ErrorKind::Validation, "--combine needs --mode both");
      if (combine == "superpoint") {
        if (score_map.empty()) fail(ErrorKind::Validation, "--combine superpoint needs --score-map");
        const auto original = load_saliency_map(score_map);
        const double threshold = rescale_threshold(score, original, alpha);
        SaliencyMap combined = score;
        combined.kind = SaliencyKind::External;
        for (std::size_t i = 0; i < combined.values.size(); ++i)
          combined.values.values()[i] *= original.values.values()[i];
        kps = extract_above(combined, map, threshold);
        std::cerr << std::setprecision(9) << "alpha* = " << threshold << '\n';
      } else {
        const auto peaks = score_map.empty() ? score : load_saliency_map(score_map);
        const auto candidates = local_maxima(peaks, map, nms_radius > 0 ? nms_radius : 1);
        kps = filter_maxima(score, candidates,
                            mean_scope == "full" ? MeanScope::FullMap : MeanScope::Candidates);
      }
    }
    if (kps.size() > k) {
      kps.keypoints.resize(k);
      attach_descriptors(kps, map);
    }
    write_keypoints(out, kps);
    if (!desc_out.empty()) write_keypoint_descriptors(desc_out, kps);
    if (!score_out.empty()) save_saliency_map(score, score_out);
  }
};

struct MatchCmd {
  std::string a, a_desc, b, b_desc, out;
  CLI::App* add(CLI::App& app) {
    auto* c = app.add_subcommand("match", "mutual nearest-neighbour matching of two keypoint sets");
    c->add_option("--a", a, "keypoint CSV of image A")->required();
    c->add_option("--a-desc", a_desc, "descriptors of A (.npy)")->required();
    c->add_option("--b", b, "keypoint CSV of image B")->required();
    c->add_option("--b-desc", b_desc, "descriptors of B (.npy)")->required();
    c->add_option("--out", out, "match CSV")->required();
    return c;
  }
  void run() const {
    auto ka = read_keypoints(a);
    auto kb = read_keypoints(b);
    read_keypoint_descriptors(a_desc, ka);
    read_keypoint_descriptors(b_desc, kb);
    write_matches(out, mutual_nn(ka, kb));
  }
};

struct DatasetFlags {
  std::string root, desc_dir;
  std::size_t k = 0;
  void add(CLI::App* c) {
    c->add_option("--root", root, "directory of HPatches-style sequences (v_*, i_*)")->required();
    c->add_option("--desc-dir", desc_dir,
                  "precomputed maps as <dir>/<sequence>/<k>.npy; built-in descriptor when omitted");
    c->add_option("--k", k, "keypoint budget per image")->required()->check(CLI::PositiveNumber);
  }
  std::vector<DescriptorPair> pairs() const { return make_pairs(load_sequence_maps(root, desc_dir)); }
};

struct EvalCmd {
  DatasetFlags data;
  WindowFlags window;
  std::string mode = "both", out, csv;
  CLI::App* add(CLI::App& app) {
    auto* c = app.add_subcommand("eval-hpatches", "MMA over 1..10 px with keypoint and match counts");
    data.add(c);
    window.add(c);
    c->add_option("--mode", mode, "score: as, rs or both")
        ->check(CLI::IsMember({"as", "rs", "both"}))
        ->capture_default_str();
    c->add_option("--out", out, "JSON report")->required();
    c->add_option("--csv", csv, "threshold,mma_overall,mma_viewpoint,mma_illumination");
    return c;
  }
  void run() const {
    PipelineConfig config;
    config.mode = score_mode_from_string(mode);
    config.window = window.window();
    config.k = data.k;
    const auto report = evaluate(data.pairs(), config);
    write_text(out, report_json(report));
    if (!csv.empty()) write_text(csv, report_csv(report));
  }
};

std::string ablation_row(const std::string& label, const AblationResult& r) {
  std::ostringstream s;
  s << label << ',' << std::setprecision(10) << r.mean_mma << ',' << r.pairs_used << ','
    << r.pairs_excluded << ',' << (r.degenerate ? 1 : 0) << '\n';
  return s.str();
}

struct AblateCmd {
  DatasetFlags data;
  WindowFlags window;
  std::string out;
  CLI::App* add(CLI::App& app) {
    auto* c = app.add_subcommand("ablate", "mean MMA with AS only, RS only and both");
    data.add(c);
    window.add(c);
    c->add_option("--out", out, "CSV: mode,mean_mma,pairs_used,pairs_excluded,degenerate")->required();
    return c;
  }
  void run() const {
    const auto pairs = data.pairs();
    std::string text = "mode,mean_mma,pairs_used,pairs_excluded,degenerate\n";
    for (auto mode : {ScoreMode::AS, ScoreMode::RS, ScoreMode::Both})
      text += ablation_row(to_string(mode), ablation_run(pairs, mode, data.k, window.window()));
    write_text(out, text);
  }
};

struct SweepCmd {
  DatasetFlags data;
  std::vector<int> radii{5};
  int step = 2;
  std::string out;
  CLI::App* add(CLI::App& app) {
    auto* c = app.add_subcommand("sweep-rrs", "RS-only mean MMA for several window radii");
    data.add(c);
    c->add_option("--r", radii, "comma-separated radii")->delimiter(',')->capture_default_str();
    c->add_option("--step", step, "neighbour sampling step")->capture_default_str();
    c->add_option("--out", out, "CSV: r,mean_mma,pairs_used,pairs_excluded,degenerate")->required();
    return c;
  }
  void run() const {
    std::string text = "r,mean_mma,pairs_used,pairs_excluded,degenerate\n";
    for (const auto& p : sweep_rrs(data.pairs(), radii, data.k, step))
      text += ablation_row(std::to_string(p.radius), p.result);
    write_text(out, text);
  }
};

struct RepeatabilityCmd {
  std::string a, b, h, root, mode = "both", out;
  std::vector<std::string> detectors;
  std::size_t k = 0;
  double eps = 3.0;
  WindowFlags window;

  CLI::App* add(CLI::App& app) {
    auto* c = app.add_subcommand("repeatability",
                                 "keypoint repeatability of one pair, or a normalized cross-detector table");
    c->add_option("--a", a, "source keypoint CSV (pair mode)");
    c->add_option("--b", b, "destination keypoint CSV (pair mode)");
    c->add_option("--homography", h, "homography file mapping A to B (pair mode)");
    c->add_option("--root", root, "HPatches-style root (table mode)");
    c->add_option("--detector", detectors,
                  "NAME=DIR with maps under DIR/<sequence>/<k>.npy, or NAME=refdesc (table mode)");
    c->add_option("--k", k, "keypoint budget per image (table mode)");
    c->add_option("--mode", mode, "score: as, rs or both (table mode)")
        ->check(CLI::IsMember({"as", "rs", "both"}))
        ->capture_default_str();
    window.add(c);
    c->add_option("--eps", eps, "pixel tolerance")->capture_default_str();
    c->add_option("--out", out, "output file (value in pair mode, CSV table in table mode)");
    return c;
  }

  void run() const {
    const bool pair_mode = !a.empty() || !b.empty() || !h.empty();
    const bool table_mode = !root.empty() || !detectors.empty();
    if (pair_mode == table_mode)
      fail(ErrorKind::Validation, "use either --a/--b/--homography or --root/--detector");
    if (pair_mode) {
      if (a.empty() || b.empty() || h.empty()) fail(ErrorKind::Validation, "pair mode needs --a, --b and --homography");
      std::ostringstream s;
      s << std::setprecision(10) << repeatability(read_keypoints(a), read_keypoints(b), load_homography(h), eps)
        << '\n';
      if (out.empty()) {
        std::cout << s.str();
      } else {
        write_text(out, s.str());
      }
      return;
    }
    if (root.empty() || detectors.empty() || k == 0)
      fail(ErrorKind::Validation, "table mode needs --root, --k and at least one --detector");
    const auto w = window.window();
    const auto score_mode = score_mode_from_string(mode);
    std::vector<DetectorOutput> outputs;
    std::vector<Homography> homographies;
    for (const auto& entry : detectors) {
      const auto eq = entry.find('=');
      if (eq == std::string::npos || eq == 0)
        fail(ErrorKind::Validation, "--detector expects NAME=DIR, got '" + entry + "'");
      const std::string dir = entry.substr(eq + 1);
      const auto pairs = make_pairs(load_sequence_maps(root, dir == "refdesc" ? fs::path{} : fs::path{dir}));
      DetectorOutput o;
      o.name = entry.substr(0, eq);
      if (homographies.empty()) {
        for (const auto& p : pairs) homographies.push_back(p.h);
      }
      for (const auto& p : pairs) {
        o.pairs.emplace_back(extract_topk(compute_score(*p.a, score_mode, w), *p.a, k),
                             extract_topk(compute_score(*p.b, score_mode, w), *p.b, k));
      }
      outputs.push_back(std::move(o));
    }
    const auto text = table_csv(repeatability_table(outputs, homographies, eps));
    if (out.empty()) {
      std::cout << text;
    } else {
      write_text(out, text);
    }
  }
};

struct HeatmapCmd {
  std::string desc, prefix, keypoints;
  bool png = false;
  WindowFlags window;
  CLI::App* add(CLI::App& app) {
    auto* c = app.add_subcommand("heatmap", "write normalized AS, RS, D2D and difference heat maps");
    c->add_option("--desc", desc, "descriptor tensor (.npy + .json)")->required();
    c->add_option("--out-prefix", prefix, "output path prefix")->required();
    c->add_flag("--png", png, "colormapped PNG instead of grayscale PGM");
    c->add_option("--keypoints", keypoints, "keypoint CSV to overlay as crosses");
    window.add(c);
    return c;
  }
  void run() const {
    const auto map = load_descriptor_map(desc);
    const auto maps = compute_heatmaps(absolute_saliency(map), relative_saliency(map, window.window()));
    for (const auto& w : maps.warnings) std::cerr << "warning: " << w << '\n';
    KeypointSet overlay;
    if (!keypoints.empty()) overlay = read_keypoints(keypoints);
    render_heatmaps(maps, prefix, png ? HeatmapFormat::Png : HeatmapFormat::Pgm,
                    keypoints.empty() ? nullptr : &overlay);
  }
};

struct BenchCmd {
  tools::BenchOptions options;
  std::string out;
  CLI::App* add(CLI::App& app) {
    auto* c = app.add_subcommand("bench", "time the AS and RS kernels on a random map");
    c->add_option("--rows", options.rows)->capture_default_str();
    c->add_option("--cols", options.cols)->capture_default_str();
    c->add_option("--channels", options.channels)->capture_default_str();
    c->add_option("--r-rs", options.radius)->capture_default_str();
    c->add_option("--step", options.step)->capture_default_str();
    c->add_option("--repeats", options.repeats, "median of N runs")->capture_default_str();
    c->add_option("--seed", options.seed)->capture_default_str();
    c->add_option("--out", out, "CSV output (stdout when omitted)");
    return c;
  }
  void run() const {
    const auto text = tools::run_bench(options);
    if (out.empty()) {
      std::cout << text;
    } else {
      write_text(out, text);
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keypoint detection from dense descriptor maps"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "worker thread cap (0 = all cores)")->capture_default_str();
  app.set_version_flag("--version", version_string());

  DescribeCmd describe;
  DetectCmd detect;
  MatchCmd match;
  EvalCmd eval;
  AblateCmd ablate;
  SweepCmd sweep;
  RepeatabilityCmd repeat;
  HeatmapCmd heatmap;
  BenchCmd bench;
  const std::vector<std::pair<CLI::App*, std::function<void()>>> commands = {
      {describe.add(app), [&] { describe.run(); }}, {detect.add(app), [&] { detect.run(); }},
      {match.add(app), [&] { match.run(); }},       {eval.add(app), [&] { eval.run(); }},
      {ablate.add(app), [&] { ablate.run(); }},     {sweep.add(app), [&] { sweep.run(); }},
      {repeat.add(app), [&] { repeat.run(); }},     {heatmap.add(app), [&] { heatmap.run(); }},
      {bench.add(app), [&] { bench.run(); }},
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    set_max_threads(threads);
    for (const auto& [cmd, run] : commands) {
      if (cmd->parsed()) run();
    }
  } catch (const Error& e) {
    std::cerr << "d2d: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "d2d: internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kOk;
}
