#include "d2d/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "d2d/error.hpp"
#include "d2d/refdesc.hpp"

namespace d2d {
namespace {

Point2 position(const Keypoint& kp) { return {kp.x, kp.y}; }

bool all_zero(const SaliencyMap& m) {
  for (double v : m.values.values()) {
    if (v != 0.0) return false;
  }
  return true;
}

EvalSummary summarize_group(const std::vector<const PairResult*>& group, std::size_t n_thresholds) {
  EvalSummary s;
  s.mma.assign(n_thresholds, 0.0);
  s.pairs = group.size();
  if (group.empty()) return s;
  double keypoints = 0.0;
  double matches = 0.0;
  std::size_t averaged = 0;
  for (const auto* r : group) {
    keypoints += 0.5 * static_cast<double>(r->keypoints_a + r->keypoints_b);
    matches += static_cast<double>(r->matches);
    if (r->excluded) {
      ++s.excluded;
      continue;
    }
    for (std::size_t t = 0; t < n_thresholds; ++t) s.mma[t] += r->mma[t];
    ++averaged;
  }
  if (averaged > 0) {
    for (auto& v : s.mma) v /= static_cast<double>(averaged);
  }
  s.mean_keypoints = keypoints / static_cast<double>(group.size());
  s.mean_matches = matches / static_cast<double>(group.size());
  s.match_ratio = s.mean_keypoints > 0.0 ? s.mean_matches / s.mean_keypoints : 0.0;
  return s;
}

nlohmann::json summary_json(const EvalSummary& s) {
  return {{"mma", s.mma},
          {"mean_keypoints", s.mean_keypoints},
          {"mean_matches", s.mean_matches},
          {"match_ratio", s.match_ratio},
          {"pairs", s.pairs},
          {"excluded", s.excluded}};
}

}  // namespace

std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int i = 1; i <= 10; ++i) t.push_back(i);
  return t;
}

std::vector<double> mma(const MatchSet& matches, const KeypointSet& a, const KeypointSet& b,
                        const Homography& h, const std::vector<double>& thresholds) {
  for (double t : thresholds) {
    if (!(t > 0.0)) fail(ErrorKind::Validation, "MMA thresholds must be positive");
  }
  std::vector<double> acc(thresholds.size(), 0.0);
  if (matches.pairs.empty()) return acc;
  std::vector<std::size_t> hits(thresholds.size(), 0);
  for (const auto& m : matches.pairs) {
    if (m.index_a >= a.size() || m.index_b >= b.size())
      fail(ErrorKind::Validation, "match references a keypoint index out of range");
    double err = std::numeric_limits<double>::infinity();
    try {
      const Point2 p = project(h, position(a.keypoints[m.index_a]));
      err = std::hypot(p.x - b.keypoints[m.index_b].x, p.y - b.keypoints[m.index_b].y);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Degenerate) throw;
    }
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      if (err <= thresholds[t]) ++hits[t];
    }
  }
  for (std::size_t t = 0; t < thresholds.size(); ++t)
    acc[t] = static_cast<double>(hits[t]) / static_cast<double>(matches.pairs.size());
  return acc;
}

double repeatability(const KeypointSet& a, const KeypointSet& b, const Homography& h, double eps) {
  if (!(eps > 0.0)) fail(ErrorKind::Validation, "repeatability tolerance must be positive");
  if (b.image_size.height <= 0 || b.image_size.width <= 0)
    fail(ErrorKind::Validation, "destination keypoint set has no image size");

  std::vector<Point2> projected;
  for (const auto& kp : a.keypoints) {
    try {
      const Point2 p = project(h, position(kp));
      if (p.x >= 0.0 && p.y >= 0.0 && p.x < b.image_size.width && p.y < b.image_size.height)
        projected.push_back(p);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Degenerate) throw;
    }
  }
  if (projected.empty()) return 0.0;

  // b sorted by x so each projected point scans only a 2*eps wide band.
  std::vector<std::size_t> by_x(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) by_x[j] = j;
  std::sort(by_x.begin(), by_x.end(), [&](std::size_t l, std::size_t r) {
    return std::tie(b.keypoints[l].x, l) < std::tie(b.keypoints[r].x, r);
  });
  std::vector<double> xs(by_x.size());
  for (std::size_t k = 0; k < by_x.size(); ++k) xs[k] = b.keypoints[by_x[k]].x;

  struct Candidate {
    double distance;
    std::size_t i;
    std::size_t j;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < projected.size(); ++i) {
    const auto lo = std::lower_bound(xs.begin(), xs.end(), projected[i].x - eps) - xs.begin();
    for (auto k = static_cast<std::size_t>(lo); k < xs.size() && xs[k] <= projected[i].x + eps; ++k) {
      const auto j = by_x[k];
      const double d = std::hypot(projected[i].x - b.keypoints[j].x, projected[i].y - b.keypoints[j].y);
      if (d <= eps) candidates.push_back({d, i, j});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& l, const Candidate& r) {
    return std::tie(l.distance, l.i, l.j) < std::tie(r.distance, r.i, r.j);
  });
  std::vector<bool> used_a(projected.size(), false);
  std::vector<bool> used_b(b.size(), false);
  std::size_t assigned = 0;
  for (const auto& c : candidates) {
    if (used_a[c.i] || used_b[c.j]) continue;
    used_a[c.i] = used_b[c.j] = true;
    ++assigned;
  }
  return static_cast<double>(assigned) / static_cast<double>(projected.size());
}

RepeatabilityTable repeatability_table(const std::vector<DetectorOutput>& outputs,
                                       const std::vector<Homography>& homographies, double eps) {
  if (outputs.empty()) fail(ErrorKind::Validation, "repeatability table needs at least one detector");
  for (const auto& o : outputs) {
    if (o.pairs.size() != homographies.size())
      fail(ErrorKind::Validation, "detector '" + o.name + "' was not run on every pair");
  }
  if (homographies.empty()) fail(ErrorKind::Validation, "repeatability table needs at least one pair");

  const std::size_t n = outputs.size();
  RepeatabilityTable table;
  table.values = Grid<double>(n, n);
  for (const auto& o : outputs) table.detectors.push_back(o.name);
  for (std::size_t src = 0; src < n; ++src) {
    for (std::size_t dst = 0; dst < n; ++dst) {
      double sum = 0.0;
      for (std::size_t p = 0; p < homographies.size(); ++p)
        sum += repeatability(outputs[src].pairs[p].first, outputs[dst].pairs[p].second,
                             homographies[p], eps);
      table.values(src, dst) = sum / static_cast<double>(homographies.size());
    }
  }
  for (std::size_t src = 0; src < n; ++src) {
    const double diagonal = table.values(src, src);
    if (diagonal == 0.0)
      fail(ErrorKind::Degenerate, "detector '" + table.detectors[src] + "' has zero self-repeatability");
    for (std::size_t dst = 0; dst < n; ++dst) table.values(src, dst) /= diagonal;
    table.values(src, src) = 1.0;
  }
  return table;
}

std::string table_csv(const RepeatabilityTable& table) {
  std::ostringstream out;
  out << "source";
  for (const auto& d : table.detectors) out << ',' << d;
  out << '\n' << std::setprecision(6) << std::fixed;
  for (std::size_t r = 0; r < table.detectors.size(); ++r) {
    out << table.detectors[r];
    for (std::size_t c = 0; c < table.detectors.size(); ++c) out << ',' << table.values(r, c);
    out << '\n';
  }
  return out.str();
}

PairResult evaluate_pair(const DescriptorPair& pair, const PipelineConfig& config) {
  if (config.k < 1) fail(ErrorKind::Validation, "keypoint budget k must be >= 1");
  if (!pair.a || !pair.b) fail(ErrorKind::Validation, "descriptor pair is incomplete");
  const auto score_a = compute_score(*pair.a, config.mode, config.window);
  const auto score_b = compute_score(*pair.b, config.mode, config.window);
  const auto kp_a = extract_topk(score_a, *pair.a, config.k);
  const auto kp_b = extract_topk(score_b, *pair.b, config.k);

  PairResult r;
  r.sequence = pair.sequence;
  r.kind = pair.kind;
  r.target = pair.target;
  r.keypoints_a = kp_a.size();
  r.keypoints_b = kp_b.size();
  r.degenerate = all_zero(score_a) && all_zero(score_b);
  r.excluded = kp_a.empty() || kp_b.empty();
  r.mma.assign(config.thresholds.size(), 0.0);
  if (!r.excluded) {
    const auto matches = mutual_nn(kp_a, kp_b);
    r.matches = matches.pairs.size();
    r.mma = mma(matches, kp_a, kp_b, pair.h, config.thresholds);
  }
  return r;
}

EvalReport summarize(std::vector<PairResult> results, const std::vector<double>& thresholds) {
  EvalReport report;
  report.thresholds = thresholds;
  report.pairs = std::move(results);
  std::vector<const PairResult*> all, viewpoint, illumination;
  for (const auto& r : report.pairs) {
    if (r.mma.size() != thresholds.size())
      fail(ErrorKind::Validation, "pair result has the wrong number of thresholds");
    all.push_back(&r);
    (r.kind == SequenceKind::Viewpoint ? viewpoint : illumination).push_back(&r);
  }
  report.overall = summarize_group(all, thresholds.size());
  report.viewpoint = summarize_group(viewpoint, thresholds.size());
  report.illumination = summarize_group(illumination, thresholds.size());
  return report;
}

EvalReport evaluate(const std::vector<DescriptorPair>& pairs, const PipelineConfig& config) {
  std::vector<PairResult> results;
  results.reserve(pairs.size());
  for (const auto& p : pairs) results.push_back(evaluate_pair(p, config));
  return summarize(std::move(results), config.thresholds);
}

std::string report_json(const EvalReport& report) {
  nlohmann::json j;
  j["thresholds"] = report.thresholds;
  j["overall"] = summary_json(report.overall);
  j["viewpoint"] = summary_json(report.viewpoint);
  j["illumination"] = summary_json(report.illumination);
  auto& pairs = j["pairs"] = nlohmann::json::array();
  for (const auto& r : report.pairs) {
    pairs.push_back({{"sequence", r.sequence},
                     {"kind", to_string(r.kind)},
                     {"target", r.target},
                     {"keypoints_a", r.keypoints_a},
                     {"keypoints_b", r.keypoints_b},
                     {"matches", r.matches},
                     {"mma", r.mma},
                     {"excluded", r.excluded},
                     {"degenerate", r.degenerate}});
  }
  return j.dump(2) + "\n";
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "threshold,mma_overall,mma_viewpoint,mma_illumination\n" << std::setprecision(10);
  for (std::size_t t = 0; t < report.thresholds.size(); ++t) {
    out << report.thresholds[t] << ',' << report.overall.mma[t] << ',' << report.viewpoint.mma[t]
        << ',' << report.illumination.mma[t] << '\n';
  }
  return out.str();
}

AblationResult ablation_run(const std::vector<DescriptorPair>& pairs, ScoreMode mode, std::size_t k,
                            const RsWindow& window) {
  PipelineConfig config;
  config.mode = mode;
  config.window = window;
  config.k = k;
  const auto report = evaluate(pairs, config);

  AblationResult result;
  result.mode = mode;
  result.pairs_used = report.overall.pairs - report.overall.excluded;
  result.pairs_excluded = report.overall.excluded;
  result.degenerate = !report.pairs.empty();
  for (const auto& r : report.pairs) result.degenerate = result.degenerate && r.degenerate;
  double sum = 0.0;
  for (double v : report.overall.mma) sum += v;
  result.mean_mma = report.overall.mma.empty() ? 0.0 : sum / static_cast<double>(report.overall.mma.size());
  return result;
}

std::vector<SweepPoint> sweep_rrs(const std::vector<DescriptorPair>& pairs, const std::vector<int>& radii,
                                  std::size_t k, int sample_step) {
  std::vector<SweepPoint> out;
  for (int r : radii) {
    RsWindow window;
    window.radius = r;
    window.sample_step = sample_step;
    out.push_back({r, ablation_run(pairs, ScoreMode::RS, k, window)});
  }
  return out;
}

std::vector<SequenceMaps> load_sequence_maps(const std::filesystem::path& root,
                                             const std::filesystem::path& desc_dir) {
  std::vector<SequenceMaps> out;
  for (const auto& dir : list_hpatches_sequences(root)) {
    SequenceMaps seq;
    if (desc_dir.empty()) {
      const auto loaded = load_hpatches_sequence(dir);
      seq.name = loaded.name;
      seq.kind = loaded.kind;
      seq.homographies = loaded.homographies;
      for (const auto& img : loaded.images)
        seq.maps.push_back(std::make_shared<const DescriptorMap>(describe_dense(to_gray(img))));
    } else {
      seq.name = dir.filename().string();
      seq.kind = seq.name.rfind("v_", 0) == 0 ? SequenceKind::Viewpoint : SequenceKind::Illumination;
      for (int k = 2; k <= 6; ++k) seq.homographies.push_back(load_homography(dir / ("H_1_" + std::to_string(k))));
      for (int k = 1; k <= 6; ++k)
        seq.maps.push_back(std::make_shared<const DescriptorMap>(
            load_descriptor_map(desc_dir / seq.name / (std::to_string(k) + ".npy"))));
    }
    out.push_back(std::move(seq));
  }
  if (out.empty()) fail(ErrorKind::NotFound, root.string() + ": no v_*/i_* sequences found");
  return out;
}

std::vector<DescriptorPair> make_pairs(const std::vector<SequenceMaps>& sequences) {
  std::vector<DescriptorPair> pairs;
  for (const auto& seq : sequences) {
    for (std::size_t k = 1; k < seq.maps.size(); ++k) {
      pairs.push_back({seq.maps[0], seq.maps[k], seq.homographies[k - 1], seq.name, seq.kind,
                       static_cast<int>(k + 1)});
    }
  }
  return pairs;
}

}  // namespace d2d
