#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "d2d/detect.hpp"
#include "d2d/homography.hpp"
#include "d2d/match.hpp"
#include "d2d/saliency.hpp"
#include "d2d/tensor_io.hpp"

namespace d2d {

/// 1, 2, ..., 10 px.
std::vector<double> default_thresholds();

/// Fraction of matches with reprojection error ||H p_a - p_b|| <= t, for
/// each t. Empty match sets score 0 everywhere.
std::vector<double> mma(const MatchSet& matches, const KeypointSet& a,
                        const KeypointSet& b, const Homography& h,
                        const std::vector<double>& thresholds);

/// Fraction of a's keypoints that project inside b's image and land within
/// eps of a distinct keypoint of b. Candidate pairs are assigned greedily by
/// ascending distance. Points whose projection is degenerate are skipped.
double repeatability(const KeypointSet& a, const KeypointSet& b,
                     const Homography& h, double eps);

/// Keypoints of one detector on the (source, destination) images of each
/// evaluation pair.
struct DetectorOutput {
  std::string name;
  std::vector<std::pair<KeypointSet, KeypointSet>> pairs;
};

struct RepeatabilityTable {
  std::vector<std::string> detectors;
  Grid<double> values;  // row: source detector, column: destination detector
};

/// Raw repeatability of source keypoints from detector i against
/// destination keypoints from detector j, averaged over pairs; each row is
/// then divided by its diagonal entry.
RepeatabilityTable repeatability_table(
    const std::vector<DetectorOutput>& outputs,
    const std::vector<Homography>& homographies, double eps);

std::string table_csv(const RepeatabilityTable& table);

/// Two descriptor maps of one scene with the ground truth a -> b.
struct DescriptorPair {
  std::shared_ptr<const DescriptorMap> a;
  std::shared_ptr<const DescriptorMap> b;
  Homography h;
  std::string sequence;
  SequenceKind kind = SequenceKind::Viewpoint;
  int target = 2;  // image index of b within its sequence
};

struct PipelineConfig {
  ScoreMode mode = ScoreMode::Both;
  RsWindow window;
  std::size_t k = 0;
  std::vector<double> thresholds = default_thresholds();
};

struct PairResult {
  std::string sequence;
  SequenceKind kind = SequenceKind::Viewpoint;
  int target = 2;
  std::size_t keypoints_a = 0;
  std::size_t keypoints_b = 0;
  std::size_t matches = 0;
  std::vector<double> mma;
  bool excluded = false;    // no keypoints in one of the images
  bool degenerate = false;  // every score in both maps is zero
};

/// score -> top-k -> mutual NN -> MMA for one pair.
PairResult evaluate_pair(const DescriptorPair& pair, const PipelineConfig& config);

struct EvalSummary {
  std::vector<double> mma;
  double mean_keypoints = 0.0;  // per image
  double mean_matches = 0.0;    // per pair
  double match_ratio = 0.0;
  std::size_t pairs = 0;
  std::size_t excluded = 0;
};

struct EvalReport {
  std::vector<double> thresholds;
  EvalSummary overall;
  EvalSummary viewpoint;
  EvalSummary illumination;
  std::vector<PairResult> pairs;
};

/// Uniform average over pairs, in the given order, per sequence kind and
/// overall. Excluded pairs count toward keypoint/match means only.
EvalReport summarize(std::vector<PairResult> results,
                     const std::vector<double>& thresholds);

EvalReport evaluate(const std::vector<DescriptorPair>& pairs,
                    const PipelineConfig& config);

std::string report_json(const EvalReport& report);
/// `threshold,mma_overall,mma_viewpoint,mma_illumination`
std::string report_csv(const EvalReport& report);

struct AblationResult {
  ScoreMode mode = ScoreMode::Both;
  double mean_mma = 0.0;  // over thresholds and non-excluded pairs
  std::size_t pairs_used = 0;
  std::size_t pairs_excluded = 0;
  bool degenerate = false;  // every pair had an all-zero score map
};

AblationResult ablation_run(const std::vector<DescriptorPair>& pairs,
                            ScoreMode mode, std::size_t k,
                            const RsWindow& window = {});

struct SweepPoint {
  int radius = 0;
  AblationResult result;
};

/// RS-only ablation for each window radius.
std::vector<SweepPoint> sweep_rrs(const std::vector<DescriptorPair>& pairs,
                                  const std::vector<int>& radii, std::size_t k,
                                  int sample_step = 2);

/// Descriptor maps for images 1..6 of one sequence.
struct SequenceMaps {
  std::string name;
  SequenceKind kind = SequenceKind::Viewpoint;
  std::vector<std::shared_ptr<const DescriptorMap>> maps;
  std::vector<Homography> homographies;  // H_1_2 .. H_1_6
};

/// Every v_*/i_* sequence under root. Maps come from
/// `<desc_dir>/<sequence>/<k>.npy` (+ `.json`), or are computed with the
/// built-in gradient-histogram descriptor when desc_dir is empty.
std::vector<SequenceMaps> load_sequence_maps(const std::filesystem::path& root,
                                             const std::filesystem::path& desc_dir);

/// (1, k) pairs for k = 2..6, in sequence order.
std::vector<DescriptorPair> make_pairs(const std::vector<SequenceMaps>& sequences);

}  // namespace d2d
