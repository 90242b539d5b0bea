#include "d2d/match.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>

#include "d2d/error.hpp"
#include "d2d/parallel.hpp"

namespace d2d {
namespace {

struct Best {
  double distance = std::numeric_limits<double>::infinity();
  std::size_t index = std::numeric_limits<std::size_t>::max();

  void offer(double d, std::size_t i) {
    if (d < distance || (d == distance && i < index)) {
      distance = d;
      index = i;
    }
  }
};

double l2(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double d = static_cast<double>(a[c]) - b[c];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

MatchSet mutual_nn(const KeypointSet& a, const KeypointSet& b) {
  if (!a.descriptors || !b.descriptors)
    fail(ErrorKind::Precondition, "mutual_nn needs descriptors on both keypoint sets");
  const auto& da = *a.descriptors;
  const auto& db = *b.descriptors;
  if (da.rows() != a.size() || db.rows() != b.size())
    fail(ErrorKind::Validation, "descriptor rows do not match keypoint counts");
  if (da.cols() != db.cols() && da.rows() > 0 && db.rows() > 0)
    fail(ErrorKind::Validation, "descriptor dimensions differ (" + std::to_string(da.cols()) +
                                    " vs " + std::to_string(db.cols()) + ")");

  MatchSet out;
  out.n_a = a.size();
  out.n_b = b.size();
  if (out.n_a == 0 || out.n_b == 0) return out;

  std::vector<Best> row_best(out.n_a);
  std::vector<Best> col_best(out.n_b);
  std::mutex merge_mutex;

  parallel_for(out.n_a, [&](std::size_t i0, std::size_t i1) {
    std::vector<Best> local_cols(out.n_b);
    for (std::size_t i = i0; i < i1; ++i) {
      const auto ai = da.row(i);
      for (std::size_t j = 0; j < out.n_b; ++j) {
        const double d = l2(ai, db.row(j));
        row_best[i].offer(d, j);
        local_cols[j].offer(d, i);
      }
    }
    // (distance, index) minimum is independent of merge order.
    std::lock_guard lock(merge_mutex);
    for (std::size_t j = 0; j < out.n_b; ++j) col_best[j].offer(local_cols[j].distance, local_cols[j].index);
  });

  for (std::size_t i = 0; i < out.n_a; ++i) {
    const std::size_t j = row_best[i].index;
    if (col_best[j].index == i) out.pairs.push_back({i, j, row_best[i].distance});
  }
  return out;
}

void write_matches(const std::filesystem::path& path, const MatchSet& matches) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, path.string() + ": cannot open for writing");
  out << "idx_a idx_b distance\n" << std::setprecision(17);
  for (const auto& m : matches.pairs) out << m.index_a << ' ' << m.index_b << ' ' << m.distance << '\n';
  if (!out) fail(ErrorKind::Io, path.string() + ": write failed");
}

MatchSet read_matches(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::NotFound, path.string() + ": no such file");
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("idx_a idx_b distance", 0) != 0)
    fail(ErrorKind::Format, path.string() + ": missing 'idx_a idx_b distance' header");
  MatchSet set;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    Match m;
    if (!(row >> m.index_a >> m.index_b >> m.distance))
      fail(ErrorKind::Format, path.string() + ": malformed row '" + line + "'");
    set.pairs.push_back(m);
  }
  return set;
}

}  // namespace d2d
