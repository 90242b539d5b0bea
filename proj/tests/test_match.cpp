#include <doctest.h>

#include <fstream>
#include <random>

#include "d2d/match.hpp"
#include "d2d/parallel.hpp"
#include "error_kind.hpp"
#include "keypoints.hpp"
#include "oracles.hpp"
#include "tmpdir.hpp"

using namespace d2d;
using testing::error_kind;

namespace {

void check_against_oracle(const KeypointSet& a, const KeypointSet& b) {
  const auto got = mutual_nn(a, b);
  const auto want = oracle::mutual_nn(*a.descriptors, *b.descriptors);
  REQUIRE(got.pairs.size() == want.size());
  for (std::size_t k = 0; k < want.size(); ++k) {
    CHECK(got.pairs[k].index_a == want[k].i);
    CHECK(got.pairs[k].index_b == want[k].j);
    CHECK(got.pairs[k].distance == want[k].d);
  }
}

}  // namespace

TEST_SUITE("match") {
  TEST_CASE("mutual nearest neighbours match exhaustive search") {
    std::mt19937 rng(41);
    for (int t = 0; t < 30; ++t) {
      const auto a = testing::random_described(1 + rng() % 40, 1 + rng() % 16, rng);
      const auto b = testing::random_described(1 + rng() % 40, a.descriptors->cols(), rng);
      check_against_oracle(a, b);
    }
  }

  TEST_CASE("ties resolve to the lowest index") {
    std::mt19937 rng(42);
    auto a = testing::random_described(6, 4, rng);
    auto b = testing::random_described(6, 4, rng);
    // Duplicate rows on both sides.
    for (std::size_t c = 0; c < 4; ++c) {
      (*a.descriptors)(3, c) = (*a.descriptors)(1, c);
      (*b.descriptors)(5, c) = (*b.descriptors)(1, c);
      (*b.descriptors)(2, c) = (*a.descriptors)(1, c);
      (*b.descriptors)(4, c) = (*a.descriptors)(1, c);
    }
    check_against_oracle(a, b);
    const auto m = mutual_nn(a, b);
    bool found = false;
    for (const auto& p : m.pairs)
      if (p.index_b == 2) {
        CHECK(p.index_a == 1);
        found = true;
      }
    CHECK(found);
  }

  TEST_CASE("matches are one-to-one and ordered by index_a") {
    std::mt19937 rng(43);
    const auto a = testing::random_described(50, 8, rng);
    const auto b = testing::random_described(60, 8, rng);
    const auto m = mutual_nn(a, b);
    CHECK(m.n_a == 50);
    CHECK(m.n_b == 60);
    std::vector<bool> used(60, false);
    for (std::size_t k = 0; k < m.pairs.size(); ++k) {
      CHECK_FALSE(used[m.pairs[k].index_b]);
      used[m.pairs[k].index_b] = true;
      if (k) CHECK(m.pairs[k - 1].index_a < m.pairs[k].index_a);
    }
  }

  TEST_CASE("thread count does not change matches") {
    std::mt19937 rng(44);
    const auto a = testing::random_described(200, 16, rng);
    const auto b = testing::random_described(180, 16, rng);
    set_max_threads(1);
    const auto one = mutual_nn(a, b);
    set_max_threads(4);
    const auto four = mutual_nn(a, b);
    set_max_threads(0);
    REQUIRE(one.pairs.size() == four.pairs.size());
    for (std::size_t k = 0; k < one.pairs.size(); ++k) {
      CHECK(one.pairs[k].index_a == four.pairs[k].index_a);
      CHECK(one.pairs[k].index_b == four.pairs[k].index_b);
    }
  }

  TEST_CASE("empty and invalid inputs") {
    std::mt19937 rng(45);
    const auto a = testing::random_described(5, 4, rng);
    auto none = testing::random_described(0, 4, rng);
    CHECK(mutual_nn(a, none).pairs.empty());
    CHECK(mutual_nn(none, a).pairs.empty());

    const auto wide = testing::random_described(5, 6, rng);
    CHECK(error_kind([&] { mutual_nn(a, wide); }) == ErrorKind::Validation);
    auto bare = a;
    bare.descriptors.reset();
    CHECK(error_kind([&] { mutual_nn(a, bare); }) == ErrorKind::Precondition);
  }

  TEST_CASE("match files round trip") {
    testing::TempDir dir;
    std::mt19937 rng(46);
    const auto m = mutual_nn(testing::random_described(30, 8, rng), testing::random_described(30, 8, rng));
    write_matches(dir / "m.txt", m);
    const auto back = read_matches(dir / "m.txt");
    REQUIRE(back.pairs.size() == m.pairs.size());
    for (std::size_t k = 0; k < m.pairs.size(); ++k) {
      CHECK(back.pairs[k].index_a == m.pairs[k].index_a);
      CHECK(back.pairs[k].distance == m.pairs[k].distance);
    }
    std::ofstream(dir / "bad.txt") << "idx_a idx_b distance\n1 x 0.5\n";
    CHECK(error_kind([&] { read_matches(dir / "bad.txt"); }) == ErrorKind::Format);
    CHECK(error_kind([&] { read_matches(dir / "none.txt"); }) == ErrorKind::NotFound);
  }
}
