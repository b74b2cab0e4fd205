#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "pvnext/errors.hpp"
#include "pvnext/geom.hpp"
#include "test_util.hpp"

using namespace pvnext;
using namespace pvnext::testutil;

namespace {

// first seed whose opening draw picks `want` out of n
std::uint64_t seed_for_start(std::size_t want, std::size_t n) {
  for (std::uint64_t seed = 0; seed < 100000; ++seed) {
    if (Rng(seed).bounded(n) == want) return seed;
  }
  FAIL("no seed found");
  return 0;
}

double min_dist_to_selected(const PointSet& ps, std::size_t candidate,
                            const std::vector<std::size_t>& selected, std::size_t count) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < count; ++j) {
    best = std::min(best, squared_distance(ps[candidate], ps[selected[j]]));
  }
  return best;
}

}  // namespace

TEST_CASE("fps returns a permutation when m equals n") {
  Rng rng(2);
  const PointSet ps = random_points(33, rng);
  const auto idx = farthest_point_sample(ps, ps.size(), 7);
  std::set<std::size_t> unique(idx.begin(), idx.end());
  CHECK(unique.size() == ps.size());
}

TEST_CASE("fps m=1 returns the seeded start index") {
  Rng rng(3);
  const PointSet ps = random_points(17, rng);
  const std::uint64_t seed = seed_for_start(11, ps.size());
  CHECK(farthest_point_sample(ps, 1, seed) == std::vector<std::size_t>{11});
}

TEST_CASE("fps picks the outlier first from a forced start") {
  const PointSet ps = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {10, 10, 10}};
  const std::uint64_t seed = seed_for_start(0, ps.size());
  const auto idx = farthest_point_sample(ps, 2, seed);
  CHECK(idx == std::vector<std::size_t>{0, 3});
}

TEST_CASE("fps rejects m out of range") {
  const PointSet ps = {{0, 0, 0}, {1, 1, 1}};
  CHECK_THROWS_AS(farthest_point_sample(ps, 3, 0), ConfigError);
  CHECK_THROWS_AS(farthest_point_sample(ps, 0, 0), ConfigError);
}

TEST_CASE("fps greedy property verified by exhaustive scan") {
  Rng rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 8 + rng.bounded(56);
    const std::size_t m = 2 + rng.bounded(n - 2);
    const PointSet ps = random_points(n, rng);
    const auto idx = farthest_point_sample(ps, m, trial);
    for (std::size_t j = 1; j < m; ++j) {
      const double chosen = min_dist_to_selected(ps, idx[j], idx, j);
      std::vector<char> taken(n, 0);
      for (std::size_t u = 0; u < j; ++u) taken[idx[u]] = 1;
      for (std::size_t cand = 0; cand < n; ++cand) {
        if (taken[cand]) continue;
        const double d = min_dist_to_selected(ps, cand, idx, j);
        CHECK(chosen >= d - 1e-15);
        if (d == chosen) CHECK(idx[j] <= cand);  // ties go to the lowest index
      }
    }
  }
}

TEST_CASE("ball query pads with the first found index") {
  const PointSet targets = {{0.1, 0, 0}, {1, 0, 0}};
  const auto groups = ball_query({{0, 0, 0}}, targets, 0.5, 2);
  CHECK(groups.size() == 1);
  CHECK(groups[0].neighbor_indices == std::vector<std::size_t>{0, 0});
  CHECK(groups[0].padded);
}

TEST_CASE("ball query with coincident target fills without padding") {
  const PointSet targets = {{0.5, 0.5, 0.5}};
  const auto groups = ball_query({{0.5, 0.5, 0.5}}, targets, 0.25, 1);
  CHECK(groups[0].neighbor_indices == std::vector<std::size_t>{0});
  CHECK_FALSE(groups[0].padded);
}

TEST_CASE("ball query falls back to the nearest target when the ball is empty") {
  const PointSet targets = {{5, 5, 5}};
  const auto groups = ball_query({{0, 0, 0}}, targets, 0.1, 3);
  CHECK(groups[0].neighbor_indices == std::vector<std::size_t>{0, 0, 0});
  CHECK(groups[0].padded);
}

TEST_CASE("ball query argument validation") {
  const PointSet any = {{0, 0, 0}};
  CHECK_THROWS_AS(ball_query(any, {}, 0.5, 1), ConfigError);
  CHECK_THROWS_AS(ball_query(any, any, -1.0, 1), ConfigError);
  CHECK_THROWS_AS(ball_query(any, any, 0.5, 0), ConfigError);
}

TEST_CASE("ball query soundness and completeness vs exhaustive filter") {
  Rng rng(29);
  for (int trial = 0; trial < 30; ++trial) {
    const PointSet targets = random_points(40 + rng.bounded(40), rng);
    const PointSet centers = random_points(12, rng);
    const double radius = 0.05 + 0.3 * rng.uniform01();
    const std::size_t k = 1 + rng.bounded(6);
    const auto groups = ball_query(centers, targets, radius, k);
    for (std::size_t c = 0; c < centers.size(); ++c) {
      // oracle: index-ordered exhaustive filter
      std::vector<std::size_t> in_ball;
      for (std::size_t t = 0; t < targets.size(); ++t) {
        if (squared_distance(centers[c], targets[t]) <= radius * radius) in_ball.push_back(t);
      }
      const auto& got = groups[c].neighbor_indices;
      CHECK(got.size() == k);
      if (in_ball.size() >= k) {
        CHECK_FALSE(groups[c].padded);
        CHECK(std::equal(got.begin(), got.end(), in_ball.begin()));
      } else {
        CHECK(groups[c].padded);
        if (!in_ball.empty()) {
          CHECK(std::equal(in_ball.begin(), in_ball.end(), got.begin()));
          for (std::size_t j = in_ball.size(); j < k; ++j) CHECK(got[j] == in_ball.front());
        } else {
          std::size_t nearest = 0;
          for (std::size_t t = 1; t < targets.size(); ++t) {
            if (squared_distance(centers[c], targets[t]) <
                squared_distance(centers[c], targets[nearest])) {
              nearest = t;
            }
          }
          for (std::size_t idx : got) CHECK(idx == nearest);
        }
      }
    }
  }
}

TEST_CASE("knn trivial orderings") {
  const PointSet line = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  const auto got = knn({{0, 0, 0}}, line, 2);
  CHECK(got[0] == std::vector<std::size_t>{0, 1});

  const auto self = knn({{2, 0, 0}}, line, 1);
  CHECK(self[0] == std::vector<std::size_t>{2});

  CHECK_THROWS_AS(knn({{0, 0, 0}}, line, 5), ConfigError);
}

TEST_CASE("knn matches full pairwise sort oracle") {
  Rng rng(31);
  const PointSet targets = random_points(32, rng);
  const PointSet centers = random_points(10, rng);
  const std::size_t k = 7;
  const auto got = knn(centers, targets, k);
  for (std::size_t c = 0; c < centers.size(); ++c) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t t = 0; t < targets.size(); ++t) {
      all.emplace_back(squared_distance(centers[c], targets[t]), t);
    }
    std::sort(all.begin(), all.end());
    for (std::size_t j = 0; j < k; ++j) CHECK(got[c][j] == all[j].second);
  }
}

TEST_CASE("chamfer trivial values") {
  const PointSet a = {{0, 0, 0}, {1, 1, 1}};
  CHECK(chamfer_distance(a, a) == 0.0);
  CHECK(chamfer_distance({{0, 0, 0}}, {{1, 0, 0}}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(chamfer_distance({}, a), ConfigError);
}

TEST_CASE("chamfer equals brute-force double loop and is symmetric") {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const PointSet a = random_points(20 + rng.bounded(20), rng);
    const PointSet b = random_points(20 + rng.bounded(20), rng);
    double sum_a = 0.0;
    for (const Vec3& p : a) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& q : b) best = std::min(best, squared_distance(p, q));
      sum_a += best;
    }
    double sum_b = 0.0;
    for (const Vec3& q : b) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& p : a) best = std::min(best, squared_distance(q, p));
      sum_b += best;
    }
    const double expect = sum_a / a.size() + sum_b / b.size();
    CHECK(chamfer_distance(a, b) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(chamfer_distance(a, b) == chamfer_distance(b, a));
  }
}

TEST_CASE("gather group recenters coordinates but not features") {
  const PointSet targets = {{1, 0, 0}, {1, 1, 0}};
  NeighborGroup g;
  g.neighbor_indices = {1, 0};
  const auto rel = gather_group_coords(targets, g, {1, 0, 0});
  CHECK(rel[0] == Vec3{0, 1, 0});
  CHECK(rel[1] == Vec3{0, 0, 0});

  const std::vector<double> feats = {10, 11, 20, 21};
  const auto gf = gather_group_features(feats, 2, g);
  CHECK(gf == std::vector<double>{20, 21, 10, 11});

  NeighborGroup bad;
  bad.neighbor_indices = {5};
  CHECK_THROWS_AS(gather_group_coords(targets, bad, {0, 0, 0}), ConfigError);
}

TEST_CASE("gather group matches per-index oracle on random groups") {
  Rng rng(53);
  const PointSet targets = random_points(25, rng);
  for (int trial = 0; trial < 10; ++trial) {
    NeighborGroup g;
    const std::size_t k = 1 + rng.bounded(8);
    for (std::size_t j = 0; j < k; ++j) g.neighbor_indices.push_back(rng.bounded(targets.size()));
    const Vec3 center = {rng.uniform01(), rng.uniform01(), rng.uniform01()};
    const auto rel = gather_group_coords(targets, g, center);
    for (std::size_t j = 0; j < k; ++j) {
      for (int d = 0; d < 3; ++d) {
        CHECK(rel[j][d] == targets[g.neighbor_indices[j]][d] - center[d]);
      }
    }
  }
}

TEST_CASE("translation equivariance of index selections and chamfer") {
  Rng rng(61);
  const Vec3 shift = {12.5, -3.25, 8.0};
  const PointSet a = random_points(40, rng);
  const PointSet b = random_points(30, rng);
  PointSet a_shifted = a, b_shifted = b;
  for (Vec3& p : a_shifted) p = p + shift;
  for (Vec3& p : b_shifted) p = p + shift;

  CHECK(farthest_point_sample(a, 9, 5) == farthest_point_sample(a_shifted, 9, 5));

  const auto g1 = ball_query(a, b, 0.3, 4);
  const auto g2 = ball_query(a_shifted, b_shifted, 0.3, 4);
  for (std::size_t i = 0; i < g1.size(); ++i) {
    CHECK(g1[i].neighbor_indices == g2[i].neighbor_indices);
    CHECK(g1[i].padded == g2[i].padded);
  }

  CHECK(knn(a, b, 5) == knn(a_shifted, b_shifted, 5));
  CHECK(std::fabs(chamfer_distance(a, b) - chamfer_distance(a_shifted, b_shifted)) <= 1e-9);
}
