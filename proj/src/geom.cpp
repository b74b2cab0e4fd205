#include "pvnext/geom.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "pvnext/counters.hpp"
#include "pvnext/errors.hpp"
#include "pvnext/rng.hpp"

namespace pvnext {

std::vector<std::size_t> farthest_point_sample(const PointSet& ps, std::size_t m,
                                               std::uint64_t seed) {
  const std::size_t n = ps.size();
  if (n == 0) throw ConfigError("fps: empty point set");
  if (m == 0 || m > n) {
    throw ConfigError("fps: m=" + std::to_string(m) + " out of range for n=" + std::to_string(n));
  }

  Rng rng(seed);
  std::vector<std::size_t> selected;
  selected.reserve(m);
  selected.push_back(rng.bounded(n));

  // min squared distance from each point to the selected set
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::vector<char> taken(n, 0);
  taken[selected[0]] = 1;

  for (std::size_t step = 1; step < m; ++step) {
    const Vec3& last = ps[selected.back()];
    std::size_t best_idx = n;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      min_dist[i] = std::min(min_dist[i], squared_distance(ps[i], last));
      if (!taken[i] && min_dist[i] > best) {
        best = min_dist[i];
        best_idx = i;
      }
    }
    counters().distance_evals.fetch_add(n, std::memory_order_relaxed);
    taken[best_idx] = 1;
    selected.push_back(best_idx);
  }
  return selected;
}

std::vector<NeighborGroup> ball_query(const PointSet& centers, const PointSet& targets,
                                      double radius, std::size_t k) {
  if (targets.empty()) throw ConfigError("ball_query: empty target set");
  if (radius <= 0.0) throw ConfigError("ball_query: radius must be positive");
  if (k == 0) throw ConfigError("ball_query: k must be >= 1");

  const double r2 = radius * radius;
  std::vector<NeighborGroup> groups(centers.size());
  for (std::size_t c = 0; c < centers.size(); ++c) {
    NeighborGroup& g = groups[c];
    g.center_index = c;
    g.neighbor_indices.reserve(k);

    std::size_t nearest = 0;
    double nearest_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const double d2 = squared_distance(centers[c], targets[t]);
      if (d2 < nearest_d2) {
        nearest_d2 = d2;
        nearest = t;
      }
      if (d2 <= r2 && g.neighbor_indices.size() < k) {
        g.neighbor_indices.push_back(t);
      }
    }
    counters().distance_evals.fetch_add(targets.size(), std::memory_order_relaxed);

    if (g.neighbor_indices.empty()) {
      g.neighbor_indices.assign(k, nearest);
      g.padded = true;
    } else if (g.neighbor_indices.size() < k) {
      const std::size_t first = g.neighbor_indices.front();
      g.padded = true;
      while (g.neighbor_indices.size() < k) g.neighbor_indices.push_back(first);
    }
  }
  counters().ball_queries.fetch_add(centers.size(), std::memory_order_relaxed);
  return groups;
}

std::vector<std::vector<std::size_t>> knn(const PointSet& centers, const PointSet& targets,
                                          std::size_t k) {
  if (k == 0 || k > targets.size()) {
    throw ConfigError("knn: k=" + std::to_string(k) + " out of range for " +
                      std::to_string(targets.size()) + " targets");
  }
  std::vector<std::vector<std::size_t>> out(centers.size());
  std::vector<std::pair<double, std::size_t>> dist(targets.size());
  for (std::size_t c = 0; c < centers.size(); ++c) {
    for (std::size_t t = 0; t < targets.size(); ++t) {
      dist[t] = {squared_distance(centers[c], targets[t]), t};
    }
    counters().distance_evals.fetch_add(targets.size(), std::memory_order_relaxed);
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    out[c].reserve(k);
    for (std::size_t i = 0; i < k; ++i) out[c].push_back(dist[i].second);
  }
  return out;
}

double chamfer_distance(const PointSet& a, const PointSet& b) {
  if (a.empty() || b.empty()) throw ConfigError("chamfer: empty point set");
  auto mean_nearest = [](const PointSet& from, const PointSet& to) {
    double sum = 0.0;
    for (const Vec3& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& q : to) best = std::min(best, squared_distance(p, q));
      sum += best;
    }
    counters().distance_evals.fetch_add(std::uint64_t(from.size()) * to.size(),
                                        std::memory_order_relaxed);
    return sum / static_cast<double>(from.size());
  };
  return mean_nearest(a, b) + mean_nearest(b, a);
}

std::vector<Vec3> gather_group_coords(const PointSet& targets, const NeighborGroup& group,
                                      const Vec3& center) {
  std::vector<Vec3> out;
  out.reserve(group.neighbor_indices.size());
  for (std::size_t idx : group.neighbor_indices) {
    if (idx >= targets.size()) {
      throw ConfigError("gather: index " + std::to_string(idx) + " out of range " +
                        std::to_string(targets.size()));
    }
    out.push_back(targets[idx] - center);
  }
  return out;
}

std::vector<double> gather_group_features(const std::vector<double>& features, std::size_t width,
                                          const NeighborGroup& group) {
  const std::size_t rows = width == 0 ? 0 : features.size() / width;
  std::vector<double> out;
  out.reserve(group.neighbor_indices.size() * width);
  for (std::size_t idx : group.neighbor_indices) {
    if (idx >= rows) {
      throw ConfigError("gather: index " + std::to_string(idx) + " out of range " +
                        std::to_string(rows));
    }
    out.insert(out.end(), features.begin() + idx * width, features.begin() + (idx + 1) * width);
  }
  return out;
}

}  // namespace pvnext
