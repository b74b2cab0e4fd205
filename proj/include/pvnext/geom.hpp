#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace pvnext {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 operator*(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }

inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

inline double norm(const Vec3& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }

// One frame of points in an arbitrary world frame, coordinates in meters.
using PointSet = std::vector<Vec3>;

// Fixed-size neighborhood around one center. When fewer than k targets fall
// inside the radius the first found index pads the remaining slots; an empty
// ball falls back to the single nearest target replicated k times. Both cases
// set padded.
struct NeighborGroup {
  std::size_t center_index = 0;
  std::vector<std::size_t> neighbor_indices;
  bool padded = false;
};

// Greedy farthest-point subset of m indices. The first index is drawn
// uniformly from the seeded RNG; every later pick maximizes the minimum
// distance to the already-selected set, ties resolved to the lowest index.
std::vector<std::size_t> farthest_point_sample(const PointSet& ps, std::size_t m,
                                               std::uint64_t seed);

// Radius search of every center into `targets`: up to k indices with distance
// <= radius in target-index order.
std::vector<NeighborGroup> ball_query(const PointSet& centers, const PointSet& targets,
                                      double radius, std::size_t k);

// k nearest target indices per center, ascending by distance, ties by index.
std::vector<std::vector<std::size_t>> knn(const PointSet& centers, const PointSet& targets,
                                          std::size_t k);

// Symmetric mean squared nearest-neighbor distance.
double chamfer_distance(const PointSet& a, const PointSet& b);

// Group coordinates relative to the center (center subtracted).
std::vector<Vec3> gather_group_coords(const PointSet& targets, const NeighborGroup& group,
                                      const Vec3& center);

// Group features, row-major [n x width], gathered without recentering.
std::vector<double> gather_group_features(const std::vector<double>& features, std::size_t width,
                                          const NeighborGroup& group);

}  // namespace pvnext
