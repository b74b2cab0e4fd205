#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pvnext/geom.hpp"

namespace pvnext {

// T ordered frames, each with the same number of points.
struct PointCloudVideo {
  std::vector<PointSet> frames;
  double frame_interval = 1.0;  // seconds, metadata only
  std::optional<std::uint32_t> label;

  std::size_t num_frames() const { return frames.size(); }
  std::size_t points_per_frame() const { return frames.empty() ? 0 : frames.front().size(); }
};

void validate_video(const PointCloudVideo& video);

// Per-frame anchor samples; anchors are not tracked across frames.
struct AnchorTrack {
  std::vector<std::vector<std::size_t>> indices;  // [T][M] into that frame's points
  std::vector<std::vector<Vec3>> coords;          // [T][M]

  std::size_t num_frames() const { return indices.size(); }
  std::size_t num_anchors() const { return indices.empty() ? 0 : indices.front().size(); }
};

// Centroid of each anchor's cross-frame neighborhood.
struct SyntheticTarget {
  std::vector<std::vector<Vec3>> coords;  // [T][M]
};

// Per-anchor per-frame displacement. sign -1 reverses every trajectory.
struct MotionField {
  std::vector<std::vector<Vec3>> vectors;  // [T][M]
  int sign = +1;
};

// FPS with the shared seed, independently per frame.
AnchorTrack select_anchors(const PointCloudVideo& video, std::size_t m, std::uint64_t seed);

// Groups for frame t query frame t+1; the last frame queries itself.
std::vector<std::vector<NeighborGroup>> cross_frame_query(const PointCloudVideo& video,
                                                          const AnchorTrack& anchors,
                                                          std::size_t k, double radius);

// Arithmetic mean of the K absolute neighbor coordinates (pads included).
SyntheticTarget aggregate_target(const std::vector<std::vector<NeighborGroup>>& groups,
                                 const PointCloudVideo& video);

// vectors = sign * (target - anchor), index-wise.
MotionField extract_motion(const SyntheticTarget& targets, const AnchorTrack& anchors, int sign);

// Full pipeline: anchors, cross-frame query, aggregation, motion extraction.
std::pair<AnchorTrack, MotionField> imitate(const PointCloudVideo& video, std::size_t m,
                                            std::size_t k, double radius, std::uint64_t seed,
                                            int sign = +1);

}  // namespace pvnext
