#include "pvnext/motion.hpp"

#include <cmath>
#include <string>

#include "pvnext/errors.hpp"

namespace pvnext {

void validate_video(const PointCloudVideo& video) {
  if (video.frames.empty()) throw ConfigError("video: no frames");
  const std::size_t n = video.frames.front().size();
  if (n == 0) throw ConfigError("video: empty frame");
  for (std::size_t t = 0; t < video.frames.size(); ++t) {
    if (video.frames[t].size() != n) {
      throw ConfigError("video: frame " + std::to_string(t) + " has " +
                        std::to_string(video.frames[t].size()) + " points, expected " +
                        std::to_string(n));
    }
    for (const Vec3& p : video.frames[t]) {
      if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2])) {
        throw NumericError("video: non-finite coordinate in frame " + std::to_string(t));
      }
    }
  }
}

AnchorTrack select_anchors(const PointCloudVideo& video, std::size_t m, std::uint64_t seed) {
  AnchorTrack track;
  track.indices.reserve(video.num_frames());
  track.coords.reserve(video.num_frames());
  for (const PointSet& frame : video.frames) {
    std::vector<std::size_t> idx = farthest_point_sample(frame, m, seed);
    std::vector<Vec3> coords;
    coords.reserve(m);
    for (std::size_t i : idx) coords.push_back(frame[i]);
    track.indices.push_back(std::move(idx));
    track.coords.push_back(std::move(coords));
  }
  return track;
}

std::vector<std::vector<NeighborGroup>> cross_frame_query(const PointCloudVideo& video,
                                                          const AnchorTrack& anchors,
                                                          std::size_t k, double radius) {
  const std::size_t t_count = video.num_frames();
  std::vector<std::vector<NeighborGroup>> groups(t_count);
  for (std::size_t t = 0; t < t_count; ++t) {
    // last frame has no successor: clamp to querying itself
    const std::size_t target_frame = (t + 1 < t_count) ? t + 1 : t;
    groups[t] = ball_query(anchors.coords[t], video.frames[target_frame], radius, k);
  }
  return groups;
}

SyntheticTarget aggregate_target(const std::vector<std::vector<NeighborGroup>>& groups,
                                 const PointCloudVideo& video) {
  const std::size_t t_count = groups.size();
  SyntheticTarget target;
  target.coords.resize(t_count);
  for (std::size_t t = 0; t < t_count; ++t) {
    const std::size_t target_frame = (t + 1 < t_count) ? t + 1 : t;
    const PointSet& frame = video.frames[target_frame];
    target.coords[t].reserve(groups[t].size());
    for (const NeighborGroup& g : groups[t]) {
      Vec3 sum = {0.0, 0.0, 0.0};
      for (std::size_t idx : g.neighbor_indices) sum = sum + frame[idx];
      target.coords[t].push_back(sum * (1.0 / static_cast<double>(g.neighbor_indices.size())));
    }
  }
  return target;
}

MotionField extract_motion(const SyntheticTarget& targets, const AnchorTrack& anchors, int sign) {
  if (sign != 1 && sign != -1) throw ConfigError("motion sign must be +1 or -1");
  if (targets.coords.size() != anchors.coords.size()) {
    throw DimensionError("motion: target/anchor frame count mismatch");
  }
  MotionField field;
  field.sign = sign;
  field.vectors.resize(targets.coords.size());
  const double s = static_cast<double>(sign);
  for (std::size_t t = 0; t < targets.coords.size(); ++t) {
    if (targets.coords[t].size() != anchors.coords[t].size()) {
      throw DimensionError("motion: target/anchor anchor count mismatch at frame " +
                           std::to_string(t));
    }
    field.vectors[t].reserve(targets.coords[t].size());
    for (std::size_t i = 0; i < targets.coords[t].size(); ++i) {
      field.vectors[t].push_back((targets.coords[t][i] - anchors.coords[t][i]) * s);
    }
  }
  return field;
}

std::pair<AnchorTrack, MotionField> imitate(const PointCloudVideo& video, std::size_t m,
                                            std::size_t k, double radius, std::uint64_t seed,
                                            int sign) {
  validate_video(video);
  if (video.num_frames() < 2) throw ConfigError("imitate: motion extraction needs T >= 2");
  AnchorTrack anchors = select_anchors(video, m, seed);
  auto groups = cross_frame_query(video, anchors, k, radius);
  SyntheticTarget target = aggregate_target(groups, video);
  MotionField field = extract_motion(target, anchors, sign);
  return {std::move(anchors), std::move(field)};
}

}  // namespace pvnext
