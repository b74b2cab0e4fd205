#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pvnext/motion.hpp"

namespace pvnext {

// Synthetic motion classes. Identifiers are stable; labels are positions in
// SyntheticSpec::classes.
enum class MotionClass {
  kStatic,
  kTranslateX,
  kTranslateY,
  kRotateZ,
  kOscillateScale,
  kZigzag,
};

MotionClass motion_class_from_name(const std::string& name);
std::string motion_class_name(MotionClass c);

struct SyntheticSpec {
  std::vector<MotionClass> classes;
  std::size_t n_points = 128;
  std::size_t t_frames = 16;
  std::size_t videos_per_class = 20;
  double noise_sigma = 0.01;  // meters
  std::uint64_t seed = 0;
};

SyntheticSpec default_synthetic_spec();

struct PcvDataset {
  std::uint32_t num_classes = 0;
  std::vector<PointCloudVideo> videos;
};

// Deterministic labeled videos: a unit-cube base shape per video, transformed
// per frame by its class motion, plus isotropic Gaussian jitter.
PcvDataset generate_synthetic(const SyntheticSpec& spec);

// PCV binary container:
//   "PCV1" | u16 version | u32 T | u32 N | u32 num_videos
//   per video: u32 label, then T*N*3 little-endian f32
// All multi-byte fields little-endian. Write/read round-trips float bits.
void write_pcv(const std::string& path, const PcvDataset& dataset);
PcvDataset read_pcv(const std::string& path);

constexpr std::uint16_t kPcvVersion = 1;
constexpr std::size_t kPcvHeaderBytes = 18;

// Removes the floor(drop_ratio*N) points nearest a seeded random center in
// each frame, then resamples survivors with replacement back up to N.
PointCloudVideo drop_local(const PointCloudVideo& video, double drop_ratio, std::uint64_t seed);

// Frames at offset, offset+step, ... (length of them).
PointCloudVideo temporal_subsample(const PointCloudVideo& video, std::size_t step,
                                   std::size_t length, std::size_t offset);

}  // namespace pvnext
