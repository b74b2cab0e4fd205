#include "pvnext/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "pvnext/errors.hpp"
#include "pvnext/rng.hpp"

namespace pvnext {
namespace {

constexpr double kTranslateStep = 0.05;          // meters per frame
constexpr double kRotateStepDeg = 6.0;           // degrees per frame about the centroid
constexpr double kScaleAmplitude = 0.1;

// Base shapes are separated Gaussian clusters rather than cube-filling noise:
// depth-sensor clouds are locally structured, and neighborhoods need that
// structure for cross-frame correspondence to be observable at the stage radii.
constexpr std::size_t kBlobCount = 4;
constexpr double kBlobSigma = 0.02;
constexpr double kBlobOffsetClamp = 0.1;
constexpr double kBlobMinSeparation = 0.45;

Vec3 centroid(const PointSet& ps) {
  Vec3 c = {0.0, 0.0, 0.0};
  for (const Vec3& p : ps) c = c + p;
  return c * (1.0 / static_cast<double>(ps.size()));
}

PointSet sample_base_shape(std::size_t n_points, Rng& rng) {
  std::vector<Vec3> centers;
  while (centers.size() < kBlobCount) {
    const Vec3 c = {rng.uniform(0.15, 0.85), rng.uniform(0.15, 0.85), rng.uniform(0.15, 0.85)};
    bool ok = true;
    for (const Vec3& other : centers) {
      if (squared_distance(c, other) < kBlobMinSeparation * kBlobMinSeparation) {
        ok = false;
        break;
      }
    }
    if (ok) centers.push_back(c);
  }
  PointSet base(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const Vec3& c = centers[i % kBlobCount];
    for (int d = 0; d < 3; ++d) {
      const double offset =
          std::clamp(kBlobSigma * rng.normal(), -kBlobOffsetClamp, kBlobOffsetClamp);
      base[i][d] = c[d] + offset;
    }
  }
  return base;
}

PointSet transform_frame(const PointSet& base, const Vec3& base_centroid, MotionClass cls,
                         std::size_t t, std::size_t t_frames) {
  PointSet out = base;
  switch (cls) {
    case MotionClass::kStatic:
      break;
    case MotionClass::kTranslateX: {
      const double d = kTranslateStep * static_cast<double>(t);
      for (Vec3& p : out) p[0] += d;
      break;
    }
    case MotionClass::kTranslateY: {
      const double d = kTranslateStep * static_cast<double>(t);
      for (Vec3& p : out) p[1] += d;
      break;
    }
    case MotionClass::kRotateZ: {
      const double angle = kRotateStepDeg * M_PI / 180.0 * static_cast<double>(t);
      const double c = std::cos(angle), s = std::sin(angle);
      for (Vec3& p : out) {
        const double x = p[0] - base_centroid[0];
        const double y = p[1] - base_centroid[1];
        p[0] = base_centroid[0] + c * x - s * y;
        p[1] = base_centroid[1] + s * x + c * y;
      }
      break;
    }
    case MotionClass::kOscillateScale: {
      const double scale =
          1.0 + kScaleAmplitude * std::sin(2.0 * M_PI * static_cast<double>(t) /
                                           static_cast<double>(t_frames));
      for (Vec3& p : out) p = base_centroid + (p - base_centroid) * scale;
      break;
    }
    case MotionClass::kZigzag: {
      // +-x steps, direction flipping every ceil(T/4) frames
      const std::size_t block = (t_frames + 3) / 4;
      double d = 0.0;
      for (std::size_t u = 0; u < t; ++u) {
        const double dir = ((u / block) % 2 == 0) ? 1.0 : -1.0;
        d += dir * kTranslateStep;
      }
      for (Vec3& p : out) p[0] += d;
      break;
    }
  }
  return out;
}

void write_u16_le(std::ostream& os, std::uint16_t v) {
  const std::uint8_t b[2] = {std::uint8_t(v), std::uint8_t(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

void write_u32_le(std::ostream& os, std::uint32_t v) {
  const std::uint8_t b[4] = {std::uint8_t(v), std::uint8_t(v >> 8), std::uint8_t(v >> 16),
                             std::uint8_t(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_f32_le(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32_le(os, bits);
}

std::uint16_t read_u16_le(const std::uint8_t* p) {
  return std::uint16_t(p[0]) | (std::uint16_t(p[1]) << 8);
}

std::uint32_t read_u32_le(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

float read_f32_le(const std::uint8_t* p) {
  const std::uint32_t bits = read_u32_le(p);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

MotionClass motion_class_from_name(const std::string& name) {
  if (name == "static") return MotionClass::kStatic;
  if (name == "translate_x") return MotionClass::kTranslateX;
  if (name == "translate_y") return MotionClass::kTranslateY;
  if (name == "rotate_z") return MotionClass::kRotateZ;
  if (name == "oscillate_scale") return MotionClass::kOscillateScale;
  if (name == "zigzag") return MotionClass::kZigzag;
  throw ConfigError("unknown motion class '" + name + "'");
}

std::string motion_class_name(MotionClass c) {
  switch (c) {
    case MotionClass::kStatic: return "static";
    case MotionClass::kTranslateX: return "translate_x";
    case MotionClass::kTranslateY: return "translate_y";
    case MotionClass::kRotateZ: return "rotate_z";
    case MotionClass::kOscillateScale: return "oscillate_scale";
    case MotionClass::kZigzag: return "zigzag";
  }
  throw ConfigError("invalid motion class");
}

SyntheticSpec default_synthetic_spec() {
  SyntheticSpec spec;
  spec.classes = {MotionClass::kStatic,        MotionClass::kTranslateX,
                  MotionClass::kTranslateY,    MotionClass::kRotateZ,
                  MotionClass::kOscillateScale, MotionClass::kZigzag};
  return spec;
}

PcvDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.classes.empty()) throw ConfigError("synthetic: no classes");
  if (spec.n_points == 0 || spec.t_frames == 0) {
    throw ConfigError("synthetic: n_points and t_frames must be positive");
  }

  PcvDataset dataset;
  dataset.num_classes = static_cast<std::uint32_t>(spec.classes.size());
  Rng rng(spec.seed);
  for (std::size_t ci = 0; ci < spec.classes.size(); ++ci) {
    for (std::size_t v = 0; v < spec.videos_per_class; ++v) {
      const PointSet base = sample_base_shape(spec.n_points, rng);
      const Vec3 base_centroid = centroid(base);

      PointCloudVideo video;
      video.label = static_cast<std::uint32_t>(ci);
      video.frames.reserve(spec.t_frames);
      for (std::size_t t = 0; t < spec.t_frames; ++t) {
        PointSet frame = transform_frame(base, base_centroid, spec.classes[ci], t, spec.t_frames);
        if (spec.noise_sigma > 0.0) {
          for (Vec3& p : frame) {
            p[0] += spec.noise_sigma * rng.normal();
            p[1] += spec.noise_sigma * rng.normal();
            p[2] += spec.noise_sigma * rng.normal();
          }
        }
        video.frames.push_back(std::move(frame));
      }
      dataset.videos.push_back(std::move(video));
    }
  }
  return dataset;
}

void write_pcv(const std::string& path, const PcvDataset& dataset) {
  std::uint32_t t_frames = 0, n_points = 0;
  if (!dataset.videos.empty()) {
    t_frames = static_cast<std::uint32_t>(dataset.videos.front().num_frames());
    n_points = static_cast<std::uint32_t>(dataset.videos.front().points_per_frame());
    for (const PointCloudVideo& v : dataset.videos) {
      if (v.num_frames() != t_frames || v.points_per_frame() != n_points) {
        throw ConfigError("pcv: all videos must share T and N");
      }
    }
  }

  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(DataError::Code::io, "pcv: cannot open '" + path + "' for writing");

  os.write("PCV1", 4);
  write_u16_le(os, kPcvVersion);
  write_u32_le(os, t_frames);
  write_u32_le(os, n_points);
  write_u32_le(os, static_cast<std::uint32_t>(dataset.videos.size()));
  for (const PointCloudVideo& v : dataset.videos) {
    write_u32_le(os, v.label.value_or(0));
    for (const PointSet& frame : v.frames) {
      for (const Vec3& p : frame) {
        write_f32_le(os, static_cast<float>(p[0]));
        write_f32_le(os, static_cast<float>(p[1]));
        write_f32_le(os, static_cast<float>(p[2]));
      }
    }
  }
  if (!os) throw DataError(DataError::Code::io, "pcv: write failed for '" + path + "'");
}

PcvDataset read_pcv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(DataError::Code::io, "pcv: cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());

  if (bytes.size() < kPcvHeaderBytes) {
    throw DataError(DataError::Code::truncated, "pcv: file shorter than header");
  }
  if (std::memcmp(bytes.data(), "PCV1", 4) != 0) {
    throw DataError(DataError::Code::bad_magic, "pcv: bad magic");
  }
  const std::uint16_t version = read_u16_le(bytes.data() + 4);
  if (version != kPcvVersion) {
    throw DataError(DataError::Code::version_mismatch,
                    "pcv: version " + std::to_string(version) + ", expected " +
                        std::to_string(kPcvVersion));
  }
  const std::uint32_t t_frames = read_u32_le(bytes.data() + 6);
  const std::uint32_t n_points = read_u32_le(bytes.data() + 10);
  const std::uint32_t num_videos = read_u32_le(bytes.data() + 14);

  const std::size_t video_bytes = 4 + std::size_t(t_frames) * n_points * 12;
  const std::size_t expected = kPcvHeaderBytes + std::size_t(num_videos) * video_bytes;
  if (bytes.size() != expected) {
    throw DataError(DataError::Code::truncated,
                    "pcv: byte length " + std::to_string(bytes.size()) + ", expected " +
                        std::to_string(expected));
  }

  PcvDataset dataset;
  std::uint32_t max_label = 0;
  const std::uint8_t* p = bytes.data() + kPcvHeaderBytes;
  dataset.videos.reserve(num_videos);
  for (std::uint32_t v = 0; v < num_videos; ++v) {
    PointCloudVideo video;
    const std::uint32_t label = read_u32_le(p);
    p += 4;
    video.label = label;
    max_label = std::max(max_label, label);
    video.frames.resize(t_frames);
    for (std::uint32_t t = 0; t < t_frames; ++t) {
      PointSet& frame = video.frames[t];
      frame.resize(n_points);
      for (std::uint32_t i = 0; i < n_points; ++i) {
        frame[i] = {double(read_f32_le(p)), double(read_f32_le(p + 4)), double(read_f32_le(p + 8))};
        p += 12;
      }
    }
    dataset.videos.push_back(std::move(video));
  }
  dataset.num_classes = dataset.videos.empty() ? 0 : max_label + 1;
  return dataset;
}

PointCloudVideo drop_local(const PointCloudVideo& video, double drop_ratio, std::uint64_t seed) {
  validate_video(video);
  if (drop_ratio <= 0.0 || drop_ratio >= 1.0) {
    throw ConfigError("drop_local: ratio must lie in (0, 1)");
  }
  const std::size_t n = video.points_per_frame();
  const std::size_t drop = static_cast<std::size_t>(std::floor(drop_ratio * double(n)));
  if (drop >= n) throw ConfigError("drop_local: ratio leaves no survivors");

  Rng rng(seed);
  PointCloudVideo out;
  out.frame_interval = video.frame_interval;
  out.label = video.label;
  out.frames.reserve(video.num_frames());
  for (const PointSet& frame : video.frames) {
    if (drop == 0) {
      out.frames.push_back(frame);
      continue;
    }
    const std::size_t center = rng.bounded(n);
    const auto nearest = knn({frame[center]}, frame, drop);
    std::vector<char> removed(n, 0);
    for (std::size_t idx : nearest.front()) removed[idx] = 1;

    PointSet survivors;
    survivors.reserve(n - drop);
    for (std::size_t i = 0; i < n; ++i) {
      if (!removed[i]) survivors.push_back(frame[i]);
    }
    PointSet rebuilt = survivors;
    while (rebuilt.size() < n) {
      rebuilt.push_back(survivors[rng.bounded(survivors.size())]);
    }
    out.frames.push_back(std::move(rebuilt));
  }
  return out;
}

PointCloudVideo temporal_subsample(const PointCloudVideo& video, std::size_t step,
                                   std::size_t length, std::size_t offset) {
  if (step == 0 || length == 0) throw ConfigError("subsample: step and length must be positive");
  if (offset + step * (length - 1) >= video.num_frames()) {
    throw ConfigError("subsample: offset " + std::to_string(offset) + " step " +
                      std::to_string(step) + " length " + std::to_string(length) +
                      " exceeds " + std::to_string(video.num_frames()) + " frames");
  }
  PointCloudVideo out;
  out.frame_interval = video.frame_interval * static_cast<double>(step);
  out.label = video.label;
  out.frames.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    out.frames.push_back(video.frames[offset + i * step]);
  }
  return out;
}

}  // namespace pvnext
