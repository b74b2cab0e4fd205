#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pvnext/dataio.hpp"
#include "pvnext/errors.hpp"
#include "test_util.hpp"

using namespace pvnext;
using namespace pvnext::testutil;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return std::vector<char>((std::istreambuf_iterator<char>(is)),
                           std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream os(path, std::ios::binary);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

SyntheticSpec small_spec() {
  SyntheticSpec spec = default_synthetic_spec();
  spec.n_points = 24;
  spec.t_frames = 5;
  spec.videos_per_class = 2;
  spec.seed = 7;
  return spec;
}

Vec3 frame_centroid(const PointSet& ps) {
  Vec3 c = {0, 0, 0};
  for (const Vec3& p : ps) c = c + p;
  return c * (1.0 / double(ps.size()));
}

}  // namespace

TEST_CASE("motion class names round-trip") {
  for (const char* name : {"static", "translate_x", "translate_y", "rotate_z", "oscillate_scale",
                           "zigzag"}) {
    CHECK(motion_class_name(motion_class_from_name(name)) == name);
  }
  CHECK_THROWS_AS(motion_class_from_name("wobble"), ConfigError);
}

TEST_CASE("generated videos have the requested shape and labels") {
  const SyntheticSpec spec = small_spec();
  const PcvDataset data = generate_synthetic(spec);
  CHECK(data.videos.size() == 12);
  CHECK(data.num_classes == 6);
  for (std::size_t v = 0; v < data.videos.size(); ++v) {
    CHECK(data.videos[v].num_frames() == 5);
    CHECK(data.videos[v].points_per_frame() == 24);
    CHECK(*data.videos[v].label == v / 2);
    validate_video(data.videos[v]);
  }
}

TEST_CASE("static class with zero noise repeats the base frame") {
  SyntheticSpec spec = small_spec();
  spec.classes = {MotionClass::kStatic};
  spec.noise_sigma = 0.0;
  const PcvDataset data = generate_synthetic(spec);
  const PointCloudVideo& video = data.videos[0];
  for (std::size_t t = 1; t < video.num_frames(); ++t) {
    CHECK(video.frames[t] == video.frames[0]);
  }
}

TEST_CASE("translate_x moves the centroid 0.05 per frame") {
  SyntheticSpec spec = small_spec();
  spec.classes = {MotionClass::kTranslateX};
  spec.noise_sigma = 0.0;
  const PointCloudVideo video = generate_synthetic(spec).videos[0];
  for (std::size_t t = 1; t < video.num_frames(); ++t) {
    const Vec3 delta = frame_centroid(video.frames[t]) - frame_centroid(video.frames[t - 1]);
    CHECK(delta[0] == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(delta[1] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(delta[2] == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("rotate_z preserves per-point radius to the base centroid") {
  SyntheticSpec spec = small_spec();
  spec.classes = {MotionClass::kRotateZ};
  spec.noise_sigma = 0.0;
  const PointCloudVideo video = generate_synthetic(spec).videos[0];
  const Vec3 c = frame_centroid(video.frames[0]);
  for (std::size_t i = 0; i < video.points_per_frame(); ++i) {
    const double r0 = norm(video.frames[0][i] - c);
    for (std::size_t t = 1; t < video.num_frames(); ++t) {
      CHECK(std::fabs(norm(video.frames[t][i] - c) - r0) <= 1e-9);
    }
  }
}

TEST_CASE("zigzag reverses direction every quarter of the video") {
  SyntheticSpec spec = small_spec();
  spec.classes = {MotionClass::kZigzag};
  spec.noise_sigma = 0.0;
  spec.t_frames = 8;  // blocks of ceil(8/4) = 2 frames
  const PointCloudVideo video = generate_synthetic(spec).videos[0];
  std::vector<double> x;
  for (const PointSet& frame : video.frames) x.push_back(frame_centroid(frame)[0]);
  const double base = x[0];
  const std::vector<double> expect = {0, 0.05, 0.1, 0.05, 0, 0.05, 0.1, 0.05};
  for (std::size_t t = 0; t < 8; ++t) {
    CHECK(x[t] - base == doctest::Approx(expect[t]).epsilon(1e-9));
  }
}

TEST_CASE("generation is deterministic given the seed") {
  const PcvDataset a = generate_synthetic(small_spec());
  const PcvDataset b = generate_synthetic(small_spec());
  REQUIRE(a.videos.size() == b.videos.size());
  for (std::size_t v = 0; v < a.videos.size(); ++v) {
    CHECK(a.videos[v].frames == b.videos[v].frames);
  }
}

TEST_CASE("empty dataset writes an 18-byte file") {
  const std::string path = temp_path("pvnext_empty.pcv");
  write_pcv(path, PcvDataset{});
  CHECK(std::filesystem::file_size(path) == 18);
  const PcvDataset back = read_pcv(path);
  CHECK(back.videos.empty());
  CHECK(back.num_classes == 0);
  std::filesystem::remove(path);
}

TEST_CASE("pcv file length matches the header arithmetic") {
  const SyntheticSpec spec = small_spec();
  const PcvDataset data = generate_synthetic(spec);
  const std::string path = temp_path("pvnext_sized.pcv");
  write_pcv(path, data);
  CHECK(std::filesystem::file_size(path) == 18 + 12 * (4 + 5 * 24 * 12));
  std::filesystem::remove(path);
}

TEST_CASE("pcv write-read round trip is bit identical") {
  const PcvDataset data = generate_synthetic(small_spec());
  const std::string path1 = temp_path("pvnext_rt1.pcv");
  const std::string path2 = temp_path("pvnext_rt2.pcv");
  write_pcv(path1, data);
  const PcvDataset back = read_pcv(path1);
  CHECK(back.num_classes == data.num_classes);
  write_pcv(path2, back);
  CHECK(slurp(path1) == slurp(path2));
  std::filesystem::remove(path1);
  std::filesystem::remove(path2);
}

TEST_CASE("pcv header corruption yields distinct error codes") {
  const PcvDataset data = generate_synthetic(small_spec());
  const std::string path = temp_path("pvnext_bad.pcv");
  write_pcv(path, data);
  const std::vector<char> good = slurp(path);

  SUBCASE("bad magic") {
    std::vector<char> bad = good;
    bad[0] = 'X';
    spit(path, bad);
    try {
      read_pcv(path);
      FAIL("expected error");
    } catch (const DataError& e) {
      CHECK(e.code == DataError::Code::bad_magic);
    }
  }
  SUBCASE("version mismatch") {
    std::vector<char> bad = good;
    bad[4] = 9;
    spit(path, bad);
    try {
      read_pcv(path);
      FAIL("expected error");
    } catch (const DataError& e) {
      CHECK(e.code == DataError::Code::version_mismatch);
    }
  }
  SUBCASE("truncated body") {
    std::vector<char> bad(good.begin(), good.end() - 7);
    spit(path, bad);
    try {
      read_pcv(path);
      FAIL("expected error");
    } catch (const DataError& e) {
      CHECK(e.code == DataError::Code::truncated);
    }
  }
  SUBCASE("truncated header") {
    std::vector<char> bad(good.begin(), good.begin() + 10);
    spit(path, bad);
    try {
      read_pcv(path);
      FAIL("expected error");
    } catch (const DataError& e) {
      CHECK(e.code == DataError::Code::truncated);
    }
  }
  SUBCASE("missing file") {
    try {
      read_pcv(temp_path("pvnext_does_not_exist.pcv"));
      FAIL("expected error");
    } catch (const DataError& e) {
      CHECK(e.code == DataError::Code::io);
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("drop_local with a ratio flooring to zero is the identity") {
  const PointCloudVideo video = generate_synthetic(small_spec()).videos[0];
  const PointCloudVideo out = drop_local(video, 0.001, 3);
  CHECK(out.frames == video.frames);
}

TEST_CASE("drop_local removes the knn cluster and resamples survivors") {
  PointCloudVideo video;
  video.frames = {{{0, 0, 0}, {0.1, 0, 0}, {5, 5, 5}, {6, 6, 6}}};
  const PointCloudVideo out = drop_local(video, 0.5, 11);
  REQUIRE(out.points_per_frame() == 4);

  // recover the seeded center choice, then apply the knn oracle
  Rng rng(11);
  const std::size_t center = rng.bounded(4);
  const auto removed = knn({video.frames[0][center]}, video.frames[0], 2).front();
  std::vector<Vec3> survivors;
  for (std::size_t i = 0; i < 4; ++i) {
    if (std::find(removed.begin(), removed.end(), i) == removed.end()) {
      survivors.push_back(video.frames[0][i]);
    }
  }
  REQUIRE(survivors.size() == 2);
  // survivors keep their order and coordinates; the rest are duplicates
  CHECK(out.frames[0][0] == survivors[0]);
  CHECK(out.frames[0][1] == survivors[1]);
  for (std::size_t i = 2; i < 4; ++i) {
    CHECK((out.frames[0][i] == survivors[0] || out.frames[0][i] == survivors[1]));
  }
}

TEST_CASE("drop_local is deterministic and validates its ratio") {
  const PointCloudVideo video = generate_synthetic(small_spec()).videos[3];
  const PointCloudVideo a = drop_local(video, 0.25, 9);
  const PointCloudVideo b = drop_local(video, 0.25, 9);
  CHECK(a.frames == b.frames);
  CHECK(a.points_per_frame() == video.points_per_frame());
  CHECK_THROWS_AS(drop_local(video, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(drop_local(video, 1.0, 1), ConfigError);
}

TEST_CASE("temporal subsample selects an arithmetic progression") {
  const PointCloudVideo video = generate_synthetic(small_spec()).videos[0];

  const PointCloudVideo identity = temporal_subsample(video, 1, video.num_frames(), 0);
  CHECK(identity.frames == video.frames);

  SyntheticSpec spec8 = small_spec();
  spec8.t_frames = 8;
  const PointCloudVideo v8 = generate_synthetic(spec8).videos[0];
  const PointCloudVideo strided = temporal_subsample(v8, 2, 4, 0);
  REQUIRE(strided.num_frames() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(strided.frames[i] == v8.frames[2 * i]);

  CHECK_THROWS_AS(temporal_subsample(v8, 2, 5, 0), ConfigError);
  CHECK_THROWS_AS(temporal_subsample(v8, 3, 3, 2), ConfigError);

  Rng rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t step = 1 + rng.bounded(3);
    const std::size_t offset = rng.bounded(3);
    const std::size_t max_len = (v8.num_frames() - offset - 1) / step + 1;
    const std::size_t length = 1 + rng.bounded(max_len);
    const PointCloudVideo sub = temporal_subsample(v8, step, length, offset);
    REQUIRE(sub.num_frames() == length);
    for (std::size_t i = 0; i < length; ++i) {
      CHECK(sub.frames[i] == v8.frames[offset + i * step]);
    }
  }
}
