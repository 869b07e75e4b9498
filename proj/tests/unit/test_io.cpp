#include <gtest/gtest.h>

#include <cmath>

#include <random>

#include "poseprep/io.hpp"
#include "poseprep/pipeline.hpp"
#include "support/synth.hpp"

using namespace poseprep;

namespace {

// Clip whose coordinates survive the float32 trip exactly.
Clip float_clip(std::mt19937_64& rng, std::size_t frames, std::string id = "clip") {
  auto c = test::make_clip(rng, {.frames = frames, .body_missing = 0.2, .hand_missing = 0.3, .face_missing = 0.2}, id);
  // 1/1024 grid: exact in float32 for the coordinate range used here
  return transform_clip(c, [](Keypoint2D p) {
    return Keypoint2D{std::round(p.x * 1024) / 1024, std::round(p.y * 1024) / 1024};
  });
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("poseprep_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(Pkpf, HeaderBytes) {
  PoseFrame f;
  f.keypoints[0] = {1.5, -2};
  const auto bytes = encode_pkpf(Clip("h", 25, {f, [&] { auto g = f; g.frame_index = 1; return g; }()}));
  ASSERT_EQ(bytes.size(), 20u + 2 * 104 * 8);
  EXPECT_EQ(bytes.substr(0, 4), "PKPF");
  const auto h = read_pkpf_header(bytes);
  EXPECT_EQ(h.version, 1u);
  EXPECT_EQ(h.frame_count, 2u);
  EXPECT_EQ(h.keypoint_count, 104u);
  EXPECT_EQ(h.coordinate_state, 0u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 2u);  // little-endian frame count
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 104u);
  EXPECT_EQ(detail::get_f32(bytes, 20), 1.5f);
  EXPECT_EQ(detail::get_u32(bytes, 28), 0x7fc00000u);  // keypoint 1 x
}

TEST(Pkpf, RoundTrip) {
  std::mt19937_64 rng(51);
  for (int rep = 0; rep < 10; ++rep) {
    const auto c = float_clip(rng, 12);
    EXPECT_EQ(decode_pkpf(encode_pkpf(c), {c.id(), c.fps(), c.caption()}), c);
  }
}

TEST(Pkpf, RejectsMalformed) {
  std::mt19937_64 rng(52);
  const auto bytes = encode_pkpf(float_clip(rng, 3));
  const ClipMeta meta{"x", 25, {}};
  EXPECT_THROW(decode_pkpf(bytes.substr(0, bytes.size() - 4), meta), Error);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_pkpf(bad, meta), Error);
  bad = bytes;
  bad[12] = 103;
  EXPECT_THROW(decode_pkpf(bad, meta), Error);
  bad = bytes;
  bad[16] = 7;
  EXPECT_THROW(decode_pkpf(bad, meta), Error);
}

TEST(ClipFiles, WriteReadWithSidecar) {
  TempDir d;
  std::mt19937_64 rng(53);
  const auto c = Clip("s1", 30, float_clip(rng, 5).frames(), std::string("hello"));
  write_clip(d.path / "s1.pkpf", c, {{"note", 1}});
  EXPECT_EQ(read_clip(d.path / "s1.pkpf"), c);
  const auto side = nlohmann::json::parse(read_file(d.path / "s1.json"));
  EXPECT_EQ(side.at("note"), 1);
  EXPECT_EQ(side.at("caption"), "hello");
  fs::remove(d.path / "s1.json");
  EXPECT_THROW(read_clip(d.path / "s1.pkpf"), Error);
}

TEST(ClipJson, RoundTrip) {
  std::mt19937_64 rng(54);
  const auto c = test::make_clip(rng, {.frames = 4, .body_missing = 0.3, .hand_missing = 0.5});
  EXPECT_EQ(clip_from_json(nlohmann::json::parse(clip_to_json(c).dump())), c);
  auto j = clip_to_json(c);
  j["frames"][0].erase(0);
  EXPECT_THROW(clip_from_json(j), Error);
}

TEST(Features, RowsMatchFlatten) {
  std::mt19937_64 rng(55);
  const auto c = float_clip(rng, 6);
  const auto rows = decode_features(encode_features(c, -10));
  ASSERT_EQ(rows.size(), 6u);
  for (std::size_t t = 0; t < 6; ++t) EXPECT_EQ(rows[t], flatten_frame(c.frames()[t], -10));
  EXPECT_THROW(decode_features(std::string(12, '\0')), Error);
}

TEST(Atnt, RoundTripAndErrors) {
  TensorFile t{TensorKind::Cross, {2, 3, 4}, std::vector<float>(24)};
  for (std::size_t i = 0; i < 24; ++i) t.data[i] = static_cast<float>(i) * 0.25f;
  const auto bytes = encode_atnt(t);
  EXPECT_EQ(bytes.size(), 16u + 12u + 96u);
  const auto back = decode_atnt(bytes);
  EXPECT_EQ(back.kind, t.kind);
  EXPECT_EQ(back.dims, t.dims);
  EXPECT_EQ(back.data, t.data);
  EXPECT_THROW(decode_atnt(bytes.substr(0, bytes.size() - 1)), Error);
  t.data.pop_back();
  EXPECT_THROW(encode_atnt(t), Error);
}

TEST(Validate, CleanAndBrokenFiles) {
  TempDir d;
  std::mt19937_64 rng(56);
  write_clip(d.path / "good.pkpf", float_clip(rng, 4, "good"));

  auto half = encode_pkpf(float_clip(rng, 4, "half"));
  const std::string nan_bits{"\x00\x00\xc0\x7f", 4};
  half.replace(20, 4, nan_bits);  // keypoint 0: x missing, y present
  half.replace(24, 4, std::string(4, '\0'));
  write_file_atomic(d.path / "half.pkpf", half);
  write_file_atomic(d.path / "half.json", R"({"id": "half", "fps": 25})");

  auto partial = encode_pkpf(float_clip(rng, 2, "partial"));
  const std::size_t hand0 = 20 + 25 * 8;
  partial.replace(hand0, 8, nan_bits + nan_bits);
  partial.replace(hand0 + 8, 8, "\0\0\0\0\0\0\0\0", 8);
  write_file_atomic(d.path / "partial.pkpf", partial);

  auto padded = encode_pkpf(float_clip(rng, 2, "padded"));
  padded[17] = 1;
  write_file_atomic(d.path / "padded.pkpf", padded);
  write_file_atomic(d.path / "padded.json", R"({"id": "padded", "fps": 25})");

  const auto r = validate_dataset(d.path);
  EXPECT_EQ(r.files_checked, 4u);
  EXPECT_EQ(r.valid_files, 1u);
  auto has = [&](const std::string& file, const std::string& needle) {
    return std::any_of(r.violations.begin(), r.violations.end(), [&](const Violation& v) {
      return v.file == file && v.message.find(needle) != std::string::npos;
    });
  };
  EXPECT_TRUE(has("half.pkpf", "half-missing"));
  EXPECT_TRUE(has("partial.pkpf", "partially missing"));
  EXPECT_TRUE(has("partial.pkpf", "missing sidecar"));
  EXPECT_TRUE(has("padded.pkpf", "padding"));
}
