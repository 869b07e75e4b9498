#include <gtest/gtest.h>

#include <random>

#include "poseprep/normalization.hpp"
#include "poseprep/transform.hpp"
#include "support/synth.hpp"

using namespace poseprep;
using test::make_clip;

namespace {

// Frame holding only the listed body points (index, position).
PoseFrame body_frame(std::initializer_list<std::pair<std::size_t, Keypoint2D>> pts, std::size_t index = 0) {
  PoseFrame f;
  f.frame_index = index;
  for (auto [k, p] : pts) f.keypoints[k] = p;
  return f;
}

void set_group(PoseFrame& f, layout::Group g, std::initializer_list<Keypoint2D> pts) {
  auto span = f.group(g);
  std::size_t i = 0;
  for (auto p : pts) span[i++] = p;
  for (; i < span.size(); ++i) span[i] = *pts.begin();  // pad with the first point
}

}  // namespace

TEST(YaslClip, StatedBoundingBox) {
  const auto f0 = body_frame({{0, {10, 20}}, {1, {20, 40}}}, 0);
  const auto f1 = body_frame({{0, {30, 60}}}, 1);
  const auto out = normalize_yasl_clip(Clip("c", 25, {f0, f1}));
  EXPECT_EQ(out.state(), CoordinateState::Normalized);
  EXPECT_EQ(out.frames()[0].keypoints[0], (Keypoint2D{0, 0}));
  EXPECT_EQ(out.frames()[0].keypoints[1], (Keypoint2D{0.5, 0.5}));
  EXPECT_EQ(out.frames()[1].keypoints[0], (Keypoint2D{1, 1}));
  EXPECT_TRUE(out.frames()[1].keypoints[1].is_missing());
}

TEST(YaslClip, UnitBoxIsFixedPoint) {
  std::mt19937_64 rng(1);
  auto clip = test::make_uniform_clip(rng, 4, 0.0, 1.0);
  auto frames = clip.frames();
  frames[0].keypoints[0] = {0, 0};
  frames[0].keypoints[1] = {1, 1};
  clip = Clip("u", 25, frames);
  EXPECT_LE(test::max_abs_diff(normalize_yasl_clip(clip), clip), 1e-7);
}

TEST(YaslClip, DegenerateAxisMapsToHalf) {
  const auto f = body_frame({{0, {5, 1}}, {1, {5, 3}}, {2, {5, 9}}});
  const auto out = normalize_yasl_clip(Clip("c", 25, {f}));
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(out.frames()[0].keypoints[k].x, 0.5);
  EXPECT_EQ(out.frames()[0].keypoints[2].y, 1.0);
}

TEST(YaslClip, EmptyGeometryAndWrongState) {
  const Clip empty("e", 25, {PoseFrame{}});
  EXPECT_THROW(normalize_yasl_clip(empty), Error);
  const auto done = normalize_yasl_clip(Clip("c", 25, {body_frame({{0, {1, 2}}, {1, {3, 4}}})}));
  try {
    normalize_yasl_clip(done);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidState);
  }
}

TEST(YaslFrame, PerFrameBoxes) {
  const auto f0 = body_frame({{0, {0, 0}}, {1, {10, 10}}}, 0);
  const auto f1 = body_frame({{0, {0, 0}}, {1, {10, 10}}, {2, {20, 20}}}, 1);
  const auto out = normalize_yasl_frame(Clip("c", 25, {f0, f1}));
  EXPECT_EQ(out.frames()[0].keypoints[1], (Keypoint2D{1, 1}));
  EXPECT_EQ(out.frames()[1].keypoints[1], (Keypoint2D{0.5, 0.5}));
}

TEST(YaslFrame, SingleFrameMatchesClipVariant) {
  std::mt19937_64 rng(2);
  const auto clip = make_clip(rng, {.frames = 1, .body_missing = 0.2, .hand_missing = 0.5});
  EXPECT_EQ(normalize_yasl_frame(clip), normalize_yasl_clip(clip));
}

TEST(YaslFrame, AllMissingFrameUnchanged) {
  const auto f0 = body_frame({{0, {0, 0}}, {1, {10, 10}}}, 0);
  PoseFrame f1;
  f1.frame_index = 1;
  const auto out = normalize_yasl_frame(Clip("c", 25, {f0, f1}));
  EXPECT_EQ(out.frames()[1], f1);
}

TEST(YaslFrame, ExtentsAreUnitPerFrame) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const auto out = normalize_yasl_frame(make_clip(rng, {.frames = 10, .body_missing = 0.3, .hand_missing = 0.3}));
    for (const auto& f : out.frames()) {
      Box b;
      for (const auto& p : f.keypoints)
        if (p.is_present()) b.extend(p);
      EXPECT_NEAR(b.min_x, 0, 1e-6);
      EXPECT_NEAR(b.max_x, 1, 1e-6);
      EXPECT_NEAR(b.min_y, 0, 1e-6);
      EXPECT_NEAR(b.max_y, 1, 1e-6);
    }
  }
}

TEST(Yasl, IdempotentOnNonDegenerateInput) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 10; ++rep) {
    const auto clip = make_clip(rng, {.frames = 8, .body_missing = 0.1});
    const auto c1 = normalize_yasl_clip(clip);
    EXPECT_LE(test::max_abs_diff(normalize_yasl_clip(c1.with_state_unchecked(CoordinateState::RawCrop)), c1), 1e-12);
    const auto f1 = normalize_yasl_frame(clip);
    EXPECT_LE(test::max_abs_diff(normalize_yasl_frame(f1.with_state_unchecked(CoordinateState::RawCrop)), f1), 1e-12);
  }
}

TEST(YaslClip, PreservesAxisRatiosWithinFrames) {
  std::mt19937_64 rng(6);
  const auto clip = make_clip(rng, {.frames = 5});
  const auto out = normalize_yasl_clip(clip);
  for (std::size_t t = 0; t < clip.size(); ++t) {
    const auto& a = clip.frames()[t].keypoints;
    const auto& b = out.frames()[t].keypoints;
    const double rx = (a[3].x - a[1].x) / (a[7].x - a[5].x);
    const double ry = (a[3].y - a[1].y) / (a[7].y - a[5].y);
    EXPECT_NEAR((b[3].x - b[1].x) / (b[7].x - b[5].x), rx, 1e-9 * std::max(1.0, std::abs(rx)));
    EXPECT_NEAR((b[3].y - b[1].y) / (b[7].y - b[5].y), ry, 1e-9 * std::max(1.0, std::abs(ry)));
  }
}

TEST(SignSpace, BodyWorkedExample) {
  auto f = body_frame({{layout::kLeftShoulder, {120, 100}},
                       {layout::kRightShoulder, {160, 100}},
                       {0, {140, 100}},
                       {1, {200, 160}},
                       {2, {80, 40}}});
  const auto out = normalize_sign_space(Clip("c", 25, {f}));
  const auto& k = out.frames()[0].keypoints;
  EXPECT_NEAR(k[0].x, 0, 1e-9);
  EXPECT_NEAR(k[0].y, 0, 1e-9);
  EXPECT_NEAR(k[1].x, 1, 1e-9);
  EXPECT_NEAR(k[1].y, 1, 1e-9);
  EXPECT_NEAR(k[2].x, -1, 1e-9);
  EXPECT_NEAR(k[2].y, -1, 1e-9);
  EXPECT_NEAR(k[layout::kLeftShoulder].x, -1.0 / 3.0, 1e-9);
}

TEST(SignSpace, SquareHandWithBorder) {
  const auto m = local_group_map(Box{0, 0, 10, 10});
  EXPECT_NEAR(m(Keypoint2D{5, 5}).x, 0, 1e-9);
  EXPECT_NEAR(m(Keypoint2D{5, 5}).y, 0, 1e-9);
  EXPECT_NEAR(m(Keypoint2D{11, 11}).x, 1, 1e-9);
  EXPECT_NEAR(m(Keypoint2D{11, 11}).y, 1, 1e-9);
  EXPECT_NEAR(m(Keypoint2D{-1, -1}).x, -1, 1e-9);
}

TEST(SignSpace, WideHandKeepsAspectRatio) {
  const auto m = local_group_map(Box{0, 0, 20, 10});
  EXPECT_NEAR(m(Keypoint2D{-2, -1}).x, -1, 1e-9);
  EXPECT_NEAR(m(Keypoint2D{22, 11}).x, 1, 1e-9);
  EXPECT_NEAR(m(Keypoint2D{-2, -1}).y, -0.5, 1e-9);
  EXPECT_NEAR(m(Keypoint2D{22, 11}).y, 0.5, 1e-9);
}

TEST(SignSpace, HandBlockNormalizedLocally) {
  auto f = body_frame({{layout::kLeftShoulder, {120, 100}}, {layout::kRightShoulder, {160, 100}}});
  set_group(f, layout::Group::LeftHand, {{0, 0}, {20, 10}, {10, 5}});
  const auto out = normalize_sign_space(Clip("c", 25, {f})).frames()[0];
  const auto lh = out.group(layout::Group::LeftHand);
  EXPECT_NEAR(lh[0].x, -10.0 / 12.0, 1e-9);
  EXPECT_NEAR(lh[0].y, -5.0 / 12.0, 1e-9);
  EXPECT_NEAR(lh[1].x, 10.0 / 12.0, 1e-9);
  EXPECT_NEAR(lh[2].x, 0, 1e-9);
  EXPECT_TRUE(out.group(layout::Group::RightHand)[0].is_missing());
}

TEST(SignSpace, MissingShouldersReuseNeighbouringSpace) {
  auto f0 = body_frame({{0, {0, 0}}}, 0);  // no shoulders: takes the first valid space (frame 1)
  auto f1 = body_frame({{layout::kLeftShoulder, {120, 100}}, {layout::kRightShoulder, {160, 100}}, {0, {200, 160}}}, 1);
  auto f2 = body_frame({{0, {80, 40}}}, 2);  // reuses frame 1
  auto f3 = body_frame({{layout::kLeftShoulder, {0, 0}}, {layout::kRightShoulder, {10, 0}}, {0, {5, 0}}}, 3);
  const auto out = normalize_sign_space(Clip("c", 25, {f0, f1, f2, f3}));
  EXPECT_NEAR(out.frames()[0].keypoints[0].x, -140.0 / 60.0, 1e-12);
  EXPECT_NEAR(out.frames()[1].keypoints[0].x, 1, 1e-12);
  EXPECT_NEAR(out.frames()[2].keypoints[0].x, -1, 1e-12);
  EXPECT_NEAR(out.frames()[3].keypoints[0].x, 0, 1e-12);
}

TEST(SignSpace, NoValidSigningSpace) {
  const auto clip = test::constant_clip(body_frame({{0, {1, 1}}}), 3);
  try {
    normalize_sign_space(clip);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoValidSigningSpace);
  }
}

TEST(SignSpace, LocalAspectRatioPreserved) {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 10; ++rep) {
    const auto clip = make_clip(rng, {.frames = 5, .hand_missing = 0.2});
    const auto out = normalize_sign_space(clip);
    for (std::size_t t = 0; t < clip.size(); ++t)
      for (auto g : {layout::Group::LeftHand, layout::Group::RightHand, layout::Group::Face}) {
        const auto a = clip.frames()[t].group(g);
        const auto b = out.frames()[t].group(g);
        if (a[0].is_missing()) continue;
        const double r_in = (a[4].x - a[0].x) / (a[4].y - a[0].y);
        const double r_out = (b[4].x - b[0].x) / (b[4].y - b[0].y);
        EXPECT_NEAR(r_out, r_in, 1e-5 * std::max(1.0, std::abs(r_in)));
      }
  }
}

TEST(SignSpace, TranslationScaleInvariant) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> t(-1e4, 1e4), s(0.1, 10);
  for (int rep = 0; rep < 20; ++rep) {
    const auto clip = make_clip(rng, {.frames = 6, .body_missing = 0.2, .hand_missing = 0.2, .face_missing = 0.1});
    const double tx = t(rng), ty = t(rng), k = s(rng);
    const auto moved = transform_clip(clip, [&](Keypoint2D p) { return Keypoint2D{p.x * k + tx, p.y * k + ty}; });
    EXPECT_LE(test::max_abs_diff(normalize_sign_space(moved), normalize_sign_space(clip)), 1e-5);
  }
}

TEST(Normalization, NoneOnlyAdvancesState) {
  std::mt19937_64 rng(10);
  const auto clip = make_clip(rng, {.frames = 3, .body_missing = 0.3});
  const auto out = normalize(clip, NormalizationMethod::None);
  EXPECT_EQ(out.state(), CoordinateState::Normalized);
  EXPECT_EQ(out.frames(), clip.frames());
}

TEST(Normalization, PreservesMissingPatternAndCounts) {
  std::mt19937_64 rng(12);
  const auto clip = make_clip(rng, {.frames = 12, .body_missing = 0.3, .hand_missing = 0.4, .face_missing = 0.3});
  for (auto m : {NormalizationMethod::YaslClip, NormalizationMethod::YaslFrame, NormalizationMethod::SignSpace}) {
    const auto out = normalize(clip, m);
    EXPECT_EQ(out.size(), clip.size());
    EXPECT_TRUE(test::same_missing_pattern(out, clip)) << to_string(m);
  }
}

TEST(Normalization, ParseMethodNames) {
  EXPECT_EQ(parse_normalization_method("signspace"), NormalizationMethod::SignSpace);
  EXPECT_EQ(parse_normalization_method("yasl-clip"), NormalizationMethod::YaslClip);
  EXPECT_EQ(parse_normalization_method("yasl-frame"), NormalizationMethod::YaslFrame);
  EXPECT_EQ(parse_normalization_method("none"), NormalizationMethod::None);
  EXPECT_THROW(parse_normalization_method("zscore"), Error);
}
