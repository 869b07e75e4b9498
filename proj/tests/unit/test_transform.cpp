#include <gtest/gtest.h>

#include <random>

#include "poseprep/transform.hpp"
#include "support/oracles.hpp"

using namespace poseprep;

namespace {

std::array<Keypoint2D, 4> jitter_quad(const Box& b, std::mt19937_64& rng, double amount) {
  std::uniform_real_distribution<double> u(-amount, amount);
  auto q = box_corners(b);
  for (auto& p : q) p = {p.x + u(rng) * b.width(), p.y + u(rng) * b.height()};
  return q;
}

}  // namespace

TEST(Affine, RotationDirection) {
  const auto r = Affine2D::rotation({5, 5}, 90);
  const auto p = r({6, 5});
  EXPECT_NEAR(p.x, 5, 1e-12);
  EXPECT_NEAR(p.y, 6, 1e-12);
}

TEST(Affine, InverseComposesToIdentity) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ang(-30, 30), c(-500, 500);
  for (int i = 0; i < 100; ++i) {
    const Keypoint2D pivot{c(rng), c(rng)};
    for (const auto& t : {Affine2D::rotation(pivot, ang(rng)), Affine2D::shear(pivot, ang(rng), ang(rng))}) {
      const Keypoint2D p{c(rng), c(rng)};
      const auto back = t.inverse()(t(p));
      EXPECT_NEAR(back.x, p.x, 1e-9);
      EXPECT_NEAR(back.y, p.y, 1e-9);
    }
  }
  EXPECT_THROW((Affine2D{1, 1, 0, 1, 1, 0}.inverse()), Error);
}

TEST(Homography, UnitSquareCornersLandOnQuad) {
  const std::array<Keypoint2D, 4> q{{{0.1, 0.0}, {0.9, 0.05}, {1.1, 1.0}, {-0.2, 0.8}}};
  const auto h = Homography::unit_square_to_quad(q);
  const auto src = box_corners(Box{0, 0, 1, 1});
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(h(src[i]).x, q[i].x, 1e-12);
    EXPECT_NEAR(h(src[i]).y, q[i].y, 1e-12);
  }
}

TEST(Homography, AffineQuadGivesAffineMap) {
  const std::array<Keypoint2D, 4> q{{{1, 1}, {3, 1}, {3, 5}, {1, 5}}};
  const auto h = Homography::unit_square_to_quad(q);
  EXPECT_EQ(h.h[6], 0.0);
  EXPECT_EQ(h.h[7], 0.0);
}

TEST(Homography, MatchesDltOracle) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0, 1), c(-200, 200);
  for (int i = 0; i < 200; ++i) {
    const Box b{c(rng), c(rng), 0, 0};
    const Box box{b.min_x, b.min_y, b.min_x + 10 + 300 * u(rng), b.min_y + 10 + 300 * u(rng)};
    const auto q = jitter_quad(box, rng, 0.15);
    const auto h = Homography::box_to_quad(box, q);
    const auto ref = test::dlt_homography(box_corners(box), q);
    for (int j = 0; j < 20; ++j) {
      const Keypoint2D p{box.min_x + u(rng) * box.width(), box.min_y + u(rng) * box.height()};
      const auto a = h(p), r = test::apply_h(ref, p);
      EXPECT_NEAR(a.x, r.x, 1e-6);
      EXPECT_NEAR(a.y, r.y, 1e-6);
    }
  }
}

TEST(Homography, InverseRoundTrip) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0, 1);
  const Box box{0, 0, 256, 256};
  for (int i = 0; i < 100; ++i) {
    const auto h = Homography::box_to_quad(box, jitter_quad(box, rng, 0.15));
    const auto inv = h.inverse();
    for (int j = 0; j < 10; ++j) {
      const Keypoint2D p{256 * u(rng), 256 * u(rng)};
      const auto back = inv(h(p));
      EXPECT_NEAR(back.x, p.x, 1e-8);
      EXPECT_NEAR(back.y, p.y, 1e-8);
    }
  }
}

TEST(Homography, DegenerateInputs) {
  EXPECT_THROW(Homography::box_to_quad(Box{0, 0, 0, 5}, box_corners(Box{0, 0, 1, 1})), Error);
  Homography z;
  z.h = {1, 2, 3, 2, 4, 6, 0, 0, 1};
  EXPECT_THROW(z.inverse(), Error);
}

TEST(TransformClip, KeepsMissingAndState) {
  PoseFrame f;
  f.keypoints[0] = {1, 2};
  const Clip c("c", 25, {f});
  const auto out = transform_clip(c, Affine2D::rotation({0, 0}, 180));
  EXPECT_NEAR(out.frames()[0].keypoints[0].x, -1, 1e-12);
  EXPECT_TRUE(out.frames()[0].keypoints[1].is_missing());
  EXPECT_EQ(out.state(), c.state());
}
