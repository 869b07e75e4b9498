#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "poseprep/pose.hpp"
#include "poseprep/rng.hpp"
#include "poseprep/transform.hpp"

namespace poseprep {

struct Interval {
  double low = 0.0;
  double high = 0.0;
  bool contains(double v) const noexcept { return v >= low && v <= high; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

enum class ArmSide { Left, Right };
enum class ArmJoint { Shoulder, Elbow, Wrist };
enum class ShearAxis { X, Y };
enum class SidePair { TopBottom, LeftRight };
enum class SideChoice { First, Second };  // top or left / bottom or right

constexpr std::string_view to_string(ArmSide s) noexcept { return s == ArmSide::Left ? "left" : "right"; }
constexpr std::string_view to_string(ArmJoint j) noexcept {
  return j == ArmJoint::Shoulder ? "shoulder" : j == ArmJoint::Elbow ? "elbow" : "wrist";
}

struct RotateParams {
  Interval angle;
  double prob = 0.0;
  friend bool operator==(const RotateParams&, const RotateParams&) = default;
};

struct ShearParams {
  Interval angle_x;
  Interval angle_y;
  double prob = 0.0;
  friend bool operator==(const ShearParams&, const ShearParams&) = default;
};

struct PerspectiveParams {
  Interval portion;
  double prob = 0.0;
  friend bool operator==(const PerspectiveParams&, const PerspectiveParams&) = default;
};

struct ArmRotateParams {
  Interval shoulder;
  Interval elbow;
  Interval wrist;
  double prob = 0.0;
  // Joints that take part in sampling; disabled joints consume no draws.
  std::array<bool, 3> joints{true, true, true};

  const Interval& range(ArmJoint j) const noexcept {
    return j == ArmJoint::Shoulder ? shoulder : j == ArmJoint::Elbow ? elbow : wrist;
  }
  bool enabled(ArmJoint j) const noexcept { return joints[static_cast<std::size_t>(j)]; }
  friend bool operator==(const ArmRotateParams&, const ArmRotateParams&) = default;
};

struct NoiseParams {
  double stddev = 0.0;  // crop pixels
  double prob = 0.0;
  friend bool operator==(const NoiseParams&, const NoiseParams&) = default;
};

struct AugmentationParams {
  RotateParams rotate;
  ShearParams shear;
  PerspectiveParams perspective;
  ArmRotateParams arm_rotate;
  NoiseParams noise;

  void validate() const {
    auto prob = [](double p, const char* what) {
      if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::InvalidArgument, std::string(what) + " probability outside [0,1]");
    };
    auto range = [](const Interval& r, const char* what) {
      if (!(r.low <= r.high)) throw Error(Errc::InvalidArgument, std::string(what) + " range has low > high");
    };
    prob(rotate.prob, "rotate");
    prob(shear.prob, "shear");
    prob(perspective.prob, "perspective");
    prob(arm_rotate.prob, "arm_rotate");
    prob(noise.prob, "noise");
    range(rotate.angle, "rotate.angle");
    range(shear.angle_x, "shear.angle_x");
    range(shear.angle_y, "shear.angle_y");
    range(perspective.portion, "perspective.portion");
    range(arm_rotate.shoulder, "arm_rotate.shoulder");
    range(arm_rotate.elbow, "arm_rotate.elbow");
    range(arm_rotate.wrist, "arm_rotate.wrist");
    if (!(perspective.portion.low > -1.0 && perspective.portion.high < 1.0))
      throw Error(Errc::InvalidArgument, "perspective portion must lie in (-1, 1)");
    if (!(noise.stddev >= 0.0)) throw Error(Errc::InvalidStddev, "noise stddev must be >= 0");
  }

  friend bool operator==(const AugmentationParams&, const AugmentationParams&) = default;
};

enum class Preset { Heavy, Medium, Light };

constexpr std::string_view to_string(Preset p) noexcept {
  return p == Preset::Heavy ? "heavy" : p == Preset::Medium ? "medium" : "light";
}

inline Preset parse_preset(std::string_view s) {
  if (s == "heavy") return Preset::Heavy;
  if (s == "medium") return Preset::Medium;
  if (s == "light") return Preset::Light;
  throw Error(Errc::InvalidArgument, "unknown augmentation preset '" + std::string(s) + "'");
}

/// Full protocol tables (all five augmentations) for each intensity.
inline AugmentationParams preset_params(Preset p) {
  struct Row {
    double rot, rot_p, shear, shear_p, persp, persp_p, arm, arm_p, noise_p;
  };
  static constexpr Row heavy{6.0, 1.00, 6.0, 0.75, 0.15, 0.50, 10.0, 0.75, 0.75};
  static constexpr Row medium{4.5, 0.75, 4.5, 0.56, 0.11, 0.38, 7.5, 0.56, 0.56};
  static constexpr Row light{3.0, 0.50, 3.0, 0.38, 0.08, 0.25, 5.0, 0.38, 0.38};
  const Row& r = p == Preset::Heavy ? heavy : p == Preset::Medium ? medium : light;
  AugmentationParams a;
  a.rotate = {{-r.rot, r.rot}, r.rot_p};
  a.shear = {{-r.shear, r.shear}, {-r.shear, r.shear}, r.shear_p};
  a.perspective = {{-r.persp, r.persp}, r.persp_p};
  a.arm_rotate = {{-r.arm, r.arm}, {-r.arm, r.arm}, {-r.arm, r.arm}, r.arm_p, {true, true, true}};
  a.noise = {1.5, r.noise_p};
  return a;
}

/// The reduced protocol used for final training runs: shear, elbow rotation
/// and noise only, at the preset's intensity.
inline AugmentationParams release_params(Preset p) {
  AugmentationParams a = preset_params(p);
  a.rotate.prob = 0.0;
  a.perspective.prob = 0.0;
  a.arm_rotate.joints = {false, true, false};
  return a;
}

// ---------------------------------------------------------------------------
// Individual augmentations. Rotation, shear and perspective share a single
// pivot/box for the whole clip, computed over all frames' body keypoints.

inline Clip rotate_clip(const Clip& clip, double degrees) {
  require_state(clip, CoordinateState::RawCrop, "rotate_clip");
  const auto pivot = clip_body_bounding_box(clip).center();
  return transform_clip(clip, Affine2D::rotation(pivot, degrees));
}

inline Clip shear_clip(const Clip& clip, double degrees_x, double degrees_y) {
  require_state(clip, CoordinateState::RawCrop, "shear_clip");
  const auto pivot = clip_body_bounding_box(clip).center();
  return transform_clip(clip, Affine2D::shear(pivot, degrees_x, degrees_y));
}

/// Target quad for a perspective warp: the two corners of the chosen side
/// move towards each other by portion * side / 2 each (outwards when the
/// portion is negative).
inline std::array<Keypoint2D, 4> perspective_quad(const Box& b, double portion, SidePair pair, SideChoice which) {
  auto q = box_corners(b);  // TL, TR, BR, BL
  const double dx = 0.5 * portion * b.width();
  const double dy = 0.5 * portion * b.height();
  if (pair == SidePair::TopBottom) {
    auto& l = which == SideChoice::First ? q[0] : q[3];
    auto& r = which == SideChoice::First ? q[1] : q[2];
    l.x += dx;
    r.x -= dx;
  } else {
    auto& t = which == SideChoice::First ? q[0] : q[1];
    auto& bt = which == SideChoice::First ? q[3] : q[2];
    t.y += dy;
    bt.y -= dy;
  }
  return q;
}

inline Homography perspective_homography(const Box& b, double portion, SidePair pair, SideChoice which) {
  if (!(portion > -1.0 && portion < 1.0)) throw Error(Errc::InvalidArgument, "perspective portion must lie in (-1, 1)");
  return Homography::box_to_quad(b, perspective_quad(b, portion, pair, which));
}

inline Clip perspective_clip(const Clip& clip, double portion, SidePair pair, SideChoice which) {
  require_state(clip, CoordinateState::RawCrop, "perspective_clip");
  const Box b = clip_body_bounding_box(clip);
  return transform_clip(clip, perspective_homography(b, portion, pair, which));
}

inline std::size_t arm_joint_index(ArmSide side, ArmJoint joint) noexcept {
  using namespace layout;
  switch (joint) {
    case ArmJoint::Shoulder: return side == ArmSide::Left ? kLeftShoulder : kRightShoulder;
    case ArmJoint::Elbow: return side == ArmSide::Left ? kLeftElbow : kRightElbow;
    case ArmJoint::Wrist: return side == ArmSide::Left ? kLeftWrist : kRightWrist;
  }
  return 0;
}

/// Keypoints carried along when the arm turns about `joint`: everything
/// distal to it, i.e. the lower joints, the coarse body-model hand points
/// and the whole hand block of that side.
inline std::vector<std::size_t> arm_distal_subset(ArmSide side, ArmJoint joint) {
  std::vector<std::size_t> out;
  if (joint == ArmJoint::Shoulder) out.push_back(arm_joint_index(side, ArmJoint::Elbow));
  if (joint != ArmJoint::Wrist) out.push_back(arm_joint_index(side, ArmJoint::Wrist));
  const auto& coarse = side == ArmSide::Left ? layout::kLeftBodyHandPoints : layout::kRightBodyHandPoints;
  out.insert(out.end(), coarse.begin(), coarse.end());
  const auto hand = layout::group_range(side == ArmSide::Left ? layout::Group::LeftHand : layout::Group::RightHand);
  for (std::size_t i = hand.begin; i < hand.end; ++i) out.push_back(i);
  return out;
}

/// Per frame, rotates the distal subset about that frame's joint. Frames in
/// which the joint is missing are left alone.
inline Clip rotate_arm(const Clip& clip, ArmSide side, ArmJoint joint, double degrees) {
  require_state(clip, CoordinateState::RawCrop, "rotate_arm");
  const auto pivot_index = arm_joint_index(side, joint);
  const auto subset = arm_distal_subset(side, joint);
  auto frames = clip.frames();
  for (auto& f : frames) {
    const auto pivot = f.keypoints[pivot_index];
    if (pivot.is_missing()) continue;
    const auto rot = Affine2D::rotation(pivot, degrees);
    for (auto i : subset)
      if (f.keypoints[i].is_present()) f.keypoints[i] = rot(f.keypoints[i]);
  }
  return clip.with_frames(std::move(frames), clip.state());
}

/// Independent N(0, stddev^2) on each coordinate of each present keypoint.
inline Clip add_noise(const Clip& clip, double stddev, CounterRng& rng) {
  if (!(stddev >= 0.0)) throw Error(Errc::InvalidStddev, "noise stddev must be >= 0");
  require_state(clip, CoordinateState::RawCrop, "add_noise");
  if (stddev == 0.0) return clip;
  auto frames = clip.frames();
  for (auto& f : frames)
    for (auto& p : f.keypoints)
      if (p.is_present()) {
        const double nx = rng.normal();
        const double ny = rng.normal();
        p = {p.x + stddev * nx, p.y + stddev * ny};
      }
  return clip.with_frames(std::move(frames), clip.state());
}

// ---------------------------------------------------------------------------
// Protocol sampling and application.

/// Everything that was drawn for one clip, in application order.
struct AugmentationRecord {
  struct Shear {
    ShearAxis axis;
    double degrees;
  };
  struct Perspective {
    SidePair pair;
    SideChoice which;
    double portion;
  };
  struct Arm {
    ArmSide side;
    ArmJoint joint;
    double degrees;
  };

  std::optional<double> rotate;
  std::optional<Shear> shear;
  std::optional<Perspective> perspective;
  std::vector<Arm> arms;
  bool noise = false;
};

/// Draws the clip-level transform parameters in the fixed order rotate,
/// shear, perspective, arms (left then right; shoulder, elbow, wrist), and
/// the noise decision.
inline AugmentationRecord sample_protocol(const AugmentationParams& params, CounterRng& rng) {
  AugmentationRecord rec;
  if (rng.bernoulli(params.rotate.prob)) rec.rotate = rng.uniform(params.rotate.angle.low, params.rotate.angle.high);
  if (rng.bernoulli(params.shear.prob)) {
    const auto axis = rng.uniform() < 0.5 ? ShearAxis::X : ShearAxis::Y;
    const auto& r = axis == ShearAxis::X ? params.shear.angle_x : params.shear.angle_y;
    rec.shear = AugmentationRecord::Shear{axis, rng.uniform(r.low, r.high)};
  }
  if (rng.bernoulli(params.perspective.prob)) {
    const auto pair = rng.uniform() < 0.5 ? SidePair::TopBottom : SidePair::LeftRight;
    const auto which = rng.uniform() < 0.5 ? SideChoice::First : SideChoice::Second;
    rec.perspective =
        AugmentationRecord::Perspective{pair, which, rng.uniform(params.perspective.portion.low, params.perspective.portion.high)};
  }
  for (auto side : {ArmSide::Left, ArmSide::Right})
    for (auto joint : {ArmJoint::Shoulder, ArmJoint::Elbow, ArmJoint::Wrist}) {
      if (!params.arm_rotate.enabled(joint)) continue;
      if (rng.bernoulli(params.arm_rotate.prob)) {
        const auto& r = params.arm_rotate.range(joint);
        rec.arms.push_back({side, joint, rng.uniform(r.low, r.high)});
      }
    }
  rec.noise = rng.bernoulli(params.noise.prob);
  return rec;
}

/// Applies a sampled record. Each step sees the output of the previous one,
/// so arm rotations chain (shoulder, then elbow, then wrist).
inline Clip apply_record(const Clip& clip, const AugmentationRecord& rec, double noise_stddev, CounterRng& rng) {
  Clip out = clip;
  if (rec.rotate) out = rotate_clip(out, *rec.rotate);
  if (rec.shear) {
    const double d = rec.shear->degrees;
    out = rec.shear->axis == ShearAxis::X ? shear_clip(out, d, 0.0) : shear_clip(out, 0.0, d);
  }
  if (rec.perspective) out = perspective_clip(out, rec.perspective->portion, rec.perspective->pair, rec.perspective->which);
  for (const auto& a : rec.arms) out = rotate_arm(out, a.side, a.joint, a.degrees);
  if (rec.noise) out = add_noise(out, noise_stddev, rng);
  return out;
}

struct AugmentedClip {
  Clip clip;
  AugmentationRecord record;
};

/// Deterministic in (clip.id, seed): the generator is keyed per clip.
inline AugmentedClip apply_protocol(const Clip& clip, const AugmentationParams& params, std::uint64_t seed) {
  require_state(clip, CoordinateState::RawCrop, "apply_protocol");
  params.validate();
  auto rng = CounterRng::for_clip(clip.id(), seed);
  auto rec = sample_protocol(params, rng);
  auto out = apply_record(clip, rec, params.noise.stddev, rng);
  return {std::move(out), std::move(rec)};
}

}  // namespace poseprep
