#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "poseprep/detail/median.hpp"
#include "poseprep/pose.hpp"

namespace poseprep {

inline constexpr double kCropMultiplier = 4.0;
inline constexpr double kNormalizationMultiplier = 3.0;
inline constexpr double kShoulderTolerance = 1e-6;

/// Square region centred between the shoulders.
struct SigningSpace {
  Keypoint2D center;
  double side_length = 0.0;
  double multiplier = kCropMultiplier;

  Box box() const noexcept {
    const double h = 0.5 * side_length;
    return {center.x - h, center.y - h, center.x + h, center.y + h};
  }
};

inline SigningSpace compute_signing_space(const PoseFrame& frame, double multiplier) {
  if (!(multiplier > 0.0)) throw Error(Errc::InvalidArgument, "signing-space multiplier must be positive");
  const auto& l = frame.keypoints[layout::kLeftShoulder];
  const auto& r = frame.keypoints[layout::kRightShoulder];
  if (l.is_missing() || r.is_missing())
    throw Error(Errc::ShouldersMissing, "frame " + std::to_string(frame.frame_index));
  const double dist = std::hypot(l.x - r.x, l.y - r.y);
  if (dist < kShoulderTolerance)
    throw Error(Errc::DegenerateShoulders, "frame " + std::to_string(frame.frame_index));
  return {{0.5 * (l.x + r.x), 0.5 * (l.y + r.y)}, multiplier * dist, multiplier};
}

/// Non-throwing variant used where frames without shoulders are expected.
inline std::optional<SigningSpace> try_signing_space(const PoseFrame& frame, double multiplier) noexcept {
  const auto& l = frame.keypoints[layout::kLeftShoulder];
  const auto& r = frame.keypoints[layout::kRightShoulder];
  if (l.is_missing() || r.is_missing() || !(multiplier > 0.0)) return std::nullopt;
  const double dist = std::hypot(l.x - r.x, l.y - r.y);
  if (dist < kShoulderTolerance) return std::nullopt;
  return SigningSpace{{0.5 * (l.x + r.x), 0.5 * (l.y + r.y)}, multiplier * dist, multiplier};
}

/// One crop region for the whole clip: median of the per-frame centres and
/// the largest per-frame side, so the signer keeps a constant size. Frames
/// without usable shoulders simply share the result.
inline SigningSpace clip_crop_space(const Clip& clip, double multiplier = kCropMultiplier) {
  std::vector<double> cx, cy;
  double side = 0.0;
  for (const auto& f : clip.frames()) {
    if (auto s = try_signing_space(f, multiplier)) {
      cx.push_back(s->center.x);
      cy.push_back(s->center.y);
      side = std::max(side, s->side_length);
    }
  }
  if (cx.empty()) throw Error(Errc::NoValidFrame, "clip '" + clip.id() + "' has no frame with usable shoulders");
  return {{detail::median(std::move(cx)), detail::median(std::move(cy))}, side, multiplier};
}

/// Maps the space's box onto [0, out_size]^2. Points outside the box are
/// kept and may land outside the output square.
inline PoseFrame to_crop_coordinates(const SigningSpace& space, const PoseFrame& frame, double out_size) {
  if (!(space.side_length > 0.0)) throw Error(Errc::InvalidArgument, "signing space has non-positive side");
  const Box b = space.box();
  const double s = out_size / space.side_length;
  PoseFrame out = frame;
  for (auto& p : out.keypoints)
    if (p.is_present()) p = {(p.x - b.min_x) * s, (p.y - b.min_y) * s};
  return out;
}

inline PoseFrame from_crop_coordinates(const SigningSpace& space, const PoseFrame& frame, double out_size) {
  if (!(space.side_length > 0.0)) throw Error(Errc::InvalidArgument, "signing space has non-positive side");
  const Box b = space.box();
  const double s = space.side_length / out_size;
  PoseFrame out = frame;
  for (auto& p : out.keypoints)
    if (p.is_present()) p = {p.x * s + b.min_x, p.y * s + b.min_y};
  return out;
}

/// Crops every frame of a clip with its clip-level space.
inline Clip crop_clip(const Clip& clip, double out_size, double multiplier = kCropMultiplier) {
  require_state(clip, CoordinateState::RawCrop, "crop_clip");
  const auto space = clip_crop_space(clip, multiplier);
  std::vector<PoseFrame> frames;
  frames.reserve(clip.size());
  for (const auto& f : clip.frames()) frames.push_back(to_crop_coordinates(space, f, out_size));
  return clip.with_frames(std::move(frames), CoordinateState::RawCrop);
}

}  // namespace poseprep
