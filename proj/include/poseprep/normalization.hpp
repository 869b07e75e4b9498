#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "poseprep/pose.hpp"
#include "poseprep/signing_space.hpp"

namespace poseprep {

enum class NormalizationMethod { None, YaslClip, YaslFrame, SignSpace };

constexpr std::string_view to_string(NormalizationMethod m) noexcept {
  switch (m) {
    case NormalizationMethod::None: return "none";
    case NormalizationMethod::YaslClip: return "yasl-clip";
    case NormalizationMethod::YaslFrame: return "yasl-frame";
    case NormalizationMethod::SignSpace: return "signspace";
  }
  return "unknown";
}

inline NormalizationMethod parse_normalization_method(std::string_view s) {
  if (s == "none") return NormalizationMethod::None;
  if (s == "yasl-clip" || s == "yasl_c") return NormalizationMethod::YaslClip;
  if (s == "yasl-frame" || s == "yasl_f") return NormalizationMethod::YaslFrame;
  if (s == "signspace") return NormalizationMethod::SignSpace;
  throw Error(Errc::InvalidArgument, "unknown normalization method '" + std::string(s) + "'");
}

/// Per-axis affine map p -> (p - origin) * scale + offset.
struct AxisMap {
  double origin = 0.0;
  double scale = 1.0;
  double offset = 0.0;
  double operator()(double v) const noexcept { return (v - origin) * scale + offset; }
};

struct PlaneMap {
  AxisMap x, y;
  Keypoint2D operator()(const Keypoint2D& p) const noexcept {
    return p.is_missing() ? p : Keypoint2D{x(p.x), y(p.y)};
  }
};

/// Anisotropic map of a box onto [0,1]^2. A zero-extent axis collapses to 0.5.
inline PlaneMap unit_box_map(const Box& b) noexcept {
  auto axis = [](double lo, double hi) {
    const double extent = hi - lo;
    return extent > 0.0 ? AxisMap{lo, 1.0 / extent, 0.0} : AxisMap{lo, 0.0, 0.5};
  };
  return {axis(b.min_x, b.max_x), axis(b.min_y, b.max_y)};
}

/// Uniform map of a square signing space onto [-1,1]^2 with its centre at 0.
inline PlaneMap signing_space_map(const SigningSpace& s) noexcept {
  const double k = 2.0 / s.side_length;
  return {{s.center.x, k, 0.0}, {s.center.y, k, 0.0}};
}

inline constexpr double kLocalBorder = 0.1;

/// Local map for a hand or face: pad the group box by 10% of its own width on
/// the left and right and 10% of its height on the top and bottom, then scale
/// uniformly so the longer padded side spans [-1,1]. A fully degenerate box
/// maps everything to the origin.
inline PlaneMap local_group_map(const Box& b) noexcept {
  const double w = b.width() * (1.0 + 2.0 * kLocalBorder);
  const double h = b.height() * (1.0 + 2.0 * kLocalBorder);
  const double longest = std::max(w, h);
  const double k = longest > 0.0 ? 2.0 / longest : 0.0;
  const auto c = b.center();
  return {{c.x, k, 0.0}, {c.y, k, 0.0}};
}

namespace detail {

inline void apply_map(PoseFrame& f, const PlaneMap& m, layout::IndexRange r) noexcept {
  for (std::size_t i = r.begin; i < r.end; ++i) f.keypoints[i] = m(f.keypoints[i]);
}

inline Box present_box(const PoseFrame& f, layout::IndexRange r) noexcept {
  Box b;
  for (std::size_t i = r.begin; i < r.end; ++i)
    if (f.keypoints[i].is_present()) b.extend(f.keypoints[i]);
  return b;
}

inline constexpr layout::IndexRange kAll{0, layout::kKeypointCount};

}  // namespace detail

/// yasl_c: one unit box over every present keypoint of the clip.
inline Clip normalize_yasl_clip(const Clip& clip) {
  require_state(clip, CoordinateState::RawCrop, "normalize_yasl_clip");
  Box box;
  for (const auto& f : clip.frames()) {
    const Box fb = detail::present_box(f, detail::kAll);
    if (!fb.empty()) {
      box.extend({fb.min_x, fb.min_y});
      box.extend({fb.max_x, fb.max_y});
    }
  }
  if (box.empty()) throw Error(Errc::EmptyClipGeometry, "clip '" + clip.id() + "' has no present keypoints");
  const auto map = unit_box_map(box);
  auto frames = clip.frames();
  for (auto& f : frames) detail::apply_map(f, map, detail::kAll);
  return clip.with_frames(std::move(frames), CoordinateState::Normalized);
}

/// yasl_f: a unit box per frame. Frames with nothing present pass through.
inline Clip normalize_yasl_frame(const Clip& clip) {
  require_state(clip, CoordinateState::RawCrop, "normalize_yasl_frame");
  auto frames = clip.frames();
  bool any = false;
  for (auto& f : frames) {
    const Box fb = detail::present_box(f, detail::kAll);
    if (fb.empty()) continue;
    any = true;
    detail::apply_map(f, unit_box_map(fb), detail::kAll);
  }
  if (!any) throw Error(Errc::EmptyClipGeometry, "clip '" + clip.id() + "' has no present keypoints");
  return clip.with_frames(std::move(frames), CoordinateState::Normalized);
}

/// Global signing-space normalization for the body (3x shoulder distance)
/// and local aspect-preserving normalization for each hand and the face.
/// Frames without usable shoulders reuse the last valid space, or the first
/// valid one when none precedes them.
inline Clip normalize_sign_space(const Clip& clip) {
  require_state(clip, CoordinateState::RawCrop, "normalize_sign_space");
  const auto& in = clip.frames();
  std::vector<std::optional<SigningSpace>> spaces(in.size());
  std::optional<SigningSpace> first;
  for (std::size_t t = 0; t < in.size(); ++t) {
    spaces[t] = try_signing_space(in[t], kNormalizationMultiplier);
    if (!first && spaces[t]) first = spaces[t];
  }
  if (!first) throw Error(Errc::NoValidSigningSpace, "clip '" + clip.id() + "'");

  auto frames = in;
  SigningSpace current = *first;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (spaces[t]) current = *spaces[t];
    auto& f = frames[t];
    detail::apply_map(f, signing_space_map(current), layout::group_range(layout::Group::Body));
    for (auto g : {layout::Group::LeftHand, layout::Group::RightHand, layout::Group::Face}) {
      const auto r = layout::group_range(g);
      const Box b = detail::present_box(f, r);
      if (!b.empty()) detail::apply_map(f, local_group_map(b), r);
    }
  }
  return clip.with_frames(std::move(frames), CoordinateState::Normalized);
}

inline Clip normalize(const Clip& clip, NormalizationMethod method) {
  switch (method) {
    case NormalizationMethod::None:
      require_state(clip, CoordinateState::RawCrop, "normalize");
      return clip.with_frames(clip.frames(), CoordinateState::Normalized);
    case NormalizationMethod::YaslClip: return normalize_yasl_clip(clip);
    case NormalizationMethod::YaslFrame: return normalize_yasl_frame(clip);
    case NormalizationMethod::SignSpace: return normalize_sign_space(clip);
  }
  throw Error(Errc::InvalidArgument, "unknown normalization method");
}

}  // namespace poseprep
