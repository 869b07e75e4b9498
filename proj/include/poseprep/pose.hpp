#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poseprep/error.hpp"

namespace poseprep {

// Keypoint layout: body, left hand, right hand, face. Body indices follow the
// upper 25 landmarks of the holistic body model (legs dropped).
namespace layout {

inline constexpr std::size_t kBodyCount = 25;
inline constexpr std::size_t kLeftHandCount = 21;
inline constexpr std::size_t kRightHandCount = 21;
inline constexpr std::size_t kFaceCount = 37;
inline constexpr std::size_t kKeypointCount = kBodyCount + kLeftHandCount + kRightHandCount + kFaceCount;
inline constexpr std::size_t kFeatureDim = 2 * kKeypointCount;

inline constexpr std::size_t kLeftShoulder = 11;
inline constexpr std::size_t kRightShoulder = 12;
inline constexpr std::size_t kLeftElbow = 13;
inline constexpr std::size_t kRightElbow = 14;
inline constexpr std::size_t kLeftWrist = 15;
inline constexpr std::size_t kRightWrist = 16;
// Coarse hand points the body model emits next to each wrist.
inline constexpr std::array<std::size_t, 3> kLeftBodyHandPoints{17, 19, 21};
inline constexpr std::array<std::size_t, 3> kRightBodyHandPoints{18, 20, 22};

enum class Group { Body, LeftHand, RightHand, Face };

inline constexpr std::array<Group, 4> kGroups{Group::Body, Group::LeftHand, Group::RightHand, Group::Face};

struct IndexRange {
  std::size_t begin;
  std::size_t end;  // exclusive
  constexpr std::size_t size() const noexcept { return end - begin; }
  constexpr bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
};

constexpr IndexRange group_range(Group g) noexcept {
  switch (g) {
    case Group::Body: return {0, kBodyCount};
    case Group::LeftHand: return {kBodyCount, kBodyCount + kLeftHandCount};
    case Group::RightHand: return {kBodyCount + kLeftHandCount, kBodyCount + kLeftHandCount + kRightHandCount};
    case Group::Face: return {kBodyCount + kLeftHandCount + kRightHandCount, kKeypointCount};
  }
  return {0, 0};
}

constexpr Group group_of(std::size_t keypoint) noexcept {
  if (keypoint < kBodyCount) return Group::Body;
  if (keypoint < group_range(Group::LeftHand).end) return Group::LeftHand;
  if (keypoint < group_range(Group::RightHand).end) return Group::RightHand;
  return Group::Face;
}

// Hands and face are detected all-or-nothing; body points go missing one by one.
constexpr bool is_atomic(Group g) noexcept { return g != Group::Body; }

static_assert(kKeypointCount == 104);
static_assert(kFeatureDim == 208);
static_assert(kLeftShoulder < kBodyCount && kRightShoulder < kBodyCount && kLeftElbow < kBodyCount &&
              kRightElbow < kBodyCount && kLeftWrist < kBodyCount && kRightWrist < kBodyCount);

}  // namespace layout

struct Keypoint2D {
  double x = std::numeric_limits<double>::quiet_NaN();
  double y = std::numeric_limits<double>::quiet_NaN();

  static constexpr Keypoint2D missing() noexcept { return {}; }

  bool is_missing() const noexcept { return std::isnan(x); }
  bool is_present() const noexcept { return !std::isnan(x); }

  friend bool operator==(const Keypoint2D& a, const Keypoint2D& b) noexcept {
    if (a.is_missing() || b.is_missing()) return a.is_missing() && b.is_missing();
    return a.x == b.x && a.y == b.y;
  }
};

/// Axis-aligned box, closed on both ends.
struct Box {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  bool empty() const noexcept { return min_x > max_x || min_y > max_y; }
  double width() const noexcept { return max_x - min_x; }
  double height() const noexcept { return max_y - min_y; }
  Keypoint2D center() const noexcept { return {0.5 * (min_x + max_x), 0.5 * (min_y + max_y)}; }

  void extend(const Keypoint2D& p) noexcept {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }

  friend bool operator==(const Box&, const Box&) = default;
};

struct PoseFrame {
  std::array<Keypoint2D, layout::kKeypointCount> keypoints{};
  std::size_t frame_index = 0;

  std::span<const Keypoint2D> group(layout::Group g) const noexcept {
    const auto r = layout::group_range(g);
    return std::span<const Keypoint2D>(keypoints).subspan(r.begin, r.size());
  }
  std::span<Keypoint2D> group(layout::Group g) noexcept {
    const auto r = layout::group_range(g);
    return std::span<Keypoint2D>(keypoints).subspan(r.begin, r.size());
  }

  bool group_present(layout::Group g) const noexcept {
    const auto pts = group(g);
    return std::all_of(pts.begin(), pts.end(), [](const Keypoint2D& k) { return k.is_present(); });
  }

  friend bool operator==(const PoseFrame&, const PoseFrame&) = default;
};

enum class CoordinateState : unsigned char { RawCrop = 0, Normalized = 1, Featurized = 2 };

constexpr std::string_view to_string(CoordinateState s) noexcept {
  switch (s) {
    case CoordinateState::RawCrop: return "RawCrop";
    case CoordinateState::Normalized: return "Normalized";
    case CoordinateState::Featurized: return "Featurized";
  }
  return "Unknown";
}

/// Checks a single frame against the keypoint invariants; returns an empty
/// string when valid, otherwise a description of the first violation.
inline std::string frame_violation(const PoseFrame& frame) {
  for (std::size_t i = 0; i < layout::kKeypointCount; ++i) {
    const auto& k = frame.keypoints[i];
    const bool nx = std::isnan(k.x), ny = std::isnan(k.y);
    if (nx != ny) return "keypoint " + std::to_string(i) + " is half-missing";
    if (!nx && (!std::isfinite(k.x) || !std::isfinite(k.y)))
      return "keypoint " + std::to_string(i) + " is not finite";
  }
  for (auto g : layout::kGroups) {
    if (!layout::is_atomic(g)) continue;
    const auto pts = frame.group(g);
    const auto present = std::count_if(pts.begin(), pts.end(), [](const Keypoint2D& k) { return k.is_present(); });
    if (present != 0 && static_cast<std::size_t>(present) != pts.size())
      return "partially missing hand/face group starting at keypoint " +
             std::to_string(layout::group_range(g).begin);
  }
  return {};
}

/// Ordered pose sequence for one caption-aligned segment. Construction
/// validates every invariant; derived clips are produced with `with_frames`,
/// which only allows the coordinate state to move forward.
class Clip {
 public:
  Clip(std::string id, double fps, std::vector<PoseFrame> frames, std::optional<std::string> caption = std::nullopt,
       CoordinateState state = CoordinateState::RawCrop)
      : id_(std::move(id)), fps_(fps), frames_(std::move(frames)), caption_(std::move(caption)), state_(state) {
    if (!(fps_ > 0.0) || !std::isfinite(fps_)) throw Error(Errc::InvalidArgument, "clip fps must be positive");
    if (frames_.empty()) throw Error(Errc::InvalidArgument, "clip '" + id_ + "' has no frames");
    for (std::size_t t = 0; t < frames_.size(); ++t) {
      if (frames_[t].frame_index != t)
        throw Error(Errc::InvalidArgument, "frame indices must be contiguous from 0 (frame " + std::to_string(t) + ")");
      if (auto v = frame_violation(frames_[t]); !v.empty())
        throw Error(Errc::InvalidArgument, "frame " + std::to_string(t) + ": " + v);
    }
  }

  const std::string& id() const noexcept { return id_; }
  double fps() const noexcept { return fps_; }
  const std::vector<PoseFrame>& frames() const noexcept { return frames_; }
  std::size_t size() const noexcept { return frames_.size(); }
  const std::optional<std::string>& caption() const noexcept { return caption_; }
  CoordinateState state() const noexcept { return state_; }

  Clip with_frames(std::vector<PoseFrame> frames, CoordinateState next) const& {
    check_transition(next);
    return Clip(id_, fps_, std::move(frames), caption_, next);
  }
  Clip with_frames(std::vector<PoseFrame> frames, CoordinateState next) && {
    check_transition(next);
    return Clip(std::move(id_), fps_, std::move(frames), std::move(caption_), next);
  }

  /// Bypasses the forward-only state machine. Meant for tests and tools that
  /// need to re-run a stage on already processed data.
  Clip with_state_unchecked(CoordinateState s) const {
    Clip c = *this;
    c.state_ = s;
    return c;
  }

  friend bool operator==(const Clip&, const Clip&) = default;

 private:
  void check_transition(CoordinateState next) const {
    if (static_cast<int>(next) < static_cast<int>(state_))
      throw Error(Errc::InvalidState, std::string("cannot move clip from ") + std::string(to_string(state_)) +
                                          " back to " + std::string(to_string(next)));
  }

  std::string id_;
  double fps_;
  std::vector<PoseFrame> frames_;
  std::optional<std::string> caption_;
  CoordinateState state_;
};

inline void require_state(const Clip& clip, CoordinateState expected, std::string_view op) {
  if (clip.state() != expected)
    throw Error(Errc::InvalidState, std::string(op) + " expects a " + std::string(to_string(expected)) +
                                        " clip, got " + std::string(to_string(clip.state())));
}

using FeatureVector = std::array<double, layout::kFeatureDim>;

/// Interleaved (x, y) per keypoint in layout order; missing keypoints become
/// (sentinel, sentinel).
inline FeatureVector flatten_frame(const PoseFrame& frame, double sentinel) noexcept {
  FeatureVector out;
  for (std::size_t k = 0; k < layout::kKeypointCount; ++k) {
    const auto& p = frame.keypoints[k];
    const bool miss = p.is_missing();
    out[2 * k] = miss ? sentinel : p.x;
    out[2 * k + 1] = miss ? sentinel : p.y;
  }
  return out;
}

/// Inverse of flatten_frame. A keypoint whose two coordinates both equal the
/// sentinel is read back as missing.
inline PoseFrame unflatten_frame(std::span<const double, layout::kFeatureDim> features, double sentinel,
                                 std::size_t frame_index = 0) noexcept {
  PoseFrame frame;
  frame.frame_index = frame_index;
  for (std::size_t k = 0; k < layout::kKeypointCount; ++k) {
    const double x = features[2 * k], y = features[2 * k + 1];
    frame.keypoints[k] = (x == sentinel && y == sentinel) ? Keypoint2D::missing() : Keypoint2D{x, y};
  }
  return frame;
}

/// Minimal box around the present body keypoints.
inline Box body_bounding_box(const PoseFrame& frame) {
  Box box;
  for (const auto& p : frame.group(layout::Group::Body))
    if (p.is_present()) box.extend(p);
  if (box.empty()) throw Error(Errc::AllBodyMissing, "frame " + std::to_string(frame.frame_index));
  return box;
}

/// Body box over every frame of the clip; the shared pivot for clip-level
/// augmentations.
inline Box clip_body_bounding_box(const Clip& clip) {
  Box box;
  for (const auto& f : clip.frames())
    for (const auto& p : f.group(layout::Group::Body))
      if (p.is_present()) box.extend(p);
  if (box.empty()) throw Error(Errc::AllBodyMissing, "clip '" + clip.id() + "' has no body keypoints");
  return box;
}

}  // namespace poseprep
