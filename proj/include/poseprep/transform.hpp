#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <numbers>

#include "poseprep/pose.hpp"

namespace poseprep {

template <typename T>
concept PointTransform = requires(const T& t, const Keypoint2D& p) {
  { t(p) } -> std::same_as<Keypoint2D>;
};

inline double deg_to_rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }

/// x' = a x + b y + tx, y' = c x + d y + ty.
struct Affine2D {
  double a = 1, b = 0, tx = 0;
  double c = 0, d = 1, ty = 0;

  Keypoint2D operator()(const Keypoint2D& p) const noexcept {
    return {a * p.x + b * p.y + tx, c * p.x + d * p.y + ty};
  }

  /// Linear part M applied about a fixed pivot: p' = pivot + M (p - pivot).
  static Affine2D about(const Keypoint2D& pivot, double a, double b, double c, double d) noexcept {
    return {a, b, pivot.x - a * pivot.x - b * pivot.y, c, d, pivot.y - c * pivot.x - d * pivot.y};
  }

  /// Positive angles turn clockwise on screen (y grows downward), so +90
  /// degrees sends pivot + (1, 0) to pivot + (0, 1).
  static Affine2D rotation(const Keypoint2D& pivot, double degrees) noexcept {
    const double r = deg_to_rad(degrees);
    const double cs = std::cos(r), sn = std::sin(r);
    return about(pivot, cs, -sn, sn, cs);
  }

  /// [[1, tan(ax)], [tan(ay), 1]] about the pivot.
  static Affine2D shear(const Keypoint2D& pivot, double degrees_x, double degrees_y) noexcept {
    return about(pivot, 1.0, std::tan(deg_to_rad(degrees_x)), std::tan(deg_to_rad(degrees_y)), 1.0);
  }

  double determinant() const noexcept { return a * d - b * c; }

  Affine2D inverse() const {
    const double det = determinant();
    if (det == 0.0) throw Error(Errc::InvalidArgument, "affine transform is singular");
    const double ia = d / det, ib = -b / det, ic = -c / det, id = a / det;
    return {ia, ib, -(ia * tx + ib * ty), ic, id, -(ic * tx + id * ty)};
  }
};

/// Projective map in row-major 3x3 form with h[8] normalised to 1.
struct Homography {
  std::array<double, 9> h{1, 0, 0, 0, 1, 0, 0, 0, 1};

  Keypoint2D operator()(const Keypoint2D& p) const noexcept {
    const double w = h[6] * p.x + h[7] * p.y + h[8];
    return {(h[0] * p.x + h[1] * p.y + h[2]) / w, (h[3] * p.x + h[4] * p.y + h[5]) / w};
  }

  friend Homography operator*(const Homography& l, const Homography& r) noexcept {
    Homography out;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += l.h[3 * i + k] * r.h[3 * k + j];
        out.h[3 * i + j] = s;
      }
    return out.normalized();
  }

  Homography normalized() const noexcept {
    Homography out = *this;
    if (h[8] != 0.0)
      for (auto& v : out.h) v /= h[8];
    return out;
  }

  Homography inverse() const {
    const auto& m = h;
    const double c00 = m[4] * m[8] - m[5] * m[7];
    const double c01 = m[5] * m[6] - m[3] * m[8];
    const double c02 = m[3] * m[7] - m[4] * m[6];
    const double det = m[0] * c00 + m[1] * c01 + m[2] * c02;
    if (det == 0.0) throw Error(Errc::InvalidArgument, "homography is singular");
    Homography inv;
    inv.h = {c00 / det,
             (m[2] * m[7] - m[1] * m[8]) / det,
             (m[1] * m[5] - m[2] * m[4]) / det,
             c01 / det,
             (m[0] * m[8] - m[2] * m[6]) / det,
             (m[2] * m[3] - m[0] * m[5]) / det,
             c02 / det,
             (m[1] * m[6] - m[0] * m[7]) / det,
             (m[0] * m[4] - m[1] * m[3]) / det};
    return inv.normalized();
  }

  /// Closed-form map of the unit square (0,0),(1,0),(1,1),(0,1) onto the
  /// quad q[0..3] given in the same order.
  static Homography unit_square_to_quad(const std::array<Keypoint2D, 4>& q) {
    const double sx = q[0].x - q[1].x + q[2].x - q[3].x;
    const double sy = q[0].y - q[1].y + q[2].y - q[3].y;
    double g = 0.0, hh = 0.0;
    if (sx != 0.0 || sy != 0.0) {
      const double dx1 = q[1].x - q[2].x, dx2 = q[3].x - q[2].x;
      const double dy1 = q[1].y - q[2].y, dy2 = q[3].y - q[2].y;
      const double den = dx1 * dy2 - dx2 * dy1;
      if (den == 0.0) throw Error(Errc::DegenerateBox, "target quad is degenerate");
      g = (sx * dy2 - dx2 * sy) / den;
      hh = (dx1 * sy - sx * dy1) / den;
    }
    Homography out;
    out.h = {q[1].x - q[0].x + g * q[1].x, q[3].x - q[0].x + hh * q[3].x, q[0].x,
             q[1].y - q[0].y + g * q[1].y, q[3].y - q[0].y + hh * q[3].y, q[0].y,
             g,                            hh,                            1.0};
    return out;
  }

  /// Map sending the corners of `box` (TL, TR, BR, BL) onto `quad`.
  static Homography box_to_quad(const Box& box, const std::array<Keypoint2D, 4>& quad) {
    const double w = box.width(), ht = box.height();
    if (!(w > 0.0) || !(ht > 0.0)) throw Error(Errc::DegenerateBox, "box has zero area");
    Homography to_unit;
    to_unit.h = {1.0 / w, 0, -box.min_x / w, 0, 1.0 / ht, -box.min_y / ht, 0, 0, 1};
    return unit_square_to_quad(quad) * to_unit;
  }
};

static_assert(PointTransform<Affine2D>);
static_assert(PointTransform<Homography>);

inline std::array<Keypoint2D, 4> box_corners(const Box& b) noexcept {
  return {{{b.min_x, b.min_y}, {b.max_x, b.min_y}, {b.max_x, b.max_y}, {b.min_x, b.max_y}}};
}

/// Applies `t` to every present keypoint of every frame, keeping the state.
template <PointTransform T>
Clip transform_clip(const Clip& clip, const T& t) {
  auto frames = clip.frames();
  for (auto& f : frames)
    for (auto& p : f.keypoints)
      if (p.is_present()) p = t(p);
  return clip.with_frames(std::move(frames), clip.state());
}

}  // namespace poseprep
