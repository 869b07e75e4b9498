#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <string_view>

#define TOML_EXCEPTIONS 1
#include <toml++/toml.hpp>

#include "poseprep/augmentation.hpp"

namespace poseprep {

// TOML form of AugmentationParams. Ranges are [low, high] arrays,
// probabilities plain floats:
//
//   [rotate]      angle = [-6.0, 6.0]   prob = 1.0
//   [shear]       angle_x = [...]  angle_y = [...]  prob = 0.75
//   [perspective] portion = [-0.15, 0.15]  prob = 0.5
//   [arm_rotate]  shoulder = [...] elbow = [...] wrist = [...] prob = 0.75
//                 joints = ["shoulder", "elbow", "wrist"]   # optional
//   [noise]       stddev = 1.5  prob = 0.75
//
// Missing tables leave that augmentation disabled (prob 0).

namespace detail {

inline double toml_number(const toml::node_view<const toml::node>& n, std::string_view what) {
  if (auto v = n.value<double>()) return *v;
  throw Error(Errc::Format, "augmentation params: '" + std::string(what) + "' must be a number");
}

inline Interval toml_interval(const toml::node_view<const toml::node>& n, std::string_view what) {
  const auto* arr = n.as_array();
  if (!arr || arr->size() != 2)
    throw Error(Errc::Format, "augmentation params: '" + std::string(what) + "' must be a [low, high] array");
  auto get = [&](std::size_t i) {
    if (auto v = arr->get(i)->value<double>()) return *v;
    throw Error(Errc::Format, "augmentation params: '" + std::string(what) + "' entries must be numbers");
  };
  return {get(0), get(1)};
}

inline toml::array toml_pair(const Interval& r) { return toml::array{r.low, r.high}; }

}  // namespace detail

inline AugmentationParams parse_augmentation_params(const toml::table& root) {
  using detail::toml_interval;
  using detail::toml_number;
  AugmentationParams p;
  const toml::node_view<const toml::node> t{root};
  if (t["rotate"]) {
    p.rotate.angle = toml_interval(t["rotate"]["angle"], "rotate.angle");
    p.rotate.prob = toml_number(t["rotate"]["prob"], "rotate.prob");
  }
  if (t["shear"]) {
    p.shear.angle_x = toml_interval(t["shear"]["angle_x"], "shear.angle_x");
    p.shear.angle_y = toml_interval(t["shear"]["angle_y"], "shear.angle_y");
    p.shear.prob = toml_number(t["shear"]["prob"], "shear.prob");
  }
  if (t["perspective"]) {
    p.perspective.portion = toml_interval(t["perspective"]["portion"], "perspective.portion");
    p.perspective.prob = toml_number(t["perspective"]["prob"], "perspective.prob");
  }
  if (t["arm_rotate"]) {
    const auto a = t["arm_rotate"];
    p.arm_rotate.shoulder = toml_interval(a["shoulder"], "arm_rotate.shoulder");
    p.arm_rotate.elbow = toml_interval(a["elbow"], "arm_rotate.elbow");
    p.arm_rotate.wrist = toml_interval(a["wrist"], "arm_rotate.wrist");
    p.arm_rotate.prob = toml_number(a["prob"], "arm_rotate.prob");
    if (const auto* joints = a["joints"].as_array()) {
      p.arm_rotate.joints = {false, false, false};
      for (const auto& j : *joints) {
        const auto name = j.value<std::string>().value_or("");
        if (name == "shoulder") p.arm_rotate.joints[0] = true;
        else if (name == "elbow") p.arm_rotate.joints[1] = true;
        else if (name == "wrist") p.arm_rotate.joints[2] = true;
        else throw Error(Errc::Format, "augmentation params: unknown arm joint '" + name + "'");
      }
    }
  }
  if (t["noise"]) {
    p.noise.stddev = toml_number(t["noise"]["stddev"], "noise.stddev");
    p.noise.prob = toml_number(t["noise"]["prob"], "noise.prob");
  }
  p.validate();
  return p;
}

inline AugmentationParams parse_augmentation_params(std::string_view text) {
  try {
    return parse_augmentation_params(toml::parse(text));
  } catch (const toml::parse_error& e) {
    throw Error(Errc::Format, std::string("augmentation params: ") + std::string(e.description()));
  }
}

inline AugmentationParams load_augmentation_params(const std::filesystem::path& path) {
  try {
    return parse_augmentation_params(toml::parse_file(path.string()));
  } catch (const toml::parse_error& e) {
    throw Error(Errc::Format, path.string() + ": " + std::string(e.description()));
  }
}

inline toml::table augmentation_params_to_toml(const AugmentationParams& p) {
  using detail::toml_pair;
  toml::array joints;
  for (auto j : {ArmJoint::Shoulder, ArmJoint::Elbow, ArmJoint::Wrist})
    if (p.arm_rotate.enabled(j)) joints.push_back(std::string(to_string(j)));
  return toml::table{
      {"rotate", toml::table{{"angle", toml_pair(p.rotate.angle)}, {"prob", p.rotate.prob}}},
      {"shear", toml::table{{"angle_x", toml_pair(p.shear.angle_x)},
                            {"angle_y", toml_pair(p.shear.angle_y)},
                            {"prob", p.shear.prob}}},
      {"perspective", toml::table{{"portion", toml_pair(p.perspective.portion)}, {"prob", p.perspective.prob}}},
      {"arm_rotate", toml::table{{"shoulder", toml_pair(p.arm_rotate.shoulder)},
                                 {"elbow", toml_pair(p.arm_rotate.elbow)},
                                 {"wrist", toml_pair(p.arm_rotate.wrist)},
                                 {"prob", p.arm_rotate.prob},
                                 {"joints", joints}}},
      {"noise", toml::table{{"stddev", p.noise.stddev}, {"prob", p.noise.prob}}},
  };
}

inline std::string augmentation_params_to_toml_string(const AugmentationParams& p) {
  std::ostringstream os;
  os << augmentation_params_to_toml(p);
  return os.str();
}

}  // namespace poseprep
