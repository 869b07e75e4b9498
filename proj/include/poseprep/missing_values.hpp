#pragma once

#include <cstddef>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poseprep/pose.hpp"

namespace poseprep {

inline constexpr double kDefaultSentinel = -10.0;

/// Maximal run of frames in which one keypoint is missing.
struct Gap {
  std::size_t keypoint_index = 0;
  std::size_t start_frame = 0;
  std::size_t length = 0;
  bool bounded = false;

  friend bool operator==(const Gap&, const Gap&) = default;
};

namespace detail {

// Calls fn(start, length, bounded) for each maximal run where present(t) is false.
template <typename Present, typename Fn>
void for_each_run(std::size_t n, Present&& present, Fn&& fn) {
  std::size_t t = 0;
  while (t < n) {
    if (present(t)) {
      ++t;
      continue;
    }
    const std::size_t start = t;
    while (t < n && !present(t)) ++t;
    fn(start, t - start, start > 0 && t < n);
  }
}

}  // namespace detail

inline std::vector<Gap> detect_gaps(const Clip& clip) {
  const auto& frames = clip.frames();
  std::vector<Gap> gaps;
  for (std::size_t k = 0; k < layout::kKeypointCount; ++k) {
    detail::for_each_run(
        frames.size(), [&](std::size_t t) { return frames[t].keypoints[k].is_present(); },
        [&](std::size_t start, std::size_t len, bool bounded) { gaps.push_back({k, start, len, bounded}); });
  }
  return gaps;
}

/// Linearly fills bounded gaps of at most `max_gap` frames. Hands and face are
/// filled as a unit, so the group stays either fully present or fully missing.
inline Clip interpolate(const Clip& clip, std::size_t max_gap) {
  if (max_gap < 1) throw Error(Errc::InvalidMaxGap, "max_gap must be at least 1");
  require_state(clip, CoordinateState::RawCrop, "interpolate");
  auto frames = clip.frames();
  const std::size_t n = frames.size();

  auto fill = [&](std::size_t k, std::size_t start, std::size_t len) {
    const auto a = frames[start - 1].keypoints[k];
    const auto b = frames[start + len].keypoints[k];
    const double span = static_cast<double>(len + 1);
    for (std::size_t j = 1; j <= len; ++j) {
      const double w = static_cast<double>(j) / span;
      frames[start - 1 + j].keypoints[k] = {a.x + (b.x - a.x) * w, a.y + (b.y - a.y) * w};
    }
  };

  const auto body = layout::group_range(layout::Group::Body);
  for (std::size_t k = body.begin; k < body.end; ++k) {
    detail::for_each_run(
        n, [&](std::size_t t) { return clip.frames()[t].keypoints[k].is_present(); },
        [&](std::size_t start, std::size_t len, bool bounded) {
          if (bounded && len <= max_gap) fill(k, start, len);
        });
  }
  for (auto g : {layout::Group::LeftHand, layout::Group::RightHand, layout::Group::Face}) {
    const auto r = layout::group_range(g);
    detail::for_each_run(
        n, [&](std::size_t t) { return clip.frames()[t].group_present(g); },
        [&](std::size_t start, std::size_t len, bool bounded) {
          if (!bounded || len > max_gap) return;
          for (std::size_t k = r.begin; k < r.end; ++k) fill(k, start, len);
        });
  }
  return clip.with_frames(std::move(frames), CoordinateState::RawCrop);
}

/// Replaces every remaining missing coordinate with the sentinel. A present
/// coordinate equal to the sentinel is kept and reported as a warning.
inline Clip fill_sentinel(const Clip& clip, double sentinel = kDefaultSentinel, Diagnostics* diag = nullptr) {
  require_state(clip, CoordinateState::Normalized, "fill_sentinel");
  auto frames = clip.frames();
  std::size_t collisions = 0;
  for (auto& f : frames) {
    for (auto& p : f.keypoints) {
      if (p.is_missing())
        p = {sentinel, sentinel};
      else if (p.x == sentinel || p.y == sentinel)
        ++collisions;
    }
  }
  if (collisions > 0 && diag)
    diag->warn("SentinelCollision", "clip '" + clip.id() + "': " + std::to_string(collisions) +
                                        " present keypoint(s) carry the sentinel value");
  return clip.with_frames(std::move(frames), CoordinateState::Featurized);
}

struct GapStatistics {
  std::map<std::size_t, std::size_t> histogram;  // length -> count
  std::map<std::size_t, double> cdf;             // length -> fraction with length <= key
  std::size_t total = 0;
  bool no_gaps = false;

  /// Fraction of gaps with length <= k, for any k.
  double cdf_at(std::size_t k) const noexcept {
    if (total == 0) return 0.0;
    std::size_t acc = 0;
    for (const auto& [len, c] : histogram) {
      if (len > k) break;
      acc += c;
    }
    return static_cast<double>(acc) / static_cast<double>(total);
  }

  friend bool operator==(const GapStatistics&, const GapStatistics&) = default;
};

inline GapStatistics gap_statistics_from_lengths(const std::vector<std::size_t>& lengths) {
  GapStatistics s;
  for (auto len : lengths) ++s.histogram[len];
  s.total = lengths.size();
  s.no_gaps = lengths.empty();
  std::size_t acc = 0;
  for (const auto& [len, c] : s.histogram) {
    acc += c;
    s.cdf[len] = static_cast<double>(acc) / static_cast<double>(s.total);
  }
  return s;
}

/// Histogram and CDF over all bounded gaps of all clips, counted per keypoint.
inline GapStatistics gap_statistics(const std::vector<Clip>& clips) {
  if (clips.empty()) throw Error(Errc::EmptyInput, "gap_statistics needs at least one clip");
  std::vector<std::size_t> lengths;
  for (const auto& c : clips)
    for (const auto& g : detect_gaps(c))
      if (g.bounded) lengths.push_back(g.length);
  return gap_statistics_from_lengths(lengths);
}

// Emitters. Counts are integers; CDF fractions are written with full
// precision so the text forms parse back to the same doubles.

inline std::string gap_statistics_to_tsv(const GapStatistics& s) {
  std::ostringstream os;
  os.precision(17);
  os << "length\tcount\tcdf\n";
  for (const auto& [len, c] : s.histogram) os << len << '\t' << c << '\t' << s.cdf.at(len) << '\n';
  return os.str();
}

inline GapStatistics gap_statistics_from_tsv(const std::string& text) {
  std::istringstream is(text);
  std::string header;
  std::getline(is, header);
  if (header != "length\tcount\tcdf") throw Error(Errc::Format, "gap statistics TSV header mismatch");
  GapStatistics s;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::size_t len = 0, count = 0;
    double cdf = 0.0;
    if (!(ls >> len >> count >> cdf)) throw Error(Errc::Format, "bad gap statistics row: " + line);
    s.histogram[len] = count;
    s.cdf[len] = cdf;
    s.total += count;
  }
  s.no_gaps = s.total == 0;
  return s;
}

inline nlohmann::json gap_statistics_to_json(const GapStatistics& s) {
  nlohmann::json hist = nlohmann::json::object(), cdf = nlohmann::json::object();
  for (const auto& [len, c] : s.histogram) hist[std::to_string(len)] = c;
  for (const auto& [len, v] : s.cdf) cdf[std::to_string(len)] = v;
  return {{"total", s.total}, {"no_gaps", s.no_gaps}, {"histogram", hist}, {"cdf", cdf}};
}

inline GapStatistics gap_statistics_from_json(const nlohmann::json& j) {
  try {
    GapStatistics s;
    for (const auto& [k, v] : j.at("histogram").items()) s.histogram[std::stoul(k)] = v.get<std::size_t>();
    for (const auto& [k, v] : j.at("cdf").items()) s.cdf[std::stoul(k)] = v.get<double>();
    s.total = j.at("total").get<std::size_t>();
    s.no_gaps = j.at("no_gaps").get<bool>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Format, std::string("gap statistics JSON: ") + e.what());
  }
}

}  // namespace poseprep
