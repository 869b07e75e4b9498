#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "poseprep/pose.hpp"

namespace poseprep {

namespace fs = std::filesystem;

static_assert(std::numeric_limits<float>::is_iec559, "float32 payloads require IEEE-754 floats");

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

inline std::uint32_t get_u32(std::string_view in, std::size_t off) noexcept {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[off + i])) << (8 * i);
  return v;
}

inline float get_f32(std::string_view in, std::size_t off) noexcept { return std::bit_cast<float>(get_u32(in, off)); }

inline constexpr std::uint32_t kQuietNaNBits = 0x7fc00000u;

}  // namespace detail

// ---------------------------------------------------------------------------
// Whole-file helpers

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::string data;
  in.seekg(0, std::ios::end);
  data.resize(static_cast<std::size_t>(in.tellg()));
  in.seekg(0);
  in.read(data.data(), static_cast<std::streamsize>(data.size()));
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  return data;
}

/// Writes through a temporary sibling and renames it into place, so an
/// interrupted run never leaves a truncated file under the final name.
inline void write_file_atomic(const fs::path& path, std::string_view data) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot create " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) throw Error(Errc::Io, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(Errc::Io, "cannot rename into " + path.string());
  }
}

// ---------------------------------------------------------------------------
// PKPF clip payload
//
//   "PKPF" | version u32 = 1 | frame_count u32 | keypoint_count u32 = 104 |
//   coordinate_state u8 | 3 zero bytes | frames x 104 x (x, y) float32
//
// All integers and floats little-endian; quiet NaN marks a missing keypoint.

inline constexpr std::string_view kPkpfMagic = "PKPF";
inline constexpr std::uint32_t kPkpfVersion = 1;
inline constexpr std::size_t kPkpfHeaderSize = 20;

struct PkpfHeader {
  std::uint32_t version = 0;
  std::uint32_t frame_count = 0;
  std::uint32_t keypoint_count = 0;
  std::uint8_t coordinate_state = 0;
  std::array<std::uint8_t, 3> pad{};

  std::size_t expected_size() const noexcept {
    return kPkpfHeaderSize + std::size_t{frame_count} * keypoint_count * 2 * sizeof(float);
  }
};

/// Parses the fixed header without judging its contents beyond the magic.
inline PkpfHeader read_pkpf_header(std::string_view bytes) {
  if (bytes.size() < kPkpfHeaderSize) throw Error(Errc::Format, "file shorter than PKPF header");
  if (bytes.substr(0, 4) != kPkpfMagic) throw Error(Errc::Format, "bad magic (expected PKPF)");
  PkpfHeader h;
  h.version = detail::get_u32(bytes, 4);
  h.frame_count = detail::get_u32(bytes, 8);
  h.keypoint_count = detail::get_u32(bytes, 12);
  h.coordinate_state = static_cast<std::uint8_t>(bytes[16]);
  for (int i = 0; i < 3; ++i) h.pad[i] = static_cast<std::uint8_t>(bytes[17 + i]);
  return h;
}

inline std::string encode_pkpf(const Clip& clip) {
  std::string out;
  out.reserve(kPkpfHeaderSize + clip.size() * layout::kFeatureDim * sizeof(float));
  out.append(kPkpfMagic);
  detail::put_u32(out, kPkpfVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(clip.size()));
  detail::put_u32(out, static_cast<std::uint32_t>(layout::kKeypointCount));
  out.push_back(static_cast<char>(clip.state()));
  out.append(3, '\0');
  for (const auto& f : clip.frames())
    for (const auto& p : f.keypoints) {
      if (p.is_missing()) {
        detail::put_u32(out, detail::kQuietNaNBits);
        detail::put_u32(out, detail::kQuietNaNBits);
      } else {
        detail::put_f32(out, static_cast<float>(p.x));
        detail::put_f32(out, static_cast<float>(p.y));
      }
    }
  return out;
}

struct ClipMeta {
  std::string id;
  double fps = 25.0;
  std::optional<std::string> caption;
};

inline Clip decode_pkpf(std::string_view bytes, const ClipMeta& meta) {
  const auto h = read_pkpf_header(bytes);
  if (h.version != kPkpfVersion) throw Error(Errc::Format, "unsupported PKPF version " + std::to_string(h.version));
  if (h.keypoint_count != layout::kKeypointCount)
    throw Error(Errc::Format, "keypoint_count " + std::to_string(h.keypoint_count) + " != 104");
  if (h.coordinate_state > 2) throw Error(Errc::Format, "unknown coordinate_state");
  if (bytes.size() != h.expected_size()) throw Error(Errc::Format, "payload size mismatch");
  std::vector<PoseFrame> frames(h.frame_count);
  std::size_t off = kPkpfHeaderSize;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    frames[t].frame_index = t;
    for (auto& p : frames[t].keypoints) {
      const float x = detail::get_f32(bytes, off), y = detail::get_f32(bytes, off + 4);
      off += 8;
      p = (std::isnan(x) && std::isnan(y)) ? Keypoint2D::missing() : Keypoint2D{x, y};
    }
  }
  try {
    return Clip(meta.id, meta.fps, std::move(frames), meta.caption, static_cast<CoordinateState>(h.coordinate_state));
  } catch (const Error& e) {
    throw Error(Errc::Format, e.what());
  }
}

// ---------------------------------------------------------------------------
// JSON sidecar: {"id": string, "fps": number, "caption": string|null}, plus
// any extra keys the writer chooses to add.

inline nlohmann::json sidecar_json(const Clip& clip) {
  return {{"id", clip.id()},
          {"fps", clip.fps()},
          {"caption", clip.caption() ? nlohmann::json(*clip.caption()) : nlohmann::json(nullptr)}};
}

inline ClipMeta parse_sidecar(const nlohmann::json& j) {
  try {
    ClipMeta m;
    m.id = j.at("id").get<std::string>();
    m.fps = j.at("fps").get<double>();
    if (j.contains("caption") && !j.at("caption").is_null()) m.caption = j.at("caption").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Format, std::string("sidecar: ") + e.what());
  }
}

inline fs::path sidecar_path(const fs::path& pkpf) {
  auto p = pkpf;
  p.replace_extension(".json");
  return p;
}

inline nlohmann::json parse_json_text(std::string_view text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Format, what + ": " + e.what());
  }
}

/// Reads `<base>.pkpf` with its `<base>.json` sidecar.
inline Clip read_clip(const fs::path& pkpf) {
  const auto side = sidecar_path(pkpf);
  if (!fs::exists(side)) throw Error(Errc::Format, "missing sidecar " + side.string());
  const auto meta = parse_sidecar(parse_json_text(read_file(side), side.string()));
  return decode_pkpf(read_file(pkpf), meta);
}

/// Writes `<base>.pkpf` and `<base>.json`. `extra` keys are merged into the
/// sidecar.
inline void write_clip(const fs::path& pkpf, const Clip& clip, const nlohmann::json& extra = nlohmann::json::object()) {
  auto side = sidecar_json(clip);
  for (const auto& [k, v] : extra.items()) side[k] = v;
  write_file_atomic(pkpf, encode_pkpf(clip));
  write_file_atomic(sidecar_path(pkpf), side.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// JSON clip form for tests and debugging:
// {"id", "fps", "caption", "frames": [[[x, y] | null] x 104] x N}

inline nlohmann::json clip_to_json(const Clip& clip) {
  auto j = sidecar_json(clip);
  j["coordinate_state"] = std::string(to_string(clip.state()));
  auto frames = nlohmann::json::array();
  for (const auto& f : clip.frames()) {
    auto pts = nlohmann::json::array();
    for (const auto& p : f.keypoints) pts.push_back(p.is_missing() ? nlohmann::json(nullptr) : nlohmann::json{p.x, p.y});
    frames.push_back(std::move(pts));
  }
  j["frames"] = std::move(frames);
  return j;
}

inline Clip clip_from_json(const nlohmann::json& j) {
  try {
    const auto meta = parse_sidecar(j);
    auto state = CoordinateState::RawCrop;
    if (j.contains("coordinate_state")) {
      const auto s = j.at("coordinate_state").get<std::string>();
      if (s == "Normalized") state = CoordinateState::Normalized;
      else if (s == "Featurized") state = CoordinateState::Featurized;
      else if (s != "RawCrop") throw Error(Errc::Format, "unknown coordinate_state '" + s + "'");
    }
    const auto& jf = j.at("frames");
    std::vector<PoseFrame> frames(jf.size());
    for (std::size_t t = 0; t < jf.size(); ++t) {
      const auto& pts = jf[t];
      if (pts.size() != layout::kKeypointCount)
        throw Error(Errc::Format, "frame " + std::to_string(t) + " has " + std::to_string(pts.size()) + " keypoints");
      frames[t].frame_index = t;
      for (std::size_t k = 0; k < layout::kKeypointCount; ++k) {
        if (pts[k].is_null()) continue;
        frames[t].keypoints[k] = {pts[k].at(0).get<double>(), pts[k].at(1).get<double>()};
      }
    }
    return Clip(meta.id, meta.fps, std::move(frames), meta.caption, state);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Format, std::string("clip JSON: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::Format) throw;
    throw Error(Errc::Format, e.what());
  }
}

// ---------------------------------------------------------------------------
// Feature matrix: raw float32 LE, row-major frames x 208.

inline std::string encode_features(const Clip& clip, double sentinel) {
  std::string out;
  out.reserve(clip.size() * layout::kFeatureDim * sizeof(float));
  for (const auto& f : clip.frames())
    for (double v : flatten_frame(f, sentinel)) detail::put_f32(out, static_cast<float>(v));
  return out;
}

inline std::vector<FeatureVector> decode_features(std::string_view bytes) {
  constexpr std::size_t row = layout::kFeatureDim * sizeof(float);
  if (bytes.size() % row != 0) throw Error(Errc::Format, "feature matrix size is not a multiple of 208 floats");
  std::vector<FeatureVector> rows(bytes.size() / row);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < layout::kFeatureDim; ++c)
      rows[r][c] = detail::get_f32(bytes, r * row + c * sizeof(float));
  return rows;
}

// ---------------------------------------------------------------------------
// ATNT tensor file
//
//   "ATNT" | version u32 = 1 | kind u8 | 3 zero bytes | ndim u32 |
//   ndim x u32 dims | float32 row-major payload

enum class TensorKind : std::uint8_t { EncoderSelf = 0, Cross = 1, Attribution = 2 };

constexpr std::string_view to_string(TensorKind k) noexcept {
  return k == TensorKind::EncoderSelf ? "self" : k == TensorKind::Cross ? "cross" : "attribution";
}

inline constexpr std::string_view kAtntMagic = "ATNT";
inline constexpr std::uint32_t kAtntVersion = 1;

struct TensorFile {
  TensorKind kind = TensorKind::Cross;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const noexcept {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

inline std::string encode_atnt(const TensorFile& t) {
  if (t.data.size() != t.element_count()) throw Error(Errc::InvalidArgument, "tensor data does not match dims");
  std::string out;
  out.append(kAtntMagic);
  detail::put_u32(out, kAtntVersion);
  out.push_back(static_cast<char>(t.kind));
  out.append(3, '\0');
  detail::put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) detail::put_u32(out, d);
  for (float v : t.data) detail::put_f32(out, v);
  return out;
}

inline TensorFile decode_atnt(std::string_view bytes) {
  if (bytes.size() < 16 || bytes.substr(0, 4) != kAtntMagic) throw Error(Errc::Format, "bad magic (expected ATNT)");
  if (detail::get_u32(bytes, 4) != kAtntVersion) throw Error(Errc::Format, "unsupported ATNT version");
  const auto kind = static_cast<std::uint8_t>(bytes[8]);
  if (kind > 2) throw Error(Errc::Format, "unknown ATNT kind " + std::to_string(kind));
  TensorFile t;
  t.kind = static_cast<TensorKind>(kind);
  const auto ndim = detail::get_u32(bytes, 12);
  if (bytes.size() < 16 + std::size_t{ndim} * 4) throw Error(Errc::Format, "ATNT header truncated");
  for (std::uint32_t i = 0; i < ndim; ++i) t.dims.push_back(detail::get_u32(bytes, 16 + 4 * i));
  const std::size_t off = 16 + std::size_t{ndim} * 4;
  const std::size_t n = t.element_count();
  if (bytes.size() != off + n * 4) throw Error(Errc::Format, "payload size mismatch");
  t.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) t.data[i] = detail::get_f32(bytes, off + 4 * i);
  return t;
}

inline TensorFile read_atnt(const fs::path& path) { return decode_atnt(read_file(path)); }
inline void write_atnt(const fs::path& path, const TensorFile& t) { write_file_atomic(path, encode_atnt(t)); }

}  // namespace poseprep
