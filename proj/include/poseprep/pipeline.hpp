#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "poseprep/augmentation.hpp"
#include "poseprep/augmentation_toml.hpp"
#include "poseprep/io.hpp"
#include "poseprep/missing_values.hpp"
#include "poseprep/normalization.hpp"
#include "poseprep/version.hpp"

namespace poseprep {

struct PipelineConfig {
  fs::path input_dir;
  fs::path output_dir;
  NormalizationMethod normalization = NormalizationMethod::SignSpace;
  std::size_t max_gap = 0;  // 0 disables interpolation
  // "off", a preset name ("heavy", "release-medium", ...) or "file:<path>".
  std::string augmentation = "off";
  std::optional<AugmentationParams> augmentation_params;
  std::uint64_t seed = 0;
  double sentinel = kDefaultSentinel;
  std::size_t workers = 0;  // 0 = one per hardware thread
  bool emit_features = true;

  void validate() const {
    if (input_dir.empty() || !fs::is_directory(input_dir))
      throw Error(Errc::InvalidArgument, "input_dir '" + input_dir.string() + "' is not a directory");
    if (output_dir.empty()) throw Error(Errc::InvalidArgument, "output_dir is required");
    if (augmentation_params) augmentation_params->validate();
  }

  std::size_t effective_workers() const noexcept {
    if (workers > 0) return workers;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }

  nlohmann::json to_json() const {
    return {{"input_dir", input_dir.string()},
            {"output_dir", output_dir.string()},
            {"normalization", std::string(to_string(normalization))},
            {"max_gap", max_gap},
            {"augmentation", augmentation},
            {"seed", seed},
            {"sentinel", sentinel},
            {"workers", workers},
            {"emit_features", emit_features}};
  }
};

/// Resolves an augmentation spec: "off", "heavy" / "medium" / "light" (full
/// tables), "release-<preset>" (shear, elbow, noise only) or "file:<path>".
inline std::optional<AugmentationParams> resolve_augmentation(const std::string& spec, const fs::path& base = {}) {
  if (spec.empty() || spec == "off" || spec == "none") return std::nullopt;
  if (spec.rfind("file:", 0) == 0) {
    fs::path p = spec.substr(5);
    if (p.is_relative() && !base.empty()) p = base / p;
    return load_augmentation_params(p);
  }
  if (spec.rfind("release-", 0) == 0) return release_params(parse_preset(spec.substr(8)));
  return preset_params(parse_preset(spec));
}

/// Reads a pipeline TOML file. Relative paths resolve against the file's
/// directory. Keys: input_dir, output_dir, normalization, max_gap,
/// augmentation, augmentation_params, seed, sentinel, workers, emit_features.
inline PipelineConfig parse_pipeline_config(const toml::table& t, const fs::path& base = {}) {
  PipelineConfig c;
  auto path = [&](std::string_view key) -> fs::path {
    const auto v = t[key].value<std::string>();
    if (!v) return {};
    fs::path p = *v;
    return (p.is_relative() && !base.empty()) ? base / p : p;
  };
  auto non_negative = [&](std::string_view key, std::int64_t fallback) {
    const auto v = t[key].value<std::int64_t>().value_or(fallback);
    if (v < 0) throw Error(Errc::InvalidArgument, std::string(key) + " must be >= 0");
    return v;
  };
  c.input_dir = path("input_dir");
  c.output_dir = path("output_dir");
  if (auto m = t["normalization"].value<std::string>()) c.normalization = parse_normalization_method(*m);
  c.max_gap = static_cast<std::size_t>(non_negative("max_gap", 0));
  c.workers = static_cast<std::size_t>(non_negative("workers", 0));
  c.seed = static_cast<std::uint64_t>(t["seed"].value<std::int64_t>().value_or(0));
  c.sentinel = t["sentinel"].value<double>().value_or(kDefaultSentinel);
  c.emit_features = t["emit_features"].value<bool>().value_or(true);
  if (auto file = t["augmentation_params"].value<std::string>()) {
    c.augmentation = "file:" + path("augmentation_params").string();
  } else if (auto a = t["augmentation"].value<std::string>()) {
    c.augmentation = *a;
  }
  c.augmentation_params = resolve_augmentation(c.augmentation, base);
  return c;
}

inline PipelineConfig load_pipeline_config(const fs::path& file) {
  try {
    return parse_pipeline_config(toml::parse_file(file.string()), file.parent_path());
  } catch (const toml::parse_error& e) {
    throw Error(Errc::Format, file.string() + ": " + std::string(e.description()));
  }
}

// ---------------------------------------------------------------------------

/// Runs the per-clip chain: interpolate -> augment -> normalize -> sentinel.
/// Pure; safe to call concurrently on different clips.
inline Clip process_clip(const Clip& raw, const PipelineConfig& cfg, Diagnostics* diag = nullptr) {
  Clip clip = raw;
  if (cfg.max_gap > 0) clip = interpolate(clip, cfg.max_gap);
  if (cfg.augmentation_params) clip = apply_protocol(clip, *cfg.augmentation_params, cfg.seed).clip;
  clip = normalize(clip, cfg.normalization);
  return fill_sentinel(clip, cfg.sentinel, diag);
}

enum class ClipStatus { Ok, Discarded, Error };

constexpr std::string_view to_string(ClipStatus s) noexcept {
  return s == ClipStatus::Ok ? "ok" : s == ClipStatus::Discarded ? "discarded" : "error";
}

struct ManifestEntry {
  std::string file;
  std::string clip_id;
  ClipStatus status = ClipStatus::Error;
  std::string detail;
  std::size_t frames = 0;
};

struct RunManifest {
  nlohmann::json config;
  std::vector<ManifestEntry> clips;
  std::size_t ok = 0, discarded = 0, errors = 0;
  std::string rng_algorithm;
  std::string version;
  double wall_time_s = 0.0;

  nlohmann::json to_json() const {
    auto entries = nlohmann::json::array();
    for (const auto& e : clips) {
      nlohmann::json j{{"file", e.file}, {"id", e.clip_id}, {"status", std::string(to_string(e.status))}};
      if (!e.detail.empty()) j["detail"] = e.detail;
      if (e.status == ClipStatus::Ok) j["frames"] = e.frames;
      entries.push_back(std::move(j));
    }
    return {{"config", config},
            {"clips", entries},
            {"counts", {{"total", clips.size()}, {"ok", ok}, {"discarded", discarded}, {"error", errors}}},
            {"rng", {{"algorithm", rng_algorithm}, {"keying", std::string(kRngKeying)}}},
            {"version", version},
            {"wall_time_s", wall_time_s}};
  }
};

/// Errors that mean "this clip has no usable signer", as opposed to bad data.
inline bool is_discard(Errc code) noexcept {
  switch (code) {
    case Errc::NoValidSigningSpace:
    case Errc::NoValidFrame:
    case Errc::AllBodyMissing:
    case Errc::EmptyClipGeometry:
    case Errc::DegenerateBox: return true;
    default: return false;
  }
}

/// File-system safe stem for a clip id.
inline std::string output_stem(std::string_view id) {
  std::string s(id);
  for (auto& c : s)
    if (c == '/' || c == '\\' || c == ':' || static_cast<unsigned char>(c) < 0x20) c = '_';
  if (s.empty() || s == "." || s == "..") s = "_" + s;
  return s;
}

/// Sorted list of `*.pkpf` files directly inside `dir`.
inline std::vector<fs::path> list_clip_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".pkpf") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

/// Calls fn(i) for i in [0, n) on `workers` threads.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
}

inline nlohmann::json output_sidecar_extra(const PipelineConfig& cfg, const Clip& clip) {
  nlohmann::json extra{{"frames", clip.size()},
                       {"coordinate_state", std::string(to_string(clip.state()))},
                       {"normalization", std::string(to_string(cfg.normalization))},
                       {"max_gap", cfg.max_gap},
                       {"sentinel", cfg.sentinel}};
  if (cfg.augmentation_params)
    extra["augmentation"] = {{"spec", cfg.augmentation},
                             {"seed", cfg.seed},
                             {"rng", std::string(kRngAlgorithm)},
                             {"keying", std::string(kRngKeying)}};
  if (cfg.emit_features)
    extra["features"] = {{"file", output_stem(clip.id()) + ".f32"},
                         {"rows", clip.size()},
                         {"cols", layout::kFeatureDim},
                         {"dtype", "float32le"}};
  return extra;
}

/// Processes every clip in input_dir into output_dir. Per-clip failures are
/// recorded in the manifest; only output-directory I/O failures throw.
/// Outputs depend on (inputs, config, seed) only, never on worker count.
inline RunManifest run_pipeline(const PipelineConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec || !fs::is_directory(cfg.output_dir))
    throw Error(Errc::Io, "cannot create output_dir " + cfg.output_dir.string());

  const auto files = list_clip_files(cfg.input_dir);
  RunManifest m;
  m.config = cfg.to_json();
  m.rng_algorithm = std::string(kRngAlgorithm);
  m.version = std::string(kVersion);
  m.clips.resize(files.size());

  // Clip ids come from sidecars; read them up front so duplicates are
  // resolved the same way regardless of scheduling.
  std::vector<std::optional<ClipMeta>> metas(files.size());
  std::vector<std::string> meta_errors(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    m.clips[i].file = files[i].filename().string();
    try {
      const auto side = sidecar_path(files[i]);
      if (!fs::exists(side)) throw Error(Errc::Format, "missing sidecar " + side.filename().string());
      metas[i] = parse_sidecar(parse_json_text(read_file(side), side.string()));
      m.clips[i].clip_id = metas[i]->id;
    } catch (const Error& e) {
      meta_errors[i] = e.what();
    }
  }
  std::vector<bool> duplicate(files.size(), false);
  {
    std::vector<std::pair<std::string, std::size_t>> stems;
    for (std::size_t i = 0; i < files.size(); ++i)
      if (metas[i]) stems.emplace_back(output_stem(metas[i]->id), i);
    std::sort(stems.begin(), stems.end());
    for (std::size_t j = 1; j < stems.size(); ++j)
      if (stems[j].first == stems[j - 1].first) duplicate[stems[j].second] = true;
  }

  std::atomic<bool> io_failed{false};
  std::string io_error;
  std::mutex io_mutex;

  parallel_for(files.size(), cfg.effective_workers(), [&](std::size_t i) {
    auto& entry = m.clips[i];
    if (!metas[i]) {
      entry.status = ClipStatus::Error;
      entry.detail = meta_errors[i];
      return;
    }
    if (duplicate[i]) {
      entry.status = ClipStatus::Error;
      entry.detail = "duplicate clip id '" + metas[i]->id + "'";
      return;
    }
    std::optional<Clip> out;
    try {
      const Clip raw = decode_pkpf(read_file(files[i]), *metas[i]);
      if (raw.state() != CoordinateState::RawCrop)
        throw Error(Errc::InvalidState, "input clip is " + std::string(to_string(raw.state())));
      Diagnostics diag;
      out = process_clip(raw, cfg, &diag);
      entry.status = ClipStatus::Ok;
      entry.frames = out->size();
      if (!diag.empty()) entry.detail = diag.warnings.front().code + ": " + diag.warnings.front().message;
    } catch (const Error& e) {
      entry.status = is_discard(e.code()) ? ClipStatus::Discarded : ClipStatus::Error;
      entry.detail = e.what();
      return;
    } catch (const std::exception& e) {
      entry.status = ClipStatus::Error;
      entry.detail = e.what();
      return;
    }
    try {
      const auto stem = output_stem(out->id());
      write_clip(cfg.output_dir / (stem + ".pkpf"), *out, output_sidecar_extra(cfg, *out));
      if (cfg.emit_features) write_file_atomic(cfg.output_dir / (stem + ".f32"), encode_features(*out, cfg.sentinel));
    } catch (const Error& e) {
      std::lock_guard lock(io_mutex);
      io_failed = true;
      io_error = e.what();
    }
  });
  if (io_failed) throw Error(Errc::Io, io_error);

  for (const auto& e : m.clips) {
    m.ok += e.status == ClipStatus::Ok;
    m.discarded += e.status == ClipStatus::Discarded;
    m.errors += e.status == ClipStatus::Error;
  }
  m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file_atomic(cfg.output_dir / "manifest.json", m.to_json().dump(2) + "\n");
  return m;
}

// ---------------------------------------------------------------------------
// Dataset validation

struct Violation {
  std::string file;
  std::string message;
};

struct ValidationReport {
  std::size_t files_checked = 0;
  std::size_t valid_files = 0;
  std::vector<Violation> violations;

  nlohmann::json to_json() const {
    auto v = nlohmann::json::array();
    for (const auto& x : violations) v.push_back({{"file", x.file}, {"message", x.message}});
    return {{"files_checked", files_checked}, {"valid_files", valid_files}, {"violations", v}};
  }
};

/// Violations for one PKPF file (and its sidecar / feature matrix).
inline std::vector<std::string> validate_clip_file(const fs::path& file) {
  std::vector<std::string> out;
  std::string bytes;
  try {
    bytes = read_file(file);
  } catch (const Error& e) {
    return {e.what()};
  }
  std::optional<PkpfHeader> header;
  try {
    header = read_pkpf_header(bytes);
  } catch (const Error& e) {
    return {e.what()};
  }
  const auto& h = *header;
  if (h.version != kPkpfVersion) out.push_back("unsupported version " + std::to_string(h.version));
  if (h.keypoint_count != layout::kKeypointCount)
    out.push_back("keypoint_count " + std::to_string(h.keypoint_count) + " != 104");
  if (h.coordinate_state > 2) out.push_back("unknown coordinate_state " + std::to_string(h.coordinate_state));
  if (h.pad != std::array<std::uint8_t, 3>{0, 0, 0}) out.push_back("non-zero header padding");
  if (h.frame_count == 0) out.push_back("clip has no frames");
  if (bytes.size() != h.expected_size()) out.push_back("payload size mismatch");

  if (out.empty()) {
    std::size_t off = kPkpfHeaderSize;
    std::size_t half = 0, partial_groups = 0, nan_featurized = 0, non_finite = 0;
    for (std::uint32_t t = 0; t < h.frame_count; ++t) {
      std::array<bool, layout::kKeypointCount> miss{};
      for (std::size_t k = 0; k < layout::kKeypointCount; ++k, off += 8) {
        const float x = detail::get_f32(bytes, off), y = detail::get_f32(bytes, off + 4);
        const bool nx = std::isnan(x), ny = std::isnan(y);
        if (nx != ny) ++half;
        if ((!nx && !std::isfinite(x)) || (!ny && !std::isfinite(y))) ++non_finite;
        miss[k] = nx && ny;
        if (miss[k] && h.coordinate_state == 2) ++nan_featurized;
      }
      for (auto g : layout::kGroups) {
        if (!layout::is_atomic(g)) continue;
        const auto r = layout::group_range(g);
        const auto n = std::count(miss.begin() + r.begin, miss.begin() + r.end, true);
        if (n != 0 && static_cast<std::size_t>(n) != r.size()) ++partial_groups;
      }
    }
    if (half) out.push_back(std::to_string(half) + " half-missing keypoint(s)");
    if (non_finite) out.push_back(std::to_string(non_finite) + " infinite coordinate(s)");
    if (partial_groups) out.push_back(std::to_string(partial_groups) + " partially missing hand/face group(s)");
    if (nan_featurized) out.push_back(std::to_string(nan_featurized) + " missing keypoint(s) in a Featurized clip");
  }

  const auto side = sidecar_path(file);
  if (!fs::exists(side)) {
    out.push_back("missing sidecar");
  } else {
    try {
      const auto j = parse_json_text(read_file(side), side.string());
      const auto meta = parse_sidecar(j);
      if (!(meta.fps > 0.0)) out.push_back("sidecar fps must be positive");
    } catch (const Error& e) {
      out.push_back(std::string("sidecar: ") + e.what());
    }
  }

  auto feat = file;
  feat.replace_extension(".f32");
  if (fs::exists(feat) && h.keypoint_count == layout::kKeypointCount) {
    const auto expected = std::uintmax_t{h.frame_count} * layout::kFeatureDim * sizeof(float);
    if (fs::file_size(feat) != expected) out.push_back("feature matrix size mismatch");
  }
  return out;
}

inline ValidationReport validate_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(Errc::InvalidArgument, "'" + dir.string() + "' is not a directory");
  ValidationReport r;
  for (const auto& f : list_clip_files(dir)) {
    ++r.files_checked;
    const auto v = validate_clip_file(f);
    if (v.empty()) ++r.valid_files;
    for (const auto& msg : v) r.violations.push_back({f.filename().string(), msg});
  }
  return r;
}

}  // namespace poseprep
