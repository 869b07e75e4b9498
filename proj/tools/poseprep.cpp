// poseprep: batch command-line front end for the pose preprocessing library.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "poseprep/poseprep.hpp"

namespace {

using namespace poseprep;
using nlohmann::json;

int fail(const std::string& msg) {
  std::cerr << "poseprep: " << msg << '\n';
  return 2;
}

bool has_ext(const fs::path& p, std::string_view ext) { return p.extension() == ext; }

void write_text(const fs::path& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  write_file_atomic(out, text);
}

std::string matrix_tsv(const Matrix& m) {
  std::ostringstream os;
  os.precision(9);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) os << (c ? "\t" : "") << m(r, c);
    os << '\n';
  }
  return os.str();
}

void write_matrix(const fs::path& out, const Matrix& m, TensorKind kind) {
  if (out.empty() || out == "-" || has_ext(out, ".tsv")) write_text(out, matrix_tsv(m));
  else write_atnt(out, matrix_to_tensor(m, kind));
}

void write_vector(const fs::path& out, const std::vector<double>& v, TensorKind kind) {
  if (out.empty() || out == "-" || has_ext(out, ".tsv")) {
    std::ostringstream os;
    os.precision(9);
    os << "frame\tvalue\n";
    for (std::size_t i = 0; i < v.size(); ++i) os << i << '\t' << v[i] << '\n';
    write_text(out, os.str());
  } else {
    write_atnt(out, vector_to_tensor(v, kind));
  }
}

AttributionMatrix load_attribution(const fs::path& p) {
  auto a = attribution_from_file(read_atnt(p));
  auto side = p;
  side.replace_extension(".json");
  if (fs::exists(side)) {
    const auto j = parse_json_text(read_file(side), side.string());
    if (j.contains("tokens")) a.tokens = j.at("tokens").get<std::vector<std::string>>();
    if (j.contains("bleu1") && !j.at("bleu1").is_null()) a.bleu1 = j.at("bleu1").get<double>();
  }
  return a;
}

/// Loads a clip from either a PKPF file (with sidecar) or the JSON clip form.
Clip load_any_clip(const fs::path& p) {
  if (has_ext(p, ".pkpf")) return read_clip(p);
  return clip_from_json(parse_json_text(read_file(p), p.string()));
}

/// Applies `fn` to every PKPF clip of `in`, writing results into `out`.
/// Returns the number of clips that failed.
template <typename Fn>
int map_clips(const fs::path& in, const fs::path& out, Fn&& fn) {
  fs::create_directories(out);
  int failures = 0;
  for (const auto& file : list_clip_files(in)) {
    try {
      const Clip result = fn(read_clip(file));
      write_clip(out / file.filename(), result);
    } catch (const Error& e) {
      ++failures;
      std::cerr << file.filename().string() << ": " << e.what() << '\n';
    }
  }
  return failures;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pose-sequence preprocessing toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // run ---------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "Run the full preprocessing pipeline from a TOML config");
  std::string run_config;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::size_t> run_workers;
  std::string run_input, run_output, run_norm, run_aug;
  std::optional<std::size_t> run_max_gap;
  run->add_option("--config", run_config, "Pipeline TOML file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", run_seed, "Override the augmentation seed");
  run->add_option("--workers", run_workers, "Override the worker count (0 = auto)");
  run->add_option("--input", run_input, "Override input_dir");
  run->add_option("--output", run_output, "Override output_dir");
  run->add_option("--normalization", run_norm, "Override normalization");
  run->add_option("--max-gap", run_max_gap, "Override max_gap");
  run->add_option("--augmentation", run_aug, "Override augmentation (off|heavy|medium|light|release-*|file:PATH)");

  // validate ----------------------------------------------------------------
  auto* validate = app.add_subcommand("validate", "Check PKPF files and sidecars in a directory");
  std::string val_input;
  bool val_json = false;
  validate->add_option("--input", val_input, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  validate->add_flag("--json", val_json, "Print the report as JSON");

  // normalize ---------------------------------------------------------------
  auto* norm = app.add_subcommand("normalize", "Normalize RawCrop clips");
  std::string norm_method, norm_in, norm_out;
  norm->add_option("--method", norm_method, "none|yasl-clip|yasl-frame|signspace")
      ->required()
      ->check(CLI::IsMember({"none", "yasl-clip", "yasl-frame", "signspace"}));
  norm->add_option("--input", norm_in)->required()->check(CLI::ExistingDirectory);
  norm->add_option("--output", norm_out)->required();

  // interpolate -------------------------------------------------------------
  auto* interp = app.add_subcommand("interpolate", "Fill short bounded gaps by linear interpolation");
  std::size_t interp_gap = 2;
  std::string interp_in, interp_out;
  interp->add_option("--max-gap", interp_gap, "Longest gap to fill (0 disables)")->required();
  interp->add_option("--input", interp_in)->required()->check(CLI::ExistingDirectory);
  interp->add_option("--output", interp_out)->required();

  // augment -----------------------------------------------------------------
  auto* aug = app.add_subcommand("augment", "Apply a seeded augmentation protocol");
  std::string aug_protocol, aug_params, aug_in, aug_out;
  std::uint64_t aug_seed = 0;
  auto* aug_p = aug->add_option("--protocol", aug_protocol, "heavy|medium|light|release-{heavy,medium,light}");
  auto* aug_f = aug->add_option("--params", aug_params, "Custom parameters TOML")->check(CLI::ExistingFile);
  aug_p->excludes(aug_f);
  aug->add_option("--seed", aug_seed)->required();
  aug->add_option("--input", aug_in)->required()->check(CLI::ExistingDirectory);
  aug->add_option("--output", aug_out)->required();

  // stats -------------------------------------------------------------------
  auto* stats = app.add_subcommand("stats", "Dataset statistics");
  stats->require_subcommand(1);
  auto* gaps = stats->add_subcommand("gaps", "Histogram and CDF of bounded gap lengths");
  std::string gaps_in, gaps_fmt = "tsv", gaps_out;
  gaps->add_option("--input", gaps_in)->required()->check(CLI::ExistingDirectory);
  gaps->add_option("--format", gaps_fmt)->check(CLI::IsMember({"json", "tsv"}));
  gaps->add_option("--output", gaps_out, "Output file (default stdout)");

  // attn --------------------------------------------------------------------
  auto* attn = app.add_subcommand("attn", "Attention and attribution analytics on ATNT tensors");
  attn->require_subcommand(1);
  std::vector<std::string> attn_inputs;
  std::string attn_out;
  std::size_t attn_layer = 0, attn_head = 0, attn_min_run = 1, attn_rows = 0, attn_cols = 0;
  double attn_z = 2.0, attn_min_value = 0.3;
  std::optional<double> attn_min_bleu;
  auto add_io = [&](CLI::App* sub, bool many = false) {
    if (many) sub->add_option("--input", attn_inputs, "ATNT files")->required()->check(CLI::ExistingFile);
    else sub->add_option("--input", attn_inputs, "ATNT file")->required()->expected(1)->check(CLI::ExistingFile);
    sub->add_option("--output", attn_out, "Output (.atnt, .tsv or .json; default stdout)");
  };
  auto* a_heads = attn->add_subcommand("heads", "Mean over heads for one layer");
  add_io(a_heads);
  a_heads->add_option("--layer", attn_layer)->required();
  auto* a_layers = attn->add_subcommand("layers", "Mean over layers for one head");
  add_io(a_layers);
  a_layers->add_option("--head", attn_head)->required();
  auto* a_hist = attn->add_subcommand("hist", "Per-frame cross-attention histogram");
  add_io(a_hist);
  auto* a_spikes = attn->add_subcommand("spikes", "Robust z-score spike spans in a histogram");
  add_io(a_spikes);
  a_spikes->add_option("--z-threshold", attn_z);
  a_spikes->add_option("--min-run", attn_min_run);
  auto* a_filter = attn->add_subcommand("filter", "Zero attribution values below a threshold");
  add_io(a_filter);
  a_filter->add_option("--min-value", attn_min_value);
  auto* a_avg = attn->add_subcommand("avg", "Resample and average attribution matrices");
  add_io(a_avg, true);
  a_avg->add_option("--rows", attn_rows, "Target rows (default: first sample)");
  a_avg->add_option("--cols", attn_cols, "Target cols (default: first sample)");
  a_avg->add_option("--min-bleu1", attn_min_bleu, "Keep samples whose sidecar bleu1 is at least this");

  // convert / crop ----------------------------------------------------------
  auto* convert = app.add_subcommand("convert", "Convert a clip between PKPF and JSON form");
  std::string conv_in, conv_out;
  convert->add_option("--input", conv_in)->required()->check(CLI::ExistingFile);
  convert->add_option("--output", conv_out)->required();

  auto* space = app.add_subcommand("crop-space", "Print the clip-level signing-space crop box as JSON");
  std::string space_in;
  double space_mult = kCropMultiplier;
  space->add_option("--input", space_in, "Clip (.pkpf or .json)")->required()->check(CLI::ExistingFile);
  space->add_option("--multiplier", space_mult);

  auto* crop = app.add_subcommand("crop", "Map clips into their signing-space crop coordinates");
  std::string crop_in, crop_out;
  double crop_size = 256.0;
  crop->add_option("--input", crop_in)->required()->check(CLI::ExistingDirectory);
  crop->add_option("--output", crop_out)->required();
  crop->add_option("--size", crop_size, "Output crop side in pixels");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto cfg = load_pipeline_config(run_config);
      if (run_seed) cfg.seed = *run_seed;
      if (run_workers) cfg.workers = *run_workers;
      if (!run_input.empty()) cfg.input_dir = run_input;
      if (!run_output.empty()) cfg.output_dir = run_output;
      if (!run_norm.empty()) cfg.normalization = parse_normalization_method(run_norm);
      if (run_max_gap) cfg.max_gap = *run_max_gap;
      if (!run_aug.empty()) {
        cfg.augmentation = run_aug;
        cfg.augmentation_params = resolve_augmentation(run_aug);
      }
      const auto m = run_pipeline(cfg);
      std::cout << "clips: " << m.clips.size() << "  ok: " << m.ok << "  discarded: " << m.discarded
                << "  errors: " << m.errors << "  (" << m.wall_time_s << " s)\n";
      for (const auto& e : m.clips)
        if (e.status == ClipStatus::Error) std::cerr << e.file << ": " << e.detail << '\n';
      return m.errors == 0 ? 0 : 1;
    }

    if (*validate) {
      const auto r = validate_dataset(val_input);
      if (val_json) {
        std::cout << r.to_json().dump(2) << '\n';
      } else {
        for (const auto& v : r.violations) std::cout << v.file << ": " << v.message << '\n';
        std::cout << r.files_checked << " file(s), " << r.valid_files << " valid, " << r.violations.size()
                  << " violation(s)\n";
      }
      return r.violations.empty() ? 0 : 1;
    }

    if (*norm) {
      const auto method = parse_normalization_method(norm_method);
      return map_clips(norm_in, norm_out, [&](const Clip& c) { return normalize(c, method); }) == 0 ? 0 : 1;
    }

    if (*interp) {
      return map_clips(interp_in, interp_out, [&](const Clip& c) {
               return interp_gap == 0 ? c : interpolate(c, interp_gap);
             }) == 0
                 ? 0
                 : 1;
    }

    if (*aug) {
      if (aug_protocol.empty() && aug_params.empty()) return fail("augment needs --protocol or --params");
      const auto params = aug_params.empty() ? *resolve_augmentation(aug_protocol) : load_augmentation_params(aug_params);
      return map_clips(aug_in, aug_out, [&](const Clip& c) { return apply_protocol(c, params, aug_seed).clip; }) == 0
                 ? 0
                 : 1;
    }

    if (*gaps) {
      std::vector<Clip> clips;
      for (const auto& f : list_clip_files(gaps_in)) clips.push_back(read_clip(f));
      const auto s = gap_statistics(clips);
      if (s.no_gaps) std::cerr << "poseprep: no bounded gaps found\n";
      write_text(gaps_out, gaps_fmt == "json" ? gap_statistics_to_json(s).dump(2) + "\n" : gap_statistics_to_tsv(s));
      return 0;
    }

    if (*attn) {
      const fs::path in = attn_inputs.front();
      if (*a_heads || *a_layers || *a_hist) {
        Diagnostics diag;
        const auto t = AttentionTensor::from_file(read_atnt(in), &diag);
        for (const auto& w : diag.warnings) std::cerr << "warning: " << w.code << ": " << w.message << '\n';
        if (*a_heads) write_matrix(attn_out, mean_over_heads(t, attn_layer), t.file_kind());
        else if (*a_layers) write_matrix(attn_out, mean_over_layers(t, attn_head), t.file_kind());
        else write_vector(attn_out, frame_attention_histogram(t), TensorKind::Cross);
        return 0;
      }
      if (*a_spikes) {
        const auto f = read_atnt(in);
        std::vector<double> h;
        if (f.dims.size() == 1) h.assign(f.data.begin(), f.data.end());
        else h = frame_attention_histogram(AttentionTensor::from_file(f));
        Diagnostics diag;
        const auto spans = detect_spikes(h, attn_z, attn_min_run, &diag);
        for (const auto& w : diag.warnings) std::cerr << "warning: " << w.code << ": " << w.message << '\n';
        if (has_ext(attn_out, ".json")) {
          auto j = json::array();
          for (const auto& s : spans)
            j.push_back({{"start_frame", s.start_frame},
                         {"end_frame", s.end_frame},
                         {"mean_intensity", s.mean_intensity},
                         {"z_score", s.z_score}});
          write_text(attn_out, j.dump(2) + "\n");
        } else {
          std::ostringstream os;
          os.precision(9);
          os << "start_frame\tend_frame\tmean_intensity\tz_score\n";
          for (const auto& s : spans)
            os << s.start_frame << '\t' << s.end_frame << '\t' << s.mean_intensity << '\t' << s.z_score << '\n';
          write_text(attn_out, os.str());
        }
        return 0;
      }
      if (*a_filter) {
        const auto a = threshold_filter(load_attribution(in), attn_min_value);
        write_matrix(attn_out, a.values, TensorKind::Attribution);
        return 0;
      }
      if (*a_avg) {
        std::vector<AttributionMatrix> samples;
        for (const auto& p : attn_inputs) samples.push_back(load_attribution(p));
        if (attn_min_bleu) samples = select_by_bleu(std::move(samples), *attn_min_bleu);
        if (samples.empty()) return fail("no attribution samples left after BLEU-1 selection");
        const std::size_t rows = attn_rows ? attn_rows : samples.front().values.rows;
        const std::size_t cols = attn_cols ? attn_cols : samples.front().values.cols;
        write_matrix(attn_out, average_attributions(samples, rows, cols).values, TensorKind::Attribution);
        std::cerr << "averaged " << samples.size() << " sample(s)\n";
        return 0;
      }
    }

    if (*convert) {
      const Clip c = load_any_clip(conv_in);
      const fs::path out = conv_out;
      if (has_ext(out, ".pkpf")) write_clip(out, c);
      else write_text(out, clip_to_json(c).dump() + "\n");
      return 0;
    }

    if (*space) {
      const auto s = clip_crop_space(load_any_clip(space_in), space_mult);
      const auto b = s.box();
      std::cout << json{{"center", {s.center.x, s.center.y}},
                        {"side_length", s.side_length},
                        {"multiplier", s.multiplier},
                        {"box", {b.min_x, b.min_y, b.max_x, b.max_y}}}
                       .dump()
                << '\n';
      return 0;
    }

    if (*crop) {
      return map_clips(crop_in, crop_out, [&](const Clip& c) { return crop_clip(c, crop_size); }) == 0 ? 0 : 1;
    }
  } catch (const Error& e) {
    return fail(e.what());
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  return 0;
}
