#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <random>

#include "poseprep/pipeline.hpp"
#include "support/synth.hpp"

using namespace poseprep;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("poseprep_pipe_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_inputs(const fs::path& dir, std::size_t n, std::uint64_t seed) {
  fs::create_directories(dir);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = "clip" + std::to_string(i);
    write_clip(dir / (id + ".pkpf"),
               test::make_clip(rng, {.frames = 20, .body_missing = 0.1, .hand_missing = 0.2, .face_missing = 0.1}, id));
  }
}

std::string slurp(const fs::path& p) { return read_file(p); }

}  // namespace

TEST(PipelineConfig, ParseToml) {
  TempDir d;
  std::ofstream(d.path / "aug.toml") << "[noise]\nstddev = 2.0\nprob = 0.5\n";
  std::ofstream(d.path / "run.toml") << "input_dir = \"in\"\noutput_dir = \"/abs/out\"\nnormalization = \"yasl-frame\"\n"
                                        "max_gap = 3\nseed = 9\nworkers = 2\naugmentation_params = \"aug.toml\"\n";
  const auto c = load_pipeline_config(d.path / "run.toml");
  EXPECT_EQ(c.input_dir, d.path / "in");
  EXPECT_EQ(c.output_dir, fs::path("/abs/out"));
  EXPECT_EQ(c.normalization, NormalizationMethod::YaslFrame);
  EXPECT_EQ(c.max_gap, 3u);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.workers, 2u);
  ASSERT_TRUE(c.augmentation_params);
  EXPECT_EQ(c.augmentation_params->noise.stddev, 2.0);

  std::ofstream(d.path / "bad.toml") << "max_gap = -1\n";
  EXPECT_THROW(load_pipeline_config(d.path / "bad.toml"), Error);
  std::ofstream(d.path / "broken.toml") << "max_gap = \n";
  EXPECT_THROW(load_pipeline_config(d.path / "broken.toml"), Error);
}

TEST(PipelineConfig, AugmentationSpecs) {
  EXPECT_FALSE(resolve_augmentation("off"));
  EXPECT_EQ(*resolve_augmentation("heavy"), preset_params(Preset::Heavy));
  EXPECT_EQ(*resolve_augmentation("release-light"), release_params(Preset::Light));
  EXPECT_THROW(resolve_augmentation("wild"), Error);
}

TEST(Pipeline, ProcessClipChain) {
  std::mt19937_64 rng(71);
  const auto raw = test::make_clip(rng, {.frames = 15, .body_missing = 0.2, .hand_missing = 0.3});
  PipelineConfig cfg;
  cfg.max_gap = 2;
  cfg.augmentation_params = preset_params(Preset::Medium);
  const auto out = process_clip(raw, cfg);
  EXPECT_EQ(out.state(), CoordinateState::Featurized);
  const auto expected = fill_sentinel(
      normalize(apply_protocol(interpolate(raw, 2), *cfg.augmentation_params, 0).clip, NormalizationMethod::SignSpace));
  EXPECT_EQ(out, expected);
}

TEST(Pipeline, RunWritesOutputsAndManifest) {
  TempDir d;
  write_inputs(d.path / "in", 5, 72);
  PoseFrame empty;
  write_clip(d.path / "in" / "void.pkpf", Clip("void", 25, {empty}));
  write_file_atomic(d.path / "in" / "orphan.pkpf", encode_pkpf(Clip("orphan", 25, {empty})));
  PipelineConfig cfg;
  cfg.input_dir = d.path / "in";
  cfg.output_dir = d.path / "out";
  cfg.augmentation = "light";
  cfg.augmentation_params = resolve_augmentation("light");
  cfg.max_gap = 2;
  cfg.workers = 3;
  const auto m = run_pipeline(cfg);
  EXPECT_EQ(m.ok, 5u);
  EXPECT_EQ(m.discarded, 1u);
  EXPECT_EQ(m.errors, 1u);
  EXPECT_TRUE(fs::exists(d.path / "out" / "manifest.json"));
  EXPECT_FALSE(fs::exists(d.path / "out" / "void.pkpf"));
  const auto c = read_clip(d.path / "out" / "clip3.pkpf");
  EXPECT_EQ(c.state(), CoordinateState::Featurized);
  EXPECT_EQ(fs::file_size(d.path / "out" / "clip3.f32"), 20u * 208 * 4);
  const auto side = nlohmann::json::parse(slurp(d.path / "out" / "clip3.json"));
  EXPECT_EQ(side.at("augmentation").at("rng"), std::string(kRngAlgorithm));
  const auto report = validate_dataset(d.path / "out");
  EXPECT_EQ(report.files_checked, 5u);
  EXPECT_TRUE(report.violations.empty());
}

TEST(Pipeline, WorkerCountDoesNotChangeBytes) {
  TempDir d;
  write_inputs(d.path / "in", 8, 73);
  PipelineConfig cfg;
  cfg.input_dir = d.path / "in";
  cfg.augmentation = "heavy";
  cfg.augmentation_params = resolve_augmentation("heavy");
  cfg.seed = 1234;
  cfg.max_gap = 3;
  cfg.output_dir = d.path / "a";
  cfg.workers = 1;
  run_pipeline(cfg);
  cfg.output_dir = d.path / "b";
  cfg.workers = 4;
  run_pipeline(cfg);
  for (const auto& f : fs::directory_iterator(d.path / "a")) {
    if (f.path().filename() == "manifest.json") continue;
    EXPECT_EQ(slurp(f.path()), slurp(d.path / "b" / f.path().filename())) << f.path();
  }
}

TEST(Pipeline, DuplicateIdsAreErrors) {
  TempDir d;
  std::mt19937_64 rng(74);
  fs::create_directories(d.path / "in");
  write_clip(d.path / "in" / "a.pkpf", test::make_clip(rng, {.frames = 3}, "same"));
  write_clip(d.path / "in" / "b.pkpf", test::make_clip(rng, {.frames = 3}, "same"));
  PipelineConfig cfg;
  cfg.input_dir = d.path / "in";
  cfg.output_dir = d.path / "out";
  const auto m = run_pipeline(cfg);
  EXPECT_EQ(m.ok, 1u);
  EXPECT_EQ(m.errors, 1u);
}

#ifdef POSEPREP_CLI
TEST(Cli, RunAndValidate) {
  TempDir d;
  write_inputs(d.path / "in", 3, 75);
  std::ofstream(d.path / "run.toml") << "input_dir = \"in\"\noutput_dir = \"out\"\nmax_gap = 2\naugmentation = \"medium\"\n";
  const std::string cli = POSEPREP_CLI;
  const auto quiet = " > " + (d.path / "log.txt").string() + " 2>&1";
  EXPECT_EQ(std::system((cli + " run --config " + (d.path / "run.toml").string() + " --workers 2" + quiet).c_str()), 0);
  EXPECT_EQ(std::system((cli + " validate --input " + (d.path / "out").string() + quiet).c_str()), 0);
  EXPECT_EQ(std::system((cli + " stats gaps --format tsv --input " + (d.path / "in").string() + " --output " +
                         (d.path / "gaps.tsv").string() + quiet)
                            .c_str()),
            0);
  const auto s = gap_statistics_from_tsv(slurp(d.path / "gaps.tsv"));
  std::vector<Clip> clips;
  for (const auto& f : list_clip_files(d.path / "in")) clips.push_back(read_clip(f));
  EXPECT_EQ(s, gap_statistics(clips));
  write_file_atomic(d.path / "out" / "clip0.pkpf", "junk");
  EXPECT_NE(std::system((cli + " validate --input " + (d.path / "out").string() + quiet).c_str()), 0);
}
#endif
