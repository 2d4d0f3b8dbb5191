#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "avsync/config.hpp"
#include "avsync/errors.hpp"
#include "avsync/pipeline.hpp"
#include "unit/temp_dir.hpp"

using namespace avsync;

TEST(Config, KeyValueLinesWithComments) {
  RunConfig c;
  std::istringstream in(
      "# run settings\n"
      "seed = 42\n"
      "inject = yes   # trailing comment\n"
      "inject.fraction = 1\n"
      "search.block_offsets = -9, -6, -3\n"
      "\n"
      "aed.tpr = 0.5\n");
  apply_config_stream(c, in);
  EXPECT_EQ(*c.seed, 42u);
  EXPECT_TRUE(c.inject);
  EXPECT_EQ(c.offsets.fraction, 1.0);
  EXPECT_EQ(c.search.block_offsets, (std::vector<int>{-9, -6, -3}));
  EXPECT_EQ(c.aed_quality.tpr, 0.5);
  EXPECT_EQ(c.settings.at("seed"), "42");
}

TEST(Config, UnknownKeyAndBadValue) {
  RunConfig c;
  EXPECT_THROW(apply_setting(c, "no.such.key", "1"), ConfigError);
  EXPECT_THROW(apply_setting(c, "seed", "-4"), ConfigError);
  EXPECT_THROW(apply_setting(c, "seed", "12abc"), ConfigError);
  EXPECT_THROW(apply_setting(c, "inject", "maybe"), ConfigError);
  EXPECT_THROW(apply_setting(c, "aed", "neural"), ConfigError);
}

TEST(Config, MissingEqualsNamesLine) {
  RunConfig c;
  std::istringstream in("seed = 1\nthis line is wrong\n");
  try {
    apply_config_stream(c, in);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos) << e.what();
  }
}

TEST(Config, RelativePathsResolveAgainstFile) {
  testing_support::TempDir dir;
  std::filesystem::create_directories(dir / "sub");
  {
    std::ofstream out(dir / "sub" / "run.conf");
    out << "audio = in/audio.wav\nout = results\nlabels = /abs/labels.jsonl\n";
  }
  const auto c = load_config(dir / "sub" / "run.conf");
  EXPECT_EQ(*c.audio, dir / "sub" / "in/audio.wav");
  EXPECT_EQ(c.out_dir, dir / "sub" / "results");
  EXPECT_EQ(*c.labels, std::filesystem::path("/abs/labels.jsonl"));
}

TEST(Config, LaterSettingsWin) {
  RunConfig c;
  apply_setting(c, "seed", "1");
  apply_setting(c, "seed", "2");
  EXPECT_EQ(*c.seed, 2u);
}

TEST(Config, StageSeedRequiresSeed) {
  RunConfig c;
  EXPECT_THROW((void)c.stage_seed(1, "thing"), ConfigError);
  c.seed = 5;
  EXPECT_NE(c.stage_seed(1, "a"), c.stage_seed(2, "b"));
  EXPECT_EQ(c.stage_seed(1, "a"), c.stage_seed(1, "a"));
}

TEST(Config, SynthSettingsResolve) {
  RunConfig c;
  apply_setting(c, "synth.rally_hits", "12");
  apply_setting(c, "synth.snr_db", "30");
  apply_setting(c, "synth.hits", "5, 9");
  const auto spec = c.resolved_synth_spec();
  EXPECT_EQ(spec.hit_frames.size(), 12u);
  EXPECT_NEAR(*spec.snr_db(), 30.0, 1e-9);
}

TEST(Config, EchoContainsAppliedKeys) {
  RunConfig c;
  apply_setting(c, "eval.radius", "2");
  const auto j = config_echo(c);
  EXPECT_EQ(j.dump().find("eval.radius") != std::string::npos, true);
}

TEST(Config, KeysListed) {
  const auto& keys = config_keys();
  EXPECT_NE(std::find(keys.begin(), keys.end(), "dsp.threshold"), keys.end());
  EXPECT_NE(std::find(keys.begin(), keys.end(), "montecarlo.trials"), keys.end());
}

TEST(Pipeline, ParseCommand) {
  EXPECT_EQ(parse_command("check"), Command::Check);
  EXPECT_EQ(parse_command("montecarlo"), Command::MonteCarlo);
  EXPECT_THROW(parse_command("train"), ConfigError);
}

TEST(Pipeline, ErrorsMapToExitTwo) {
  RunConfig c;
  std::ostringstream log, err;
  EXPECT_EQ(run_command(Command::Synth, c, log, err), kExitConfigError);
  EXPECT_NE(err.str().find("seed"), std::string::npos) << err.str();
}

TEST(Pipeline, InProcessSynthThenCheck) {
  testing_support::TempDir dir;
  RunConfig c;
  c.seed = 3;
  c.out_dir = dir / "synth";
  apply_setting(c, "synth.rally_hits", "8");
  std::ostringstream log, err;
  ASSERT_EQ(run_command(Command::Synth, c, log, err), kExitOk) << err.str();

  RunConfig check;
  check.seed = 3;
  check.audio = dir / "synth" / "audio.wav";
  check.labels = dir / "synth" / "labels.jsonl";
  check.video_scores = dir / "synth" / "video_truth.csv";
  check.out_dir = dir / "check";
  EXPECT_EQ(run_command(Command::Check, check, log, err), kExitOk) << err.str();
  std::ifstream rep(dir / "check" / "report.json");
  const auto j = nlohmann::json::parse(rep);
  EXPECT_EQ(j["summary"]["verdicts"], 8);
  EXPECT_EQ(j["summary"]["flagged"], 0);
}
