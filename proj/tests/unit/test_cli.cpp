// Drives the built `avsync` executable and checks the exit-code contract.
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "avsync/audio.hpp"
#include "avsync/features.hpp"
#include "unit/temp_dir.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

Run run_cli(const std::string& args, const fs::path& scratch) {
  const auto log = scratch / "cli_output.txt";
  const std::string cmd = std::string(AVSYNC_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::ostringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

class Cli : public ::testing::Test {
 protected:
  // 60 s rally, written once per test.
  fs::path synth(const std::string& name, const std::string& extra = "") {
    const auto out = dir_ / name;
    const auto r = run_cli("synth --seed 11 --out " + q(out) +
                              " --set synth.rally_hits=20 --set synth.snr_db=30 " + extra,
                          dir_.path());
    EXPECT_EQ(r.code, 0) << r.output;
    return out;
  }
  testing_support::TempDir dir_;
};

}  // namespace

TEST_F(Cli, SynthWritesArtifactsDeterministically) {
  const auto a = synth("a");
  const auto b = synth("b");
  for (const auto* f : {"audio.wav", "labels.jsonl", "video_truth.csv", "manifest.json"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST_F(Cli, SynthCollisionExitsTwoNamingFrame) {
  const auto r = run_cli("synth --seed 1 --out " + q(dir_ / "bad") +
                            " --set synth.hits=40,80 --set synth.bounces=80",
                        dir_.path());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("80"), std::string::npos) << r.output;
}

TEST_F(Cli, SynthWithoutSeedExitsTwo) {
  EXPECT_EQ(run_cli("synth --out " + q(dir_ / "x"), dir_.path()).code, 2);
}

TEST_F(Cli, UnknownFlagExitsTwo) {
  EXPECT_EQ(run_cli("check --bogus", dir_.path()).code, 2);
  EXPECT_EQ(run_cli("check --set nonsense=1 --seed 1", dir_.path()).code, 2);
}

TEST_F(Cli, ExtractSixtySeconds) {
  const auto s = synth("s", "--set synth.duration_s=60");
  const auto out = dir_ / "feat";
  const auto r = run_cli("extract --audio " + q(s / "audio.wav") + " --labels " +
                            q(s / "labels.jsonl") + " --out " + q(out),
                        dir_.path());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto manifest = nlohmann::json::parse(slurp(out / "features.json"));
  EXPECT_EQ(manifest["records"].size(), 1497u);
  EXPECT_EQ(manifest["shape"], nlohmann::json::array({61, 60, 3}));
  EXPECT_EQ(fs::file_size(out / "features.bin"), 12u + 1497u * 61u * 60u * 3u * 4u);

  std::ifstream labels(s / "labels.jsonl");
  std::string line;
  std::vector<std::string> names;
  while (std::getline(labels, line)) names.push_back(nlohmann::json::parse(line)["label"]);
  for (const auto& rec : manifest["records"]) {
    EXPECT_EQ(rec["label"], names[rec["segment_index"].get<std::size_t>()]);
    EXPECT_EQ(rec["start_sample"], rec["segment_index"].get<std::int64_t>() * 1920);
  }
}

TEST_F(Cli, ExtractRejectsOtherSampleRates) {
  avsync::AudioBuffer buf;
  buf.sample_rate = 44100;
  buf.samples.assign(44100, 0.0f);
  avsync::write_wav(dir_ / "cd.wav", buf);
  const auto r = run_cli("extract --audio " + q(dir_ / "cd.wav") + " --out " + q(dir_ / "f"),
                        dir_.path());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("44100"), std::string::npos) << r.output;
}

TEST_F(Cli, CheckSynchronisedIsZeroInjectedIsOne) {
  const auto s = synth("s");
  const std::string inputs = "--audio " + q(s / "audio.wav") + " --labels " +
                             q(s / "labels.jsonl") + " --video-scores " +
                             q(s / "video_truth.csv");
  const auto ok = run_cli("check " + inputs + " --out " + q(dir_ / "c0"), dir_.path());
  EXPECT_EQ(ok.code, 0) << ok.output;

  const auto bad = run_cli("check " + inputs + " --seed 5 --inject --set inject.fraction=1 --out " +
                              q(dir_ / "c1"),
                          dir_.path());
  EXPECT_EQ(bad.code, 1) << bad.output;
  const auto report = nlohmann::json::parse(slurp(dir_ / "c1" / "report.json"));
  EXPECT_EQ(report["summary"]["flagged"], report["summary"]["verdicts"]);
  EXPECT_EQ(report["summary"]["injected"], report["summary"]["verdicts"]);
  EXPECT_EQ(report["config"]["settings"]["inject.fraction"], "1");
}

TEST_F(Cli, CheckConfigFileAndFlagOverride) {
  const auto s = synth("s");
  {
    std::ofstream conf(dir_ / "run.conf");
    conf << "audio = s/audio.wav\nlabels = s/labels.jsonl\nved = truth\n"
            "inject = true\ninject.fraction = 1\nseed = 9\nout = from_file\n";
  }
  EXPECT_EQ(run_cli("check --config " + q(dir_ / "run.conf"), dir_.path()).code, 1);
  EXPECT_TRUE(fs::exists(dir_ / "from_file" / "verdicts.jsonl"));
  const auto r = run_cli("check --config " + q(dir_ / "run.conf") + " --no-inject --out " +
                            q(dir_ / "flagged_off"),
                        dir_.path());
  EXPECT_EQ(r.code, 0) << r.output;
}

TEST_F(Cli, CheckWithoutVideoExitsTwo) {
  const auto s = synth("s");
  const auto r = run_cli("check --audio " + q(s / "audio.wav") + " --out " + q(dir_ / "c"),
                        dir_.path());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("video"), std::string::npos) << r.output;
}

TEST_F(Cli, CheckMissingInputFileExitsTwo) {
  EXPECT_EQ(run_cli("check --audio-scores " + q(dir_ / "nope.csv") + " --video-scores " +
                       q(dir_ / "nope2.csv"),
                   dir_.path())
                .code,
            2);
}

TEST_F(Cli, EvalWritesTables) {
  const auto s = synth("s");
  const auto r = run_cli("eval --audio " + q(s / "audio.wav") + " --labels " +
                            q(s / "labels.jsonl") + " --out " + q(dir_ / "e"),
                        dir_.path());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto j = nlohmann::json::parse(slurp(dir_ / "e" / "eval.json"));
  EXPECT_EQ(j["raw"]["tp"], 20);
  EXPECT_EQ(j["raw"]["fp"], 0);
  EXPECT_NE(slurp(dir_ / "e" / "eval.txt").find("Predicted Positives"), std::string::npos);
}

TEST_F(Cli, MonteCarloPerfectAndZeroTrials) {
  const auto r = run_cli("montecarlo --seed 3 --trials 4 --set aed.tpr=1 --set aed.fpr=0 "
                        "--set ved.tpr=1 --set montecarlo.hits_per_trial=50 --out " +
                            q(dir_ / "mc"),
                        dir_.path());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto j = nlohmann::json::parse(slurp(dir_ / "mc" / "montecarlo.json"));
  EXPECT_EQ(j["mean_precision"], 1.0);
  EXPECT_EQ(j["mean_recall"], 1.0);
  EXPECT_EQ(j["stddev_precision"], 0.0);
  EXPECT_EQ(run_cli("montecarlo --seed 3 --trials 0 --out " + q(dir_ / "mc0"), dir_.path()).code, 2);
}
