// avsync: synthetic stream generation, MFCC extraction, audio-led sync
// checking, Monte Carlo evaluation and detector scoring.
//
// Exit codes: 0 success / no sync error, 1 sync error flagged (check),
// 2 configuration or input error.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "avsync/config.hpp"
#include "avsync/errors.hpp"
#include "avsync/pipeline.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> seed;
  std::optional<std::string> audio;
  std::optional<std::string> labels;
  std::optional<std::string> audio_scores;
  std::optional<std::string> video_scores;
  std::optional<std::string> out;
  std::optional<std::string> trials;
  std::optional<bool> inject;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "key = value run-config file");
  cmd->add_option("--seed", f.seed, "seed for every stochastic stage");
  cmd->add_option("--audio", f.audio, "mono or stereo WAV at 48 kHz");
  cmd->add_option("--labels", f.labels, "label track (JSON-lines or CSV)");
  cmd->add_option("--audio-scores", f.audio_scores, "audio segment scores (index,score CSV)");
  cmd->add_option("--video-scores", f.video_scores, "video block scores (index,score CSV)");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_flag("--inject,!--no-inject", f.inject, "inject random A/V offsets");
  cmd->add_option("--set", f.sets, "override any config key (key=value)")->take_all();
}

avsync::RunConfig build_config(const Flags& f) {
  avsync::RunConfig config = f.config.empty() ? avsync::RunConfig{} : avsync::load_config(f.config);
  auto set = [&config](const char* key, const std::optional<std::string>& value) {
    if (value) avsync::apply_setting(config, key, *value);
  };
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw avsync::ConfigError("--set expects key=value, got '" + kv + "'");
    avsync::apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  set("seed", f.seed);
  set("audio", f.audio);
  set("labels", f.labels);
  set("audio_scores", f.audio_scores);
  set("video_scores", f.video_scores);
  set("out", f.out);
  set("montecarlo.trials", f.trials);
  if (f.inject) avsync::apply_setting(config, "inject", *f.inject ? "true" : "false");
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audio/video sync error detection on hit events"};
  app.require_subcommand(1);
  Flags flags;

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"synth", "generate a synthetic labelled A/V event stream"},
      {"extract", "write 61x60x3 MFCC feature images for every audio segment"},
      {"check", "search the video neighbourhood of every audio hit; exit 1 on sync errors"},
      {"montecarlo", "repeat the check pipeline with stochastic detectors over seeded trials"},
      {"eval", "raw and adjacency-adjusted confusion matrices for the audio detector"},
  };
  std::vector<CLI::App*> commands;
  for (const auto& s : subs) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, flags);
    if (std::string(s.name) == "montecarlo") {
      cmd->add_option("--trials", flags.trials, "number of trials");
    }
    commands.push_back(cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return avsync::kExitConfigError;
  }

  avsync::RunConfig config;
  try {
    config = build_config(flags);
  } catch (const avsync::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return avsync::kExitConfigError;
  }

  for (auto* cmd : commands) {
    if (cmd->parsed()) {
      return avsync::run_command(avsync::parse_command(cmd->get_name()), config, std::cout,
                                 std::cerr);
    }
  }
  return avsync::kExitConfigError;
}
