#pragma once

// Run configuration for the command-line pipeline. The file format is plain
// `key = value` lines; `#` starts a comment. Later settings override earlier
// ones, so command-line flags are applied after the file.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "avsync/detectors.hpp"
#include "avsync/features.hpp"
#include "avsync/montecarlo.hpp"
#include "avsync/sync_engine.hpp"
#include "avsync/synth.hpp"

namespace avsync {

enum class AudioSource { Auto, Scores, Dsp, Oracle };
enum class VideoSource { Auto, Scores, Oracle, Truth };

struct RallySettings {
  int hits = 0;
  int min_gap = 25;
  int max_gap = 75;
};

struct RunConfig {
  std::optional<std::filesystem::path> audio;
  std::optional<std::filesystem::path> labels;
  std::optional<std::filesystem::path> audio_scores;
  std::optional<std::filesystem::path> video_scores;
  std::filesystem::path out_dir = "avsync_out";
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> frames;
  ClockSpec clock{};

  AudioSource aed = AudioSource::Auto;
  VideoSource ved = VideoSource::Auto;
  double audio_threshold = 0.5;
  double video_threshold = 0.5;
  DspAedParams dsp{};
  DetectorQuality aed_quality{kReferenceAedTpr, kReferenceAedFpr, 0};
  DetectorQuality ved_quality{1.0, 0.0, 0};
  BlockTruth video_truth = BlockTruth::StartFrame;

  MfccParams mfcc{};
  SearchPolicy search{};
  bool inject = false;
  OffsetSpec offsets{};
  int eval_radius = 1;

  SynthSpec synth{};
  std::optional<double> synth_snr_db;
  RallySettings rally{};

  MonteCarloConfig montecarlo{};

  /// Every applied key with its final textual value, for report echoes.
  std::map<std::string, std::string> settings;

  /// Seed for a stochastic stage; throws ConfigError when no seed is set.
  [[nodiscard]] std::uint64_t stage_seed(std::uint64_t stage, const std::string& what) const;

  /// Synth spec with rally and SNR settings applied.
  [[nodiscard]] SynthSpec resolved_synth_spec() const;
};

/// Applies one setting. Throws ConfigError for unknown keys or bad values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Parses `key = value` lines. Relative paths resolve against `base_dir`.
void apply_config_stream(RunConfig& config, std::istream& in,
                         const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json config_echo(const RunConfig& config);

/// Keys understood by apply_setting, for help output.
const std::vector<std::string>& config_keys();

}  // namespace avsync
