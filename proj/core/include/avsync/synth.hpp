#pragma once

// Synthetic, perfectly synchronised event streams: PCM audio with damped
// bursts at hit (and quieter bounce) frames over background noise, the
// matching per-frame labels, and the ground-truth video block hits.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "avsync/audio.hpp"
#include "avsync/detectors.hpp"
#include "avsync/timeline.hpp"

namespace avsync {

/// Exponentially decaying sinusoid a * exp(-t / decay) * sin(2 pi f t).
struct BurstSpec {
  double decay_ms = 20.0;
  double center_freq_hz = 4000.0;
  double amplitude = 0.5;
};

struct BackgroundSpec {
  /// RMS of white Gaussian noise.
  double noise_level = 0.005;
  /// RMS of optional band-limited "crowd" noise; 0 disables it.
  double crowd_level = 0.0;
  double crowd_lo_hz = 300.0;
  double crowd_hi_hz = 3000.0;
};

struct SynthSpec {
  double duration_s = 60.0;
  ClockSpec clock{};
  std::vector<std::int64_t> hit_frames;
  std::vector<std::int64_t> bounce_frames;
  BurstSpec hit{};
  BurstSpec bounce{15.0, 1000.0, 0.15};
  BackgroundSpec background{};
  BlockTruth video_truth = BlockTruth::StartFrame;
  std::uint64_t seed = 0;

  [[nodiscard]] std::int64_t frame_count() const;
  [[nodiscard]] std::int64_t sample_count() const;

  /// 20 log10(hit amplitude / noise RMS); nullopt without noise.
  [[nodiscard]] std::optional<double> snr_db() const;
  /// Sets the noise RMS so that snr_db() == db.
  void set_snr_db(double db);

  /// Throws SpecError (naming the frame for hit/bounce collisions).
  void validate() const;
};

struct SynthOutput {
  AudioBuffer audio;
  LabelTrack labels;
  DetectionStream video_truth{StreamKind::VideoBlock};
};

SynthOutput generate(const SynthSpec& spec);

/// Labels only, without rendering audio.
LabelTrack make_label_track(const SynthSpec& spec);

/// Event bursts only (no background).
AudioBuffer render_events(const SynthSpec& spec);
/// Background only (white noise plus optional crowd band).
AudioBuffer render_background(const SynthSpec& spec);

/// Number of samples a burst lasts before it decays below 1e-4 of its peak.
std::int64_t burst_length(const BurstSpec& burst, int sample_rate);

/// Replaces the template's events with a rally: `n_hits` hits whose gaps are
/// uniform draws from [min_gap, max_gap] frames, a bounce halfway between
/// consecutive hits, min_gap frames of lead-in and tail. The duration is
/// extended when the rally does not fit. Throws SpecError for infeasible
/// spacing.
SynthSpec make_rally(SynthSpec tmpl, int n_hits, int min_gap, int max_gap);

nlohmann::json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

struct SynthArtifacts {
  std::filesystem::path audio;
  std::filesystem::path labels;
  std::filesystem::path video_truth;
  std::filesystem::path manifest;
};

/// Writes audio.wav, labels.jsonl, video_truth.csv and manifest.json into
/// `dir` (created if needed).
SynthArtifacts write_artifacts(const SynthOutput& output, const SynthSpec& spec,
                               const std::filesystem::path& dir);

}  // namespace avsync
