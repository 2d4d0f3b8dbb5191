#include "avsync/montecarlo.hpp"

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "avsync/errors.hpp"
#include "avsync/synth.hpp"
#include "parallel.hpp"

namespace avsync {

namespace {

enum Stage : std::uint64_t { kRally = 1, kAudio = 2, kVideo = 3, kInject = 4 };

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void mean_stddev(const std::vector<double>& xs, std::optional<double>& mean,
                 std::optional<double>& stddev) {
  if (xs.empty()) return;
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double m = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  mean = m;
  stddev = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
}

}  // namespace

void MonteCarloConfig::validate() const {
  if (trials <= 0) throw ConfigError("montecarlo needs at least one trial");
  if (hits_per_trial < 0) throw ConfigError("hits_per_trial must be non-negative");
  aed.validate();
  ved.validate();
  policy.validate();
  offsets.validate();
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t trial, std::uint64_t stage) {
  return splitmix64(splitmix64(splitmix64(seed) ^ trial) ^ stage);
}

TrialResult run_trial(const MonteCarloConfig& config, int trial) {
  const auto t = static_cast<std::uint64_t>(trial);
  SynthSpec tmpl;
  tmpl.duration_s = 1.0;
  tmpl.background.noise_level = 0.0;
  tmpl.seed = derive_seed(config.seed, t, kRally);
  const auto spec = make_rally(tmpl, config.hits_per_trial, config.min_gap, config.max_gap);
  const auto labels = make_label_track(spec);
  const auto frames = labels.size();
  const auto segments = SegmentGrid::for_frames(labels.clock(), frames).segment_count();

  std::vector<bool> audio_truth(static_cast<std::size_t>(segments));
  std::vector<std::int64_t> audio_positives;
  for (std::int64_t i = 0; i < segments; ++i) {
    audio_truth[static_cast<std::size_t>(i)] = labels.at(i) == EventLabel::Hit;
    if (audio_truth[static_cast<std::size_t>(i)]) audio_positives.push_back(i);
  }

  auto aed_quality = config.aed;
  aed_quality.seed = derive_seed(config.seed, t, kAudio);
  auto ved_quality = config.ved;
  ved_quality.seed = derive_seed(config.seed, t, kVideo);
  auto offsets_spec = config.offsets;
  offsets_spec.seed = derive_seed(config.seed, t, kInject);

  const auto audio = oracle_detector(audio_truth, aed_quality, StreamKind::AudioSegment);
  const auto video = oracle_detector(video_truth_mask(labels, config.video_truth), ved_quality,
                                     StreamKind::VideoBlock);
  const auto injected = inject_offsets(audio, offsets_spec);
  const auto verdicts = run_sync_detection(audio, video, config.policy, frames, &injected);
  const auto report = sync_error_report(verdicts, injected);

  TrialResult result;
  result.trial = trial;
  result.seed = derive_seed(config.seed, t, 0);
  result.sync = report.raw;
  result.aed = confusion(audio, audio_positives, segments);
  result.frames = frames;
  result.metrics = report.metrics;
  return result;
}

MonteCarloSummary run_montecarlo(const MonteCarloConfig& config) {
  config.validate();
  MonteCarloSummary summary;
  summary.trials.resize(static_cast<std::size_t>(config.trials));
  detail::parallel_for(summary.trials.size(), config.threads, [&](std::size_t i) {
    summary.trials[i] = run_trial(config, static_cast<int>(i));
  });
  std::vector<double> precisions, recalls;
  for (const auto& t : summary.trials) {
    summary.pooled += t.sync;
    if (t.metrics.precision) precisions.push_back(*t.metrics.precision);
    if (t.metrics.recall) recalls.push_back(*t.metrics.recall);
  }
  summary.pooled_metrics = metrics(summary.pooled);
  mean_stddev(precisions, summary.mean_precision, summary.stddev_precision);
  mean_stddev(recalls, summary.mean_recall, summary.stddev_recall);
  return summary;
}

nlohmann::json to_json(const MonteCarloSummary& summary) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : summary.trials) {
    trials.push_back({{"trial", t.trial},
                      {"frames", t.frames},
                      {"sync", to_json(t.sync)},
                      {"audio_detector", to_json(t.aed)},
                      {"precision", metric_json(t.metrics.precision)},
                      {"recall", metric_json(t.metrics.recall)}});
  }
  nlohmann::json j;
  j["trials"] = std::move(trials);
  j["pooled"] = to_json(summary.pooled);
  j["pooled_precision"] = metric_json(summary.pooled_metrics.precision);
  j["pooled_recall"] = metric_json(summary.pooled_metrics.recall);
  j["mean_precision"] = metric_json(summary.mean_precision);
  j["stddev_precision"] = metric_json(summary.stddev_precision);
  j["mean_recall"] = metric_json(summary.mean_recall);
  j["stddev_recall"] = metric_json(summary.stddev_recall);
  return j;
}

}  // namespace avsync
