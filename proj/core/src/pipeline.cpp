#include "avsync/pipeline.hpp"

#include <fstream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "avsync/errors.hpp"
#include "avsync/evaluation.hpp"
#include "avsync/features.hpp"
#include "parallel.hpp"

namespace avsync {

namespace {

enum SeedStage : std::uint64_t { kAudioOracle = 11, kVideoOracle = 12, kInjection = 13 };

std::optional<LabelTrack> load_labels(const RunConfig& config) {
  if (!config.labels) return std::nullopt;
  return read_label_track(*config.labels, config.clock);
}

std::optional<AudioBuffer> load_audio(const RunConfig& config) {
  if (!config.audio) return std::nullopt;
  return read_wav(*config.audio, config.clock.sample_rate);
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

/// Audio segment universe: segments that fit the audio (when present) and
/// have a label (when present).
std::int64_t audio_universe(const RunConfig& config, const std::optional<LabelTrack>& labels,
                            const std::optional<AudioBuffer>& audio) {
  std::int64_t n = -1;
  if (audio) n = SegmentGrid(config.clock, audio->size(), config.mfcc.segment_len).segment_count();
  if (labels) {
    const auto from_labels =
        SegmentGrid::for_frames(config.clock, labels->size(), config.mfcc.segment_len).segment_count();
    n = n < 0 ? from_labels : std::min(n, from_labels);
  }
  return n;
}

DetectionStream audio_detections(const RunConfig& config, const std::optional<LabelTrack>& labels,
                                 const std::optional<AudioBuffer>& audio) {
  auto source = config.aed;
  if (source == AudioSource::Auto) {
    if (config.audio_scores) source = AudioSource::Scores;
    else if (audio) source = AudioSource::Dsp;
    else throw ConfigError("no audio detections: give --audio-scores, --audio (dsp) or aed = oracle");
  }
  switch (source) {
    case AudioSource::Scores:
      if (!config.audio_scores) throw ConfigError("aed = scores needs audio_scores");
      return load_scores(*config.audio_scores, StreamKind::AudioSegment, config.audio_threshold);
    case AudioSource::Dsp: {
      if (!audio) throw ConfigError("aed = dsp needs an audio file");
      const SegmentGrid grid(config.clock, audio->size(), config.mfcc.segment_len);
      auto stream = dsp_aed(*audio, grid, config.dsp);
      if (labels) {
        const auto n = audio_universe(config, labels, audio);
        std::vector<Decision> kept;
        for (const auto& d : stream.decisions()) {
          if (d.index < n) kept.push_back(d);
        }
        stream = DetectionStream(StreamKind::AudioSegment, std::move(kept));
      }
      return stream;
    }
    case AudioSource::Oracle: {
      if (!labels) throw ConfigError("aed = oracle needs labels");
      auto quality = config.aed_quality;
      quality.seed = config.stage_seed(kAudioOracle, "aed = oracle");
      return oracle_detector(labels->truncated(audio_universe(config, labels, audio)),
                             EventLabel::Hit, quality, StreamKind::AudioSegment);
    }
    case AudioSource::Auto:
      break;
  }
  throw ConfigError("unresolved audio detector source");
}

DetectionStream video_detections(const RunConfig& config, const std::optional<LabelTrack>& labels) {
  auto source = config.ved;
  if (source == VideoSource::Auto) {
    if (!config.video_scores) {
      throw ConfigError("no video detections: give --video-scores or set ved = oracle|truth");
    }
    source = VideoSource::Scores;
  }
  switch (source) {
    case VideoSource::Scores:
      if (!config.video_scores) throw ConfigError("ved = scores needs video_scores");
      return load_scores(*config.video_scores, StreamKind::VideoBlock, config.video_threshold);
    case VideoSource::Truth:
      if (!labels) throw ConfigError("ved = truth needs labels");
      return video_truth(*labels, config.video_truth);
    case VideoSource::Oracle: {
      if (!labels) throw ConfigError("ved = oracle needs labels");
      auto quality = config.ved_quality;
      quality.seed = config.stage_seed(kVideoOracle, "ved = oracle");
      return oracle_detector(video_truth_mask(*labels, config.video_truth), quality,
                             StreamKind::VideoBlock);
    }
    case VideoSource::Auto:
      break;
  }
  throw ConfigError("unresolved video detector source");
}

std::int64_t total_frames(const RunConfig& config, const std::optional<LabelTrack>& labels,
                          const std::optional<AudioBuffer>& audio, const DetectionStream& a,
                          const DetectionStream& v) {
  if (config.frames) return *config.frames;
  if (labels) return labels->size();
  if (audio) return audio->size() / config.clock.samples_per_frame();
  return std::max(a.max_index(), v.max_index()) + config.search.block_len;
}

void check_inputs_exist(const RunConfig& config) {
  for (const auto* p : {&config.audio, &config.labels, &config.audio_scores, &config.video_scores}) {
    if (*p && !std::filesystem::exists(**p)) {
      throw ConfigError("input file does not exist: " + (*p)->string());
    }
  }
}

}  // namespace

Command parse_command(std::string_view name) {
  if (name == "synth") return Command::Synth;
  if (name == "extract") return Command::Extract;
  if (name == "check") return Command::Check;
  if (name == "montecarlo") return Command::MonteCarlo;
  if (name == "eval") return Command::Eval;
  throw ConfigError("unknown command '" + std::string(name) + "'");
}

int cmd_synth(const RunConfig& config, std::ostream& log) {
  if (!config.seed) throw ConfigError("synth needs a seed (set 'seed' or --seed)");
  auto spec = config.resolved_synth_spec();
  spec.seed = *config.seed;
  const auto output = generate(spec);
  const auto artifacts = write_artifacts(output, spec, config.out_dir);
  log << "synth: " << output.labels.size() << " frames, " << spec.hit_frames.size() << " hits, "
      << spec.bounce_frames.size() << " bounces -> " << artifacts.manifest.string() << '\n';
  return kExitOk;
}

int cmd_extract(const RunConfig& config, std::ostream& log) {
  check_inputs_exist(config);
  if (!config.audio) throw ConfigError("extract needs an audio file (--audio)");
  auto params = config.mfcc;
  params.sample_rate = config.clock.sample_rate;
  const FeatureExtractor extractor(params);
  const auto labels = load_labels(config);
  const auto audio = load_audio(config);
  const SegmentGrid grid(config.clock, audio->size(), params.segment_len);
  const auto count = labels ? grid.aligned_count(*labels) : grid.segment_count();

  std::filesystem::create_directories(config.out_dir);
  const auto bin_path = config.out_dir / "features.bin";
  FeatureDumpWriter writer(bin_path, params.n_mfcc, params.n_windows());
  nlohmann::json records = nlohmann::json::array();

  constexpr std::int64_t kChunk = 128;
  std::vector<FeatureImage> chunk;
  for (std::int64_t first = 0; first < count; first += kChunk) {
    const auto n = std::min(kChunk, count - first);
    chunk.assign(static_cast<std::size_t>(n), FeatureImage{});
    detail::parallel_for(static_cast<std::size_t>(n), 0, [&](std::size_t k) {
      chunk[k] = extractor.extract(*audio, grid, first + static_cast<std::int64_t>(k));
    });
    for (std::int64_t k = 0; k < n; ++k) {
      const auto i = first + k;
      writer.append(chunk[static_cast<std::size_t>(k)]);
      nlohmann::json r{{"segment_index", i}, {"start_sample", segment_sample_range(grid, i).begin}};
      if (labels) r["label"] = std::string(to_string(segment_label(*labels, grid, i)));
      records.push_back(std::move(r));
    }
  }

  nlohmann::json manifest;
  manifest["features_file"] = bin_path.filename().string();
  manifest["dtype"] = "float32";
  manifest["layout"] = "row-major (coefficient, window, channel); channels = mfcc, delta, delta2";
  manifest["shape"] = {params.n_mfcc, params.n_windows(), FeatureImage::kChannels};
  manifest["header_bytes"] = 12;
  manifest["sample_rate"] = params.sample_rate;
  manifest["segment_len"] = params.segment_len;
  manifest["stride"] = grid.stride();
  manifest["records"] = std::move(records);
  manifest["config"] = config_echo(config);
  write_json(config.out_dir / "features.json", manifest);
  log << "extract: " << writer.records() << " segments of " << params.n_mfcc << "x"
      << params.n_windows() << "x3 -> " << bin_path.string() << '\n';
  return kExitOk;
}

int cmd_check(const RunConfig& config, std::ostream& log) {
  check_inputs_exist(config);
  config.search.validate();
  const auto labels = load_labels(config);
  const auto audio = config.aed == AudioSource::Scores ||
                             (config.aed == AudioSource::Auto && config.audio_scores)
                         ? std::nullopt
                         : load_audio(config);
  const auto video = video_detections(config, labels);
  const auto audio_hits = audio_detections(config, labels, audio);
  const auto frames = total_frames(config, labels, audio, audio_hits, video);

  OffsetMap injected;
  if (config.inject) {
    auto spec = config.offsets;
    spec.seed = config.stage_seed(kInjection, "offset injection");
    injected = inject_offsets(audio_hits, spec);
  }
  const auto verdicts = run_sync_detection(audio_hits, video, config.search, frames, &injected);
  const auto report = sync_error_report(verdicts, injected);
  const auto summary = summarize(verdicts);

  std::filesystem::create_directories(config.out_dir);
  {
    std::ofstream out(config.out_dir / "verdicts.jsonl");
    if (!out) throw ConfigError("cannot write verdicts to " + config.out_dir.string());
    write_verdicts(out, verdicts);
  }
  nlohmann::json j;
  j["sync"] = to_json(report);
  j["summary"] = {{"verdicts", summary.verdicts},
                  {"flagged", summary.flagged},
                  {"injected", summary.injected},
                  {"blocks_dropped", summary.blocks_dropped},
                  {"frames", frames}};
  if (labels) {
    const auto universe = audio_universe(config, labels, audio);
    if (audio_hits.max_index() < universe) {
      std::vector<std::int64_t> truth;
      for (auto f : labels->frames_with(EventLabel::Hit)) {
        if (f < universe) truth.push_back(f);
      }
      j["audio_detector"] = to_json(detector_report(audio_hits, truth, universe, config.eval_radius));
    }
  }
  j["config"] = config_echo(config);
  write_json(config.out_dir / "report.json", j);

  log << "check: " << summary.verdicts << " audio hits, " << summary.flagged << " flagged";
  if (config.inject) log << ", " << summary.injected << " injected";
  log << '\n';
  return summary.flagged > 0 ? kExitSyncError : kExitOk;
}

int cmd_eval(const RunConfig& config, std::ostream& log) {
  check_inputs_exist(config);
  const auto labels = load_labels(config);
  if (!labels) throw ConfigError("eval needs labels (--labels)");
  const auto audio = config.aed == AudioSource::Scores ||
                             (config.aed == AudioSource::Auto && config.audio_scores)
                         ? std::nullopt
                         : load_audio(config);
  const auto predicted = audio_detections(config, labels, audio);
  const auto universe = audio_universe(config, labels, audio);
  std::vector<std::int64_t> truth;
  for (auto f : labels->frames_with(EventLabel::Hit)) {
    if (f < universe) truth.push_back(f);
  }
  const auto report = detector_report(predicted, truth, universe, config.eval_radius);

  std::filesystem::create_directories(config.out_dir);
  nlohmann::json j = to_json(report);
  j["universe"] = universe;
  j["radius"] = config.eval_radius;
  j["config"] = config_echo(config);
  write_json(config.out_dir / "eval.json", j);

  const auto text = format_table(report.raw, "Audio detector confusion matrix") + "\n" +
                    format_table(*report.adjusted, "Adjusted audio detector confusion matrix (" +
                                                       std::to_string(report.pairs) +
                                                       " adjacent pairs)");
  {
    std::ofstream out(config.out_dir / "eval.txt");
    out << text;
  }
  log << text;
  const auto fmt = [](const std::optional<double>& v) {
    return v ? std::to_string(*v * 100.0) + "%" : std::string("undefined");
  };
  log << "precision " << fmt(report.metrics.precision) << ", recall " << fmt(report.metrics.recall)
      << '\n';
  return kExitOk;
}

int cmd_montecarlo(const RunConfig& config, std::ostream& log) {
  if (!config.seed) throw ConfigError("montecarlo needs a seed (set 'seed' or --seed)");
  auto mc = config.montecarlo;
  mc.aed = config.aed_quality;
  mc.ved = config.ved_quality;
  mc.video_truth = config.video_truth;
  mc.policy = config.search;
  mc.offsets = config.offsets;
  mc.seed = *config.seed;
  const auto summary = run_montecarlo(mc);

  std::filesystem::create_directories(config.out_dir);
  auto j = to_json(summary);
  j["config"] = config_echo(config);
  write_json(config.out_dir / "montecarlo.json", j);

  const auto fmt = [](const std::optional<double>& v) {
    return v ? std::to_string(*v) : std::string("undefined");
  };
  log << "montecarlo: " << summary.trials.size() << " trials, " << summary.pooled.total()
      << " verdicts; precision mean " << fmt(summary.mean_precision) << " sd "
      << fmt(summary.stddev_precision) << ", recall mean " << fmt(summary.mean_recall) << " sd "
      << fmt(summary.stddev_recall) << '\n';
  return kExitOk;
}

int run_command(Command command, const RunConfig& config, std::ostream& log, std::ostream& err) {
  try {
    switch (command) {
      case Command::Synth:
        return cmd_synth(config, log);
      case Command::Extract:
        return cmd_extract(config, log);
      case Command::Check:
        return cmd_check(config, log);
      case Command::MonteCarlo:
        return cmd_montecarlo(config, log);
      case Command::Eval:
        return cmd_eval(config, log);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitConfigError;
}

}  // namespace avsync
