#include "avsync/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "avsync/errors.hpp"

namespace avsync {

namespace {

constexpr std::uint64_t kCrowdStream = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kRallyStream = 0xD1B54A32D192ED03ULL;

void validate_burst(const BurstSpec& b, const char* what, int sample_rate) {
  if (!(b.amplitude > 0.0)) throw SpecError(std::string(what) + " amplitude must be positive");
  if (!(b.decay_ms > 0.0)) throw SpecError(std::string(what) + " decay must be positive");
  if (!(b.center_freq_hz > 0.0 && b.center_freq_hz < sample_rate / 2.0)) {
    throw SpecError(std::string(what) + " frequency must lie in (0, sample_rate/2)");
  }
}

void add_burst(std::vector<float>& out, std::int64_t start, const BurstSpec& burst,
               int sample_rate) {
  const double tau = burst.decay_ms * 1e-3 * sample_rate;
  const double w = 2.0 * std::numbers::pi * burst.center_freq_hz / sample_rate;
  const auto len = burst_length(burst, sample_rate);
  const auto end = std::min<std::int64_t>(start + len, static_cast<std::int64_t>(out.size()));
  for (std::int64_t s = start; s < end; ++s) {
    const double t = static_cast<double>(s - start);
    out[static_cast<std::size_t>(s)] +=
        static_cast<float>(burst.amplitude * std::exp(-t / tau) * std::sin(w * t));
  }
}

/// RBJ constant-peak band-pass biquad.
void bandpass(std::vector<double>& x, double lo_hz, double hi_hz, int sample_rate) {
  const double f0 = std::sqrt(lo_hz * hi_hz);
  const double q = f0 / (hi_hz - lo_hz);
  const double w0 = 2.0 * std::numbers::pi * f0 / sample_rate;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  const double b0 = alpha / a0, b2 = -alpha / a0;
  const double a1 = -2.0 * std::cos(w0) / a0, a2 = (1.0 - alpha) / a0;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (auto& v : x) {
    const double y = b0 * v + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = v;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

}  // namespace

std::int64_t SynthSpec::frame_count() const {
  return static_cast<std::int64_t>(std::floor(duration_s * clock.fps + 1e-9));
}

std::int64_t SynthSpec::sample_count() const { return frame_count() * clock.samples_per_frame(); }

std::optional<double> SynthSpec::snr_db() const {
  if (!(background.noise_level > 0.0)) return std::nullopt;
  return 20.0 * std::log10(hit.amplitude / background.noise_level);
}

void SynthSpec::set_snr_db(double db) {
  background.noise_level = hit.amplitude / std::pow(10.0, db / 20.0);
}

void SynthSpec::validate() const {
  try {
    clock.validate();
  } catch (const ConfigError& e) {
    throw SpecError(e.what());
  }
  if (!(duration_s > 0.0)) throw SpecError("duration must be positive");
  validate_burst(hit, "hit", clock.sample_rate);
  validate_burst(bounce, "bounce", clock.sample_rate);
  if (background.noise_level < 0.0 || background.crowd_level < 0.0) {
    throw SpecError("background levels must be non-negative");
  }
  if (background.crowd_level > 0.0 &&
      !(background.crowd_lo_hz > 0.0 && background.crowd_hi_hz > background.crowd_lo_hz &&
        background.crowd_hi_hz < clock.sample_rate / 2.0)) {
    throw SpecError("crowd band must satisfy 0 < lo < hi < sample_rate/2");
  }
  const auto frames = frame_count();
  std::set<std::int64_t> hits;
  for (auto h : hit_frames) {
    if (h < 0 || h >= frames) {
      throw SpecError("hit frame " + std::to_string(h) + " outside [0, " + std::to_string(frames) +
                      ")");
    }
    if (!hits.insert(h).second) throw SpecError("duplicate hit frame " + std::to_string(h));
  }
  std::set<std::int64_t> bounces;
  for (auto b : bounce_frames) {
    if (b < 0 || b >= frames) {
      throw SpecError("bounce frame " + std::to_string(b) + " outside [0, " +
                      std::to_string(frames) + ")");
    }
    if (hits.contains(b)) {
      throw SpecError("frame " + std::to_string(b) + " is both a hit and a bounce");
    }
    if (!bounces.insert(b).second) throw SpecError("duplicate bounce frame " + std::to_string(b));
  }
}

std::int64_t burst_length(const BurstSpec& burst, int sample_rate) {
  const double tau = burst.decay_ms * 1e-3 * sample_rate;
  return static_cast<std::int64_t>(std::ceil(tau * std::log(1e4)));
}

AudioBuffer render_events(const SynthSpec& spec) {
  spec.validate();
  const int sr = spec.clock.sample_rate;
  const auto spf = spec.clock.samples_per_frame();
  AudioBuffer out{sr, std::vector<float>(static_cast<std::size_t>(spec.sample_count()), 0.0F)};
  for (auto h : spec.hit_frames) add_burst(out.samples, h * spf, spec.hit, sr);
  for (auto b : spec.bounce_frames) add_burst(out.samples, b * spf, spec.bounce, sr);
  return out;
}

AudioBuffer render_background(const SynthSpec& spec) {
  spec.validate();
  const auto n = static_cast<std::size_t>(spec.sample_count());
  AudioBuffer out{spec.clock.sample_rate, std::vector<float>(n, 0.0F)};
  if (spec.background.noise_level > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.background.noise_level);
    for (auto& s : out.samples) s = static_cast<float>(noise(rng));
  }
  if (spec.background.crowd_level > 0.0 && n > 0) {
    std::mt19937_64 rng(spec.seed ^ kCrowdStream);
    std::normal_distribution<double> white(0.0, 1.0);
    std::vector<double> crowd(n);
    for (auto& v : crowd) v = white(rng);
    bandpass(crowd, spec.background.crowd_lo_hz, spec.background.crowd_hi_hz,
             spec.clock.sample_rate);
    double energy = 0.0;
    for (double v : crowd) energy += v * v;
    const double scale = spec.background.crowd_level / std::sqrt(energy / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) out.samples[i] += static_cast<float>(crowd[i] * scale);
  }
  return out;
}

LabelTrack make_label_track(const SynthSpec& spec) {
  spec.validate();
  std::vector<EventLabel> labels(static_cast<std::size_t>(spec.frame_count()), EventLabel::Neither);
  for (auto h : spec.hit_frames) labels[static_cast<std::size_t>(h)] = EventLabel::Hit;
  for (auto b : spec.bounce_frames) labels[static_cast<std::size_t>(b)] = EventLabel::Bounce;
  return LabelTrack(spec.clock, std::move(labels));
}

SynthOutput generate(const SynthSpec& spec) {
  spec.validate();
  SynthOutput out;
  out.audio = render_background(spec);
  const auto events = render_events(spec);
  for (std::size_t i = 0; i < out.audio.samples.size(); ++i) out.audio.samples[i] += events.samples[i];
  out.labels = make_label_track(spec);
  out.video_truth = video_truth(out.labels, spec.video_truth);
  return out;
}

SynthSpec make_rally(SynthSpec tmpl, int n_hits, int min_gap, int max_gap) {
  if (n_hits < 0) throw SpecError("n_hits must be non-negative");
  if (min_gap < 2) throw SpecError("rally gaps must be at least 2 frames (hit, bounce, hit)");
  if (min_gap > max_gap) {
    throw SpecError("infeasible rally spacing [" + std::to_string(min_gap) + ", " +
                    std::to_string(max_gap) + "]");
  }
  std::mt19937_64 rng(tmpl.seed ^ kRallyStream);
  std::uniform_int_distribution<int> gap(min_gap, max_gap);
  tmpl.hit_frames.clear();
  tmpl.bounce_frames.clear();
  std::int64_t frame = min_gap;
  for (int k = 0; k < n_hits; ++k) {
    if (k > 0) {
      const int g = gap(rng);
      tmpl.bounce_frames.push_back(frame + g / 2);
      frame += g;
    }
    tmpl.hit_frames.push_back(frame);
  }
  const std::int64_t needed = n_hits == 0 ? 0 : frame + min_gap + 1;
  if (needed > tmpl.frame_count()) {
    tmpl.duration_s = static_cast<double>(needed) / tmpl.clock.fps;
  }
  return tmpl;
}

nlohmann::json to_json(const SynthSpec& spec) {
  auto burst = [](const BurstSpec& b) {
    return nlohmann::json{{"decay_ms", b.decay_ms},
                          {"center_freq_hz", b.center_freq_hz},
                          {"amplitude", b.amplitude}};
  };
  nlohmann::json j;
  j["duration_s"] = spec.duration_s;
  j["fps"] = spec.clock.fps;
  j["sample_rate"] = spec.clock.sample_rate;
  j["hit_frames"] = spec.hit_frames;
  j["bounce_frames"] = spec.bounce_frames;
  j["hit"] = burst(spec.hit);
  j["bounce"] = burst(spec.bounce);
  j["background"] = {{"noise_level", spec.background.noise_level},
                     {"crowd_level", spec.background.crowd_level},
                     {"crowd_lo_hz", spec.background.crowd_lo_hz},
                     {"crowd_hi_hz", spec.background.crowd_hi_hz}};
  const auto snr = spec.snr_db();
  j["snr_db"] = snr ? nlohmann::json(*snr) : nlohmann::json(nullptr);
  j["video_truth"] = std::string(to_string(spec.video_truth));
  j["seed"] = spec.seed;
  return j;
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec spec;
  try {
    auto burst = [](const nlohmann::json& b, BurstSpec def) {
      def.decay_ms = b.value("decay_ms", def.decay_ms);
      def.center_freq_hz = b.value("center_freq_hz", def.center_freq_hz);
      def.amplitude = b.value("amplitude", def.amplitude);
      return def;
    };
    spec.duration_s = j.value("duration_s", spec.duration_s);
    spec.clock.fps = j.value("fps", spec.clock.fps);
    spec.clock.sample_rate = j.value("sample_rate", spec.clock.sample_rate);
    spec.hit_frames = j.value("hit_frames", spec.hit_frames);
    spec.bounce_frames = j.value("bounce_frames", spec.bounce_frames);
    if (j.contains("hit")) spec.hit = burst(j["hit"], spec.hit);
    if (j.contains("bounce")) spec.bounce = burst(j["bounce"], spec.bounce);
    if (j.contains("background")) {
      const auto& b = j["background"];
      spec.background.noise_level = b.value("noise_level", spec.background.noise_level);
      spec.background.crowd_level = b.value("crowd_level", spec.background.crowd_level);
      spec.background.crowd_lo_hz = b.value("crowd_lo_hz", spec.background.crowd_lo_hz);
      spec.background.crowd_hi_hz = b.value("crowd_hi_hz", spec.background.crowd_hi_hz);
    }
    if (j.contains("video_truth")) {
      spec.video_truth = parse_block_truth(j["video_truth"].get<std::string>());
    }
    spec.seed = j.value("seed", spec.seed);
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("invalid synth spec: ") + e.what());
  }
  return spec;
}

SynthArtifacts write_artifacts(const SynthOutput& output, const SynthSpec& spec,
                               const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  SynthArtifacts a{dir / "audio.wav", dir / "labels.jsonl", dir / "video_truth.csv",
                   dir / "manifest.json"};
  write_wav(a.audio, output.audio);
  write_label_jsonl(a.labels, output.labels);
  write_scores(a.video_truth, output.video_truth);

  nlohmann::json manifest;
  manifest["audio"] = a.audio.filename().string();
  manifest["labels"] = a.labels.filename().string();
  manifest["video_truth"] = a.video_truth.filename().string();
  manifest["frames"] = output.labels.size();
  manifest["samples"] = output.audio.size();
  manifest["spec"] = to_json(spec);
  std::ofstream out(a.manifest);
  if (!out) throw FormatError("cannot write manifest " + a.manifest.string());
  out << manifest.dump(2) << '\n';
  return a;
}

}  // namespace avsync
