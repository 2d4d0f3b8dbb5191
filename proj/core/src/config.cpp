#include "avsync/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "avsync/errors.hpp"

namespace avsync {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string lowercase(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    T out{};
    if constexpr (std::is_same_v<T, double>) {
      out = std::stod(value, &used);
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!value.empty() && value.front() == '-') throw std::invalid_argument("negative");
      out = std::stoull(value, &used, 0);
    } else {
      const auto v = std::stoll(value, &used);
      if (v < std::numeric_limits<T>::min() || v > std::numeric_limits<T>::max()) {
        throw std::out_of_range("range");
      }
      out = static_cast<T>(v);
    }
    if (used != value.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError("bad value '" + value + "' for " + key);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  const auto v = lowercase(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("bad boolean '" + value + "' for " + key);
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& value) {
  std::vector<T> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_number<T>(key, item));
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value,
                                  const std::filesystem::path& base)>;

std::filesystem::path resolve(const std::string& value, const std::filesystem::path& base) {
  std::filesystem::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

template <typename T, typename Member>
Setter number(Member member) {
  return [member](RunConfig& c, const std::string& k, const std::string& v,
                  const std::filesystem::path&) { std::invoke(member, c) = parse_number<T>(k, v); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto path_opt = [](std::optional<std::filesystem::path> RunConfig::*m) -> Setter {
      return [m](RunConfig& c, const std::string&, const std::string& v,
                 const std::filesystem::path& base) { c.*m = resolve(v, base); };
    };
    t["audio"] = path_opt(&RunConfig::audio);
    t["labels"] = path_opt(&RunConfig::labels);
    t["audio_scores"] = path_opt(&RunConfig::audio_scores);
    t["video_scores"] = path_opt(&RunConfig::video_scores);
    t["out"] = [](RunConfig& c, const std::string&, const std::string& v,
                  const std::filesystem::path& base) { c.out_dir = resolve(v, base); };
    t["seed"] = [](RunConfig& c, const std::string& k, const std::string& v,
                   const std::filesystem::path&) { c.seed = parse_number<std::uint64_t>(k, v); };
    t["frames"] = [](RunConfig& c, const std::string& k, const std::string& v,
                     const std::filesystem::path&) { c.frames = parse_number<std::int64_t>(k, v); };
    t["fps"] = number<int>([](RunConfig& c) -> int& { return c.clock.fps; });
    t["sample_rate"] = number<int>([](RunConfig& c) -> int& { return c.clock.sample_rate; });

    t["aed"] = [](RunConfig& c, const std::string& k, const std::string& v,
                  const std::filesystem::path&) {
      const auto s = lowercase(v);
      if (s == "auto") c.aed = AudioSource::Auto;
      else if (s == "scores") c.aed = AudioSource::Scores;
      else if (s == "dsp") c.aed = AudioSource::Dsp;
      else if (s == "oracle") c.aed = AudioSource::Oracle;
      else throw ConfigError("bad value '" + v + "' for " + k + " (auto|scores|dsp|oracle)");
    };
    t["ved"] = [](RunConfig& c, const std::string& k, const std::string& v,
                  const std::filesystem::path&) {
      const auto s = lowercase(v);
      if (s == "auto") c.ved = VideoSource::Auto;
      else if (s == "scores") c.ved = VideoSource::Scores;
      else if (s == "oracle") c.ved = VideoSource::Oracle;
      else if (s == "truth") c.ved = VideoSource::Truth;
      else throw ConfigError("bad value '" + v + "' for " + k + " (auto|scores|oracle|truth)");
    };
    t["audio_threshold"] = number<double>([](RunConfig& c) -> double& { return c.audio_threshold; });
    t["video_threshold"] = number<double>([](RunConfig& c) -> double& { return c.video_threshold; });
    t["dsp.threshold"] = number<double>([](RunConfig& c) -> double& { return c.dsp.threshold; });
    t["dsp.n_fft"] = number<int>([](RunConfig& c) -> int& { return c.dsp.n_fft; });
    t["dsp.hop"] = number<int>([](RunConfig& c) -> int& { return c.dsp.hop; });
    t["dsp.band_lo_hz"] = number<double>([](RunConfig& c) -> double& { return c.dsp.band_lo_hz; });
    t["dsp.band_hi_hz"] = number<double>([](RunConfig& c) -> double& { return c.dsp.band_hi_hz; });
    t["aed.tpr"] = number<double>([](RunConfig& c) -> double& { return c.aed_quality.tpr; });
    t["aed.fpr"] = number<double>([](RunConfig& c) -> double& { return c.aed_quality.fpr; });
    t["ved.tpr"] = number<double>([](RunConfig& c) -> double& { return c.ved_quality.tpr; });
    t["ved.fpr"] = number<double>([](RunConfig& c) -> double& { return c.ved_quality.fpr; });
    t["video_truth"] = [](RunConfig& c, const std::string&, const std::string& v,
                          const std::filesystem::path&) { c.video_truth = parse_block_truth(v); };

    t["mfcc.n_fft"] = number<int>([](RunConfig& c) -> int& { return c.mfcc.n_fft; });
    t["mfcc.hop"] = number<int>([](RunConfig& c) -> int& { return c.mfcc.hop; });
    t["mfcc.n_mfcc"] = number<int>([](RunConfig& c) -> int& { return c.mfcc.n_mfcc; });
    t["mfcc.n_mels"] = number<int>([](RunConfig& c) -> int& { return c.mfcc.n_mels; });
    t["mfcc.fmin_hz"] = number<double>([](RunConfig& c) -> double& { return c.mfcc.fmin_hz; });
    t["mfcc.fmax_hz"] = number<double>([](RunConfig& c) -> double& { return c.mfcc.fmax_hz; });
    t["mfcc.log_floor"] = number<double>([](RunConfig& c) -> double& { return c.mfcc.log_floor; });
    t["mfcc.delta_half_width"] =
        number<int>([](RunConfig& c) -> int& { return c.mfcc.delta_half_width; });
    t["mfcc.centered"] = [](RunConfig& c, const std::string& k, const std::string& v,
                            const std::filesystem::path&) { c.mfcc.centered = parse_bool(k, v); };

    t["search.block_offsets"] = [](RunConfig& c, const std::string& k, const std::string& v,
                                   const std::filesystem::path&) {
      c.search.block_offsets = parse_list<int>(k, v);
    };
    t["search.block_len"] = number<int>([](RunConfig& c) -> int& { return c.search.block_len; });

    t["inject"] = [](RunConfig& c, const std::string& k, const std::string& v,
                     const std::filesystem::path&) { c.inject = parse_bool(k, v); };
    t["inject.fraction"] = number<double>([](RunConfig& c) -> double& { return c.offsets.fraction; });
    t["inject.lo"] = number<int>([](RunConfig& c) -> int& { return c.offsets.lo; });
    t["inject.hi"] = number<int>([](RunConfig& c) -> int& { return c.offsets.hi; });
    t["inject.excluded_lo"] = number<int>([](RunConfig& c) -> int& { return c.offsets.excluded_lo; });
    t["inject.excluded_hi"] = number<int>([](RunConfig& c) -> int& { return c.offsets.excluded_hi; });
    t["eval.radius"] = number<int>([](RunConfig& c) -> int& { return c.eval_radius; });

    t["synth.duration_s"] = number<double>([](RunConfig& c) -> double& { return c.synth.duration_s; });
    t["synth.hits"] = [](RunConfig& c, const std::string& k, const std::string& v,
                         const std::filesystem::path&) {
      c.synth.hit_frames = parse_list<std::int64_t>(k, v);
    };
    t["synth.bounces"] = [](RunConfig& c, const std::string& k, const std::string& v,
                            const std::filesystem::path&) {
      c.synth.bounce_frames = parse_list<std::int64_t>(k, v);
    };
    t["synth.rally_hits"] = number<int>([](RunConfig& c) -> int& { return c.rally.hits; });
    t["synth.rally_min_gap"] = number<int>([](RunConfig& c) -> int& { return c.rally.min_gap; });
    t["synth.rally_max_gap"] = number<int>([](RunConfig& c) -> int& { return c.rally.max_gap; });
    t["synth.snr_db"] = [](RunConfig& c, const std::string& k, const std::string& v,
                           const std::filesystem::path&) {
      c.synth_snr_db = parse_number<double>(k, v);
    };
    t["synth.noise_level"] =
        number<double>([](RunConfig& c) -> double& { return c.synth.background.noise_level; });
    t["synth.crowd_level"] =
        number<double>([](RunConfig& c) -> double& { return c.synth.background.crowd_level; });
    t["synth.crowd_lo_hz"] =
        number<double>([](RunConfig& c) -> double& { return c.synth.background.crowd_lo_hz; });
    t["synth.crowd_hi_hz"] =
        number<double>([](RunConfig& c) -> double& { return c.synth.background.crowd_hi_hz; });
    t["synth.hit_amplitude"] =
        number<double>([](RunConfig& c) -> double& { return c.synth.hit.amplitude; });
    t["synth.hit_decay_ms"] =
        number<double>([](RunConfig& c) -> double& { return c.synth.hit.decay_ms; });
    t["synth.hit_freq_hz"] =
        number<double>([](RunConfig& c) -> double& { return c.synth.hit.center_freq_hz; });
    t["synth.bounce_amplitude"] =
        number<double>([](RunConfig& c) -> double& { return c.synth.bounce.amplitude; });
    t["synth.bounce_decay_ms"] =
        number<double>([](RunConfig& c) -> double& { return c.synth.bounce.decay_ms; });
    t["synth.bounce_freq_hz"] =
        number<double>([](RunConfig& c) -> double& { return c.synth.bounce.center_freq_hz; });

    t["montecarlo.trials"] = number<int>([](RunConfig& c) -> int& { return c.montecarlo.trials; });
    t["montecarlo.hits_per_trial"] =
        number<int>([](RunConfig& c) -> int& { return c.montecarlo.hits_per_trial; });
    t["montecarlo.min_gap"] = number<int>([](RunConfig& c) -> int& { return c.montecarlo.min_gap; });
    t["montecarlo.max_gap"] = number<int>([](RunConfig& c) -> int& { return c.montecarlo.max_gap; });
    t["montecarlo.threads"] =
        number<unsigned>([](RunConfig& c) -> unsigned& { return c.montecarlo.threads; });
    return t;
  }();
  return table;
}

}  // namespace

std::uint64_t RunConfig::stage_seed(std::uint64_t stage, const std::string& what) const {
  if (!seed) throw ConfigError(what + " is stochastic and needs a seed (set 'seed' or --seed)");
  return derive_seed(*seed, 0, stage);
}

SynthSpec RunConfig::resolved_synth_spec() const {
  SynthSpec spec = synth;
  spec.clock = clock;
  spec.video_truth = video_truth;
  if (rally.hits > 0) {
    spec = make_rally(spec, rally.hits, rally.min_gap, rally.max_gap);
  }
  if (synth_snr_db) spec.set_snr_db(*synth_snr_db);
  return spec;
}

void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(config, key, value, {});
  config.settings[key] = value;
}

void apply_config_stream(RunConfig& config, std::istream& in,
                         const std::filesystem::path& base_dir) {
  const auto& table = setters();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = table.find(key);
    if (it == table.end()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    it->second(config, key, value, base_dir);
    config.settings[key] = value;
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  RunConfig config;
  apply_config_stream(config, in, path.parent_path());
  return config;
}

nlohmann::json config_echo(const RunConfig& config) {
  nlohmann::json settings = nlohmann::json::object();
  for (const auto& [k, v] : config.settings) settings[k] = v;
  const auto path = [](const std::optional<std::filesystem::path>& p) {
    return p ? nlohmann::json(p->string()) : nlohmann::json(nullptr);
  };
  const auto quality = [](const DetectorQuality& q) {
    return nlohmann::json{{"tpr", q.tpr}, {"fpr", q.fpr}};
  };
  nlohmann::json e;
  e["audio"] = path(config.audio);
  e["labels"] = path(config.labels);
  e["audio_scores"] = path(config.audio_scores);
  e["video_scores"] = path(config.video_scores);
  e["out"] = config.out_dir.string();
  e["seed"] = config.seed ? nlohmann::json(*config.seed) : nlohmann::json(nullptr);
  e["fps"] = config.clock.fps;
  e["sample_rate"] = config.clock.sample_rate;
  e["audio_threshold"] = config.audio_threshold;
  e["video_threshold"] = config.video_threshold;
  e["dsp"] = {{"threshold", config.dsp.threshold}, {"n_fft", config.dsp.n_fft},
              {"hop", config.dsp.hop}, {"band_lo_hz", config.dsp.band_lo_hz},
              {"band_hi_hz", config.dsp.band_hi_hz}};
  e["aed"] = quality(config.aed_quality);
  e["ved"] = quality(config.ved_quality);
  e["video_truth"] = std::string(to_string(config.video_truth));
  e["search"] = {{"block_offsets", config.search.block_offsets},
                 {"block_len", config.search.block_len}};
  e["inject"] = {{"enabled", config.inject}, {"fraction", config.offsets.fraction},
                 {"lo", config.offsets.lo}, {"hi", config.offsets.hi},
                 {"excluded_lo", config.offsets.excluded_lo},
                 {"excluded_hi", config.offsets.excluded_hi}};
  e["eval_radius"] = config.eval_radius;
  return {{"settings", std::move(settings)}, {"effective", std::move(e)}};
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : setters()) out.push_back(k);
    return out;
  }();
  return keys;
}

}  // namespace avsync
