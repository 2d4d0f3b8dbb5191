#include "avsync/detectors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "avsync/errors.hpp"
#include "avsync/fft.hpp"
#include "avsync/features.hpp"

namespace avsync {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

std::string_view to_string(StreamKind kind) {
  return kind == StreamKind::AudioSegment ? "audio-segment" : "video-block";
}

StreamKind parse_stream_kind(std::string_view text) {
  const auto lower = lowercase(trim(text));
  if (lower == "audio-segment" || lower == "audio") return StreamKind::AudioSegment;
  if (lower == "video-block" || lower == "video") return StreamKind::VideoBlock;
  throw ConfigError("unknown stream kind '" + std::string(text) + "'");
}

DetectionStream::DetectionStream(StreamKind kind, std::vector<Decision> decisions)
    : kind_(kind), decisions_(std::move(decisions)) {
  std::sort(decisions_.begin(), decisions_.end(),
            [](const Decision& a, const Decision& b) { return a.index < b.index; });
  for (std::size_t i = 0; i < decisions_.size(); ++i) {
    if (decisions_[i].index < 0) {
      throw RangeError("negative detection index " + std::to_string(decisions_[i].index));
    }
    if (i > 0 && decisions_[i].index == decisions_[i - 1].index) {
      throw FormatError("duplicate detection index " + std::to_string(decisions_[i].index));
    }
  }
}

DetectionStream DetectionStream::from_hits(StreamKind kind, std::span<const std::int64_t> hits) {
  std::vector<Decision> decisions;
  decisions.reserve(hits.size());
  for (auto h : hits) decisions.push_back({h, 1.0, true});
  return DetectionStream(kind, std::move(decisions));
}

const Decision* DetectionStream::find(std::int64_t index) const {
  const auto it = std::lower_bound(
      decisions_.begin(), decisions_.end(), index,
      [](const Decision& d, std::int64_t value) { return d.index < value; });
  if (it == decisions_.end() || it->index != index) return nullptr;
  return &*it;
}

bool DetectionStream::is_hit(std::int64_t index) const {
  const auto* d = find(index);
  return d != nullptr && d->is_hit;
}

std::vector<std::int64_t> DetectionStream::hits() const {
  std::vector<std::int64_t> out;
  for (const auto& d : decisions_) {
    if (d.is_hit) out.push_back(d.index);
  }
  return out;
}

std::int64_t DetectionStream::max_index() const {
  return decisions_.empty() ? -1 : decisions_.back().index;
}

DetectionStream parse_scores(std::istream& in, StreamKind kind, double threshold) {
  std::vector<Decision> decisions;
  std::vector<std::int64_t> seen;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto where = " (line " + std::to_string(line_no) + ")";
    if (!header_seen) {
      std::string header;
      for (char c : lowercase(text)) {
        if (!std::isspace(static_cast<unsigned char>(c))) header.push_back(c);
      }
      if (header != "index,score") {
        throw FormatError("score file must start with header 'index,score'" + where);
      }
      header_seen = true;
      continue;
    }
    const auto comma = text.find(',');
    if (comma == std::string_view::npos || text.find(',', comma + 1) != std::string_view::npos) {
      throw FormatError("expected 'index,score'" + where);
    }
    Decision d;
    try {
      const std::string index_text(trim(text.substr(0, comma)));
      const std::string score_text(trim(text.substr(comma + 1)));
      std::size_t used = 0;
      d.index = std::stoll(index_text, &used);
      if (used != index_text.size()) throw std::invalid_argument("index");
      d.score = std::stod(score_text, &used);
      if (used != score_text.size()) throw std::invalid_argument("score");
    } catch (const std::exception&) {
      throw FormatError("malformed score row '" + std::string(text) + "'" + where);
    }
    if (d.index < 0) throw FormatError("negative index" + where);
    if (!(d.score >= 0.0 && d.score <= 1.0)) throw FormatError("score outside [0, 1]" + where);
    d.is_hit = d.score >= threshold;
    seen.push_back(d.index);
    decisions.push_back(d);
  }
  std::vector<std::size_t> order(decisions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return seen[a] < seen[b]; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (seen[order[i]] == seen[order[i - 1]]) {
      throw FormatError("duplicate index " + std::to_string(seen[order[i]]) +
                        " in score file (row " + std::to_string(order[i] + 1) + ")");
    }
  }
  return DetectionStream(kind, std::move(decisions));
}

DetectionStream load_scores(const std::filesystem::path& path, StreamKind kind, double threshold) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open score file " + path.string());
  try {
    return parse_scores(in, kind, threshold);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_scores(std::ostream& out, const DetectionStream& stream) {
  out << "index,score\n";
  for (const auto& d : stream.decisions()) out << d.index << ',' << d.score << '\n';
}

void write_scores(const std::filesystem::path& path, const DetectionStream& stream) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write score file " + path.string());
  write_scores(out, stream);
}

void DspAedParams::validate(const SegmentGrid& grid) const {
  if (n_fft < 2 || (n_fft & (n_fft - 1)) != 0) throw ConfigError("dsp n_fft must be a power of two");
  if (hop <= 0 || grid.stride() % hop != 0) {
    throw ConfigError("dsp hop must divide the segment stride");
  }
  if (n_fft > grid.segment_len()) throw ConfigError("dsp n_fft exceeds segment length");
  if (!(threshold >= 0.0)) throw ConfigError("dsp threshold must be non-negative");
  if (!(band_lo_hz >= 0.0 && band_hi_hz > band_lo_hz &&
        band_hi_hz <= grid.clock().sample_rate / 2.0)) {
    throw ConfigError("dsp flux band must satisfy 0 <= lo < hi <= sample_rate/2");
  }
}

std::vector<double> dsp_aed_scores(const AudioBuffer& buffer, const SegmentGrid& grid,
                                   const DspAedParams& params) {
  params.validate(grid);
  const auto segments =
      std::min(grid.segment_count(),
               SegmentGrid(grid.clock(), buffer.size(), grid.segment_len()).segment_count());
  std::vector<double> scores(static_cast<std::size_t>(std::max<std::int64_t>(segments, 0)), 0.0);
  if (segments <= 0) return scores;

  const Fft fft(static_cast<std::size_t>(params.n_fft));
  const auto window = hann_window(params.n_fft);
  double window_sum = 0.0;
  for (double w : window) window_sum += w;

  const std::int64_t n = buffer.size();
  const std::int64_t half = params.n_fft / 2;
  const std::size_t bins = static_cast<std::size_t>(params.n_fft) / 2 + 1;
  const double bin_hz = static_cast<double>(grid.clock().sample_rate) / params.n_fft;
  const auto band_lo = static_cast<std::size_t>(std::ceil(params.band_lo_hz / bin_hz));
  const auto band_hi = std::min(bins - 1, static_cast<std::size_t>(std::floor(params.band_hi_hz / bin_hz)));
  std::vector<double> frame(static_cast<std::size_t>(params.n_fft));
  std::vector<double> prev(bins), cur(bins);
  std::vector<std::complex<double>> scratch;
  std::vector<double> best_flux(scores.size(), 0.0);

  // Frames whose centre falls inside [i*stride, (i+1)*stride) belong to
  // segment i; flux needs the previous frame, so frame 0 contributes nothing.
  const std::int64_t last_centre = (segments - 1) * grid.stride() + grid.stride() - 1;
  for (std::int64_t j = 0;; ++j) {
    const std::int64_t start = j * params.hop;
    if (start + params.n_fft > n || start + half > last_centre) break;
    for (int k = 0; k < params.n_fft; ++k) {
      frame[k] = window[k] * buffer.samples[static_cast<std::size_t>(start + k)];
    }
    fft.power_spectrum(frame, cur, scratch);
    if (j > 0) {
      double flux = 0.0;
      for (std::size_t b = band_lo; b <= band_hi; ++b) flux += std::max(0.0, cur[b] - prev[b]);
      const auto owner = (start + half) / grid.stride();
      if (owner < segments) {
        auto& best = best_flux[static_cast<std::size_t>(owner)];
        best = std::max(best, flux);
      }
    }
    std::swap(prev, cur);
  }

  std::vector<double> energy_prefix(static_cast<std::size_t>(n) + 1, 0.0);
  for (std::int64_t s = 0; s < n; ++s) {
    const double v = buffer.samples[static_cast<std::size_t>(s)];
    energy_prefix[static_cast<std::size_t>(s) + 1] = energy_prefix[static_cast<std::size_t>(s)] + v * v;
  }
  for (std::int64_t i = 0; i < segments; ++i) {
    const auto range = segment_sample_range(grid, i);
    const double energy = energy_prefix[static_cast<std::size_t>(range.end)] -
                          energy_prefix[static_cast<std::size_t>(range.begin)];
    const double mean_square = std::max(0.0, energy) / static_cast<double>(grid.segment_len());
    const double ratio = best_flux[static_cast<std::size_t>(i)] /
                         (window_sum * window_sum * mean_square + params.energy_floor);
    scores[static_cast<std::size_t>(i)] = ratio / (1.0 + ratio);
  }
  return scores;
}

DetectionStream dsp_aed(const AudioBuffer& buffer, const SegmentGrid& grid,
                        const DspAedParams& params) {
  const auto scores = dsp_aed_scores(buffer, grid, params);
  std::vector<Decision> decisions;
  decisions.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = scores[i];
    const bool above_left = i == 0 || s > scores[i - 1];
    const bool not_below_right = i + 1 == scores.size() || s >= scores[i + 1];
    const bool hit = s >= params.threshold && s > 0.0 && above_left && not_below_right;
    decisions.push_back({static_cast<std::int64_t>(i), s, hit});
  }
  return DetectionStream(StreamKind::AudioSegment, std::move(decisions));
}

DetectionStream dsp_aed(const AudioBuffer& buffer, const SegmentGrid& grid, double threshold) {
  DspAedParams params;
  params.threshold = threshold;
  return dsp_aed(buffer, grid, params);
}

void DetectorQuality::validate() const {
  if (!(tpr >= 0.0 && tpr <= 1.0) || !(fpr >= 0.0 && fpr <= 1.0)) {
    throw ConfigError("detector tpr and fpr must lie in [0, 1]");
  }
}

DetectionStream oracle_detector(const std::vector<bool>& positives, const DetectorQuality& quality,
                                StreamKind kind) {
  quality.validate();
  std::mt19937_64 rng(quality.seed);
  std::vector<Decision> decisions;
  for (std::size_t i = 0; i < positives.size(); ++i) {
    const double u = unit_uniform(rng);
    const double p = positives[i] ? quality.tpr : quality.fpr;
    if (u < p) decisions.push_back({static_cast<std::int64_t>(i), 1.0, true});
  }
  return DetectionStream(kind, std::move(decisions));
}

DetectionStream oracle_detector(const LabelTrack& track, EventLabel target,
                                const DetectorQuality& quality, StreamKind kind) {
  std::vector<bool> positives(static_cast<std::size_t>(track.size()));
  const auto labels = track.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) positives[i] = labels[i] == target;
  return oracle_detector(positives, quality, kind);
}

bool video_block_detector(const DetectionStream& stream, std::int64_t block_start) {
  if (stream.kind() != StreamKind::VideoBlock) {
    throw ConfigError("video_block_detector needs a video-block stream");
  }
  return stream.is_hit(block_start);
}

std::string_view to_string(BlockTruth truth) {
  return truth == BlockTruth::StartFrame ? "start-frame" : "coverage";
}

BlockTruth parse_block_truth(std::string_view text) {
  const auto lower = lowercase(trim(text));
  if (lower == "start-frame" || lower == "start") return BlockTruth::StartFrame;
  if (lower == "coverage") return BlockTruth::Coverage;
  throw ConfigError("unknown block truth '" + std::string(text) + "'");
}

std::vector<bool> video_truth_mask(const LabelTrack& track, BlockTruth truth) {
  const auto n = track.size();
  std::vector<bool> mask(static_cast<std::size_t>(n), false);
  const auto labels = track.labels();
  for (std::int64_t f = 0; f < n; ++f) {
    if (labels[static_cast<std::size_t>(f)] != EventLabel::Hit) continue;
    if (truth == BlockTruth::StartFrame) {
      mask[static_cast<std::size_t>(f)] = true;
    } else {
      for (std::int64_t b = std::max<std::int64_t>(0, f - BlockSpec::kLength + 1); b <= f; ++b) {
        mask[static_cast<std::size_t>(b)] = true;
      }
    }
  }
  return mask;
}

DetectionStream video_truth(const LabelTrack& track, BlockTruth truth) {
  const auto mask = video_truth_mask(track, truth);
  std::vector<std::int64_t> hits;
  for (std::size_t b = 0; b < mask.size(); ++b) {
    if (mask[b]) hits.push_back(static_cast<std::int64_t>(b));
  }
  return DetectionStream::from_hits(StreamKind::VideoBlock, hits);
}

}  // namespace avsync
