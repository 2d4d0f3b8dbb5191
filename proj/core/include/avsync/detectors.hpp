#pragma once

// Hit-decision sources for audio segments and video blocks: external score
// files (trained models run elsewhere), a spectral-flux transient detector for
// synthetic audio, and label-conditioned stochastic detectors for Monte Carlo
// work.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "avsync/audio.hpp"
#include "avsync/timeline.hpp"

namespace avsync {

enum class StreamKind { AudioSegment, VideoBlock };

std::string_view to_string(StreamKind kind);
StreamKind parse_stream_kind(std::string_view text);

struct Decision {
  std::int64_t index = 0;
  double score = 0.0;
  bool is_hit = false;

  friend bool operator==(const Decision&, const Decision&) = default;
};

/// Sparse, index-sorted decisions. Absent indices are "not a hit".
class DetectionStream {
 public:
  explicit DetectionStream(StreamKind kind = StreamKind::AudioSegment) : kind_(kind) {}

  /// Sorts by index. Throws FormatError on duplicates, RangeError on negative
  /// indices.
  DetectionStream(StreamKind kind, std::vector<Decision> decisions);

  /// Every listed index is a hit with score 1.
  static DetectionStream from_hits(StreamKind kind, std::span<const std::int64_t> hits);

  [[nodiscard]] StreamKind kind() const { return kind_; }
  [[nodiscard]] std::span<const Decision> decisions() const { return decisions_; }
  [[nodiscard]] std::size_t size() const { return decisions_.size(); }
  [[nodiscard]] bool empty() const { return decisions_.empty(); }

  [[nodiscard]] const Decision* find(std::int64_t index) const;
  [[nodiscard]] bool is_hit(std::int64_t index) const;
  [[nodiscard]] std::vector<std::int64_t> hits() const;
  [[nodiscard]] std::int64_t max_index() const;

  friend bool operator==(const DetectionStream&, const DetectionStream&) = default;

 private:
  StreamKind kind_;
  std::vector<Decision> decisions_;
};

// Score files: CSV with an `index,score` header, scores in [0, 1]. An empty
// file is an empty stream. Errors carry the offending line number.
DetectionStream parse_scores(std::istream& in, StreamKind kind, double threshold);
DetectionStream load_scores(const std::filesystem::path& path, StreamKind kind, double threshold);
void write_scores(std::ostream& out, const DetectionStream& stream);
void write_scores(const std::filesystem::path& path, const DetectionStream& stream);

/// Spectral-flux transient detector used as a reference audio detector.
struct DspAedParams {
  /// Score r / (1 + r) at r = 1.22. On the synthetic rally generator at
  /// 20 dB SNR the weakest hit scores r ~ 3.5 and the strongest non-hit
  /// r ~ 0.43 (see tests/unit/test_detectors.cpp, DspCalibration).
  static constexpr double kDefaultThreshold = 0.55;

  int n_fft = 512;
  int hop = 128;
  /// Flux is summed over bins inside [band_lo_hz, band_hi_hz].
  double band_lo_hz = 2000.0;
  double band_hi_hz = 8000.0;
  double threshold = kDefaultThreshold;
  double energy_floor = 1e-24;

  void validate(const SegmentGrid& grid) const;
};

/// Per-segment score in [0, 1): r / (1 + r). r is the largest
/// half-wave-rectified power flux (band-limited, Hann-windowed STFT) among
/// frames centred inside the segment's leading stride, divided by the
/// segment's mean-square amplitude times the squared window sum. Scaling the
/// audio leaves r unchanged.
std::vector<double> dsp_aed_scores(const AudioBuffer& buffer, const SegmentGrid& grid,
                                   const DspAedParams& params = {});

/// Hit iff score >= threshold and the score is a local maximum over segments
/// i-1..i+1 (strictly above the left neighbour, not below the right one).
DetectionStream dsp_aed(const AudioBuffer& buffer, const SegmentGrid& grid,
                        const DspAedParams& params = {});
DetectionStream dsp_aed(const AudioBuffer& buffer, const SegmentGrid& grid, double threshold);

struct DetectorQuality {
  double tpr = 1.0;
  double fpr = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One uniform draw u per index (index order, seeded mt19937_64). A positive
/// index is detected iff u < tpr, a negative one iff u < fpr. Detected
/// indices carry score 1; nothing else is stored.
DetectionStream oracle_detector(const std::vector<bool>& positives, const DetectorQuality& quality,
                                StreamKind kind);
DetectionStream oracle_detector(const LabelTrack& track, EventLabel target,
                                const DetectorQuality& quality,
                                StreamKind kind = StreamKind::AudioSegment);

/// is_hit for the block starting at `block_start`; absent → false. Throws
/// ConfigError for non-video streams.
bool video_block_detector(const DetectionStream& stream, std::int64_t block_start);

/// How a perfect video detector maps frame labels onto block starts.
enum class BlockTruth {
  /// Block b is a hit iff frame b is labelled Hit (first-frame block labels).
  StartFrame,
  /// Block b is a hit iff any of frames b..b+2 is labelled Hit.
  Coverage,
};

std::string_view to_string(BlockTruth truth);
BlockTruth parse_block_truth(std::string_view text);

/// Indicator over block starts 0..frames-1 of the perfect video detector.
std::vector<bool> video_truth_mask(const LabelTrack& track, BlockTruth truth);
DetectionStream video_truth(const LabelTrack& track, BlockTruth truth = BlockTruth::StartFrame);

}  // namespace avsync
