#pragma once

// Shared clock model: 25 fps video frames, 48 kHz audio, 3-frame video blocks
// and 160 ms audio segments that start on frame boundaries.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace avsync {

enum class EventLabel : std::uint8_t { Neither, Hit, Bounce };

std::string_view to_string(EventLabel label);

/// Parses "hit", "bounce" or "neither" (case-insensitive). Throws FormatError.
EventLabel parse_label(std::string_view text);

struct ClockSpec {
  int fps = 25;
  int sample_rate = 48000;

  [[nodiscard]] int samples_per_frame() const { return sample_rate / fps; }

  /// Throws ConfigError unless both rates are positive and sample_rate is a
  /// multiple of fps.
  void validate() const;

  friend bool operator==(const ClockSpec&, const ClockSpec&) = default;
};

/// One label per video frame, frame 0 first.
class LabelTrack {
 public:
  LabelTrack() = default;
  LabelTrack(ClockSpec clock, std::vector<EventLabel> labels);

  [[nodiscard]] const ClockSpec& clock() const { return clock_; }
  [[nodiscard]] std::int64_t size() const { return static_cast<std::int64_t>(labels_.size()); }
  [[nodiscard]] bool empty() const { return labels_.empty(); }
  [[nodiscard]] std::span<const EventLabel> labels() const { return labels_; }

  /// Bounds-checked; throws RangeError.
  [[nodiscard]] EventLabel at(std::int64_t frame) const;

  [[nodiscard]] std::vector<std::int64_t> frames_with(EventLabel label) const;
  [[nodiscard]] std::int64_t count(EventLabel label) const;

  /// First `frames` labels (or the whole track if shorter).
  [[nodiscard]] LabelTrack truncated(std::int64_t frames) const;

 private:
  ClockSpec clock_{};
  std::vector<EventLabel> labels_;
};

struct SampleRange {
  std::int64_t begin = 0;
  std::int64_t end = 0;  // exclusive

  friend bool operator==(const SampleRange&, const SampleRange&) = default;
};

/// Audio segments of `segment_len` samples placed every `stride` samples over
/// a buffer of `total_samples`. Segments that would overrun the buffer are not
/// part of the grid.
class SegmentGrid {
 public:
  static constexpr std::int64_t kDefaultSegmentLen = 7680;  // 160 ms at 48 kHz

  SegmentGrid(ClockSpec clock, std::int64_t total_samples,
              std::int64_t segment_len = kDefaultSegmentLen);

  /// Grid for a label-only timeline: the audio is assumed to span exactly
  /// `frames` video frames.
  static SegmentGrid for_frames(ClockSpec clock, std::int64_t frames,
                                std::int64_t segment_len = kDefaultSegmentLen);

  [[nodiscard]] const ClockSpec& clock() const { return clock_; }
  [[nodiscard]] std::int64_t segment_len() const { return segment_len_; }
  [[nodiscard]] std::int64_t stride() const { return stride_; }
  [[nodiscard]] std::int64_t total_samples() const { return total_samples_; }

  /// floor((total - segment_len) / stride) + 1, or 0 for short buffers.
  [[nodiscard]] std::int64_t segment_count() const;

  /// Grid truncated to the labelled frames as well: min(labels, segments).
  [[nodiscard]] std::int64_t aligned_count(const LabelTrack& track) const;

 private:
  ClockSpec clock_;
  std::int64_t total_samples_;
  std::int64_t segment_len_;
  std::int64_t stride_;
};

/// [i * stride, i * stride + segment_len). Throws RangeError for i < 0.
SampleRange segment_sample_range(const SegmentGrid& grid, std::int64_t i);

/// Label of the frame that starts segment i. Throws RangeError when i is not a
/// segment of the grid or the frame has no label.
EventLabel segment_label(const LabelTrack& track, const SegmentGrid& grid, std::int64_t i);

/// Three consecutive frames, labelled by the first.
struct BlockSpec {
  static constexpr int kLength = 3;
  std::int64_t start_frame = 0;
};

/// Frame indices covered by the block. No bounds checking.
std::array<std::int64_t, BlockSpec::kLength> block_frames(const BlockSpec& block);

// Label track files: JSON-lines `{"frame": n, "label": "hit"}` or CSV with a
// `frame,label` header. Frames must be contiguous from 0.
LabelTrack read_label_track(std::istream& in, ClockSpec clock, bool csv);
LabelTrack read_label_track(const std::filesystem::path& path, ClockSpec clock = {});
void write_label_jsonl(std::ostream& out, const LabelTrack& track);
void write_label_jsonl(const std::filesystem::path& path, const LabelTrack& track);

}  // namespace avsync
