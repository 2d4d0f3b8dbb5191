#pragma once

// Audio-led sync verification: every audio hit triggers a lookup of the
// neighbouring video blocks, and a missing video hit flags a sync error.
// Also hosts the random offset injector used to simulate desynchronised
// streams.

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "avsync/detectors.hpp"

namespace avsync {

/// Block starts relative to the audio detection index. The default covers
/// frames i-6 .. i+2: 240 ms before the audio event through 80 ms after.
struct SearchPolicy {
  std::vector<int> block_offsets{-6, -3, 0};
  int block_len = BlockSpec::kLength;

  /// Throws ConfigError unless offsets are ascending and consecutive blocks
  /// abut (offsets differ by block_len).
  void validate() const;

  /// First and last frame offset covered by the search blocks.
  [[nodiscard]] std::pair<int, int> frame_span() const;
};

/// Offsets are drawn uniformly from [lo, hi] minus [excluded_lo, excluded_hi].
struct OffsetSpec {
  int lo = -15;
  int hi = 15;
  int excluded_lo = -3;
  int excluded_hi = 6;
  double fraction = 0.5;
  std::uint64_t seed = 0;

  /// Throws ConfigError when the allowed set is empty or parameters are
  /// inconsistent.
  void validate() const;
  [[nodiscard]] std::vector<int> allowed_offsets() const;
};

using OffsetMap = std::map<std::int64_t, int>;

struct BlockQuery {
  std::vector<std::int64_t> starts;
  int dropped = 0;
};

/// Block starts i + offset + o for each policy offset, minus blocks that are
/// not fully inside [0, total_frames).
BlockQuery query_blocks(std::int64_t i, const SearchPolicy& policy, std::int64_t total_frames,
                        int offset = 0);

struct SyncVerdict {
  std::int64_t detection_index = 0;
  std::vector<std::int64_t> blocks_queried;
  int blocks_dropped = 0;
  bool any_video_hit = false;
  bool flagged = true;
  std::optional<int> injected_offset;

  friend bool operator==(const SyncVerdict&, const SyncVerdict&) = default;
};

/// A positive offset shifts the queried video blocks forward in time.
SyncVerdict verify_detection(std::int64_t i, const DetectionStream& video,
                             const SearchPolicy& policy, std::int64_t total_frames,
                             std::optional<int> offset = std::nullopt);

/// Selects each audio hit with probability spec.fraction (one draw per hit in
/// index order), then draws its offset uniformly from the allowed set.
OffsetMap inject_offsets(const DetectionStream& audio, const OffsetSpec& spec);

/// One verdict per audio hit, in index order. Throws ConfigError if the
/// stream kinds are swapped.
std::vector<SyncVerdict> run_sync_detection(const DetectionStream& audio,
                                            const DetectionStream& video,
                                            const SearchPolicy& policy, std::int64_t total_frames,
                                            const OffsetMap* offsets = nullptr);

/// Offsets d for which a perfect detector still sees a hit at frame h when
/// the audio detection is at h, over [lo, hi].
std::vector<int> detectable_offsets(const SearchPolicy& policy, BlockTruth truth, int lo, int hi);

struct VerdictSummary {
  std::int64_t verdicts = 0;
  std::int64_t flagged = 0;
  std::int64_t injected = 0;
  std::int64_t blocks_dropped = 0;
};

VerdictSummary summarize(std::span<const SyncVerdict> verdicts);

nlohmann::json to_json(const SyncVerdict& verdict);

/// JSON-lines: one verdict per line followed by a {"summary": {...}} object.
void write_verdicts(std::ostream& out, std::span<const SyncVerdict> verdicts);

}  // namespace avsync
