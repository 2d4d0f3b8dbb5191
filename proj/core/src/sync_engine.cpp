#include "avsync/sync_engine.hpp"

#include <algorithm>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "avsync/errors.hpp"

namespace avsync {

void SearchPolicy::validate() const {
  if (block_len <= 0) throw ConfigError("block_len must be positive");
  if (block_offsets.empty()) throw ConfigError("search policy needs at least one block");
  for (std::size_t k = 1; k < block_offsets.size(); ++k) {
    if (block_offsets[k] - block_offsets[k - 1] != block_len) {
      throw ConfigError("search blocks must be consecutive and non-overlapping (offsets differ by " +
                        std::to_string(block_len) + ")");
    }
  }
}

std::pair<int, int> SearchPolicy::frame_span() const {
  return {block_offsets.front(), block_offsets.back() + block_len - 1};
}

void OffsetSpec::validate() const {
  if (lo > hi) throw ConfigError("offset range lo > hi");
  if (excluded_lo > excluded_hi) throw ConfigError("excluded offset range is empty");
  if (excluded_lo < lo || excluded_hi > hi) {
    throw ConfigError("excluded offset range must lie inside [lo, hi]");
  }
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("offset fraction must be in [0, 1]");
  if (allowed_offsets().empty()) throw ConfigError("offset spec leaves no allowed offsets");
}

std::vector<int> OffsetSpec::allowed_offsets() const {
  std::vector<int> out;
  for (int d = lo; d <= hi; ++d) {
    if (d < excluded_lo || d > excluded_hi) out.push_back(d);
  }
  return out;
}

BlockQuery query_blocks(std::int64_t i, const SearchPolicy& policy, std::int64_t total_frames,
                        int offset) {
  BlockQuery query;
  for (int o : policy.block_offsets) {
    const std::int64_t start = i + offset + o;
    if (start < 0 || start + policy.block_len > total_frames) {
      ++query.dropped;
    } else {
      query.starts.push_back(start);
    }
  }
  return query;
}

SyncVerdict verify_detection(std::int64_t i, const DetectionStream& video,
                             const SearchPolicy& policy, std::int64_t total_frames,
                             std::optional<int> offset) {
  if (video.kind() != StreamKind::VideoBlock) {
    throw ConfigError("verify_detection needs a video-block stream");
  }
  auto query = query_blocks(i, policy, total_frames, offset.value_or(0));
  SyncVerdict verdict;
  verdict.detection_index = i;
  verdict.blocks_dropped = query.dropped;
  verdict.injected_offset = offset;
  verdict.any_video_hit = std::any_of(query.starts.begin(), query.starts.end(),
                                      [&](std::int64_t b) { return video_block_detector(video, b); });
  verdict.flagged = !verdict.any_video_hit;
  verdict.blocks_queried = std::move(query.starts);
  return verdict;
}

OffsetMap inject_offsets(const DetectionStream& audio, const OffsetSpec& spec) {
  spec.validate();
  const auto allowed = spec.allowed_offsets();
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> pick(0, allowed.size() - 1);
  OffsetMap out;
  for (const auto& d : audio.decisions()) {
    if (!d.is_hit) continue;
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (u < spec.fraction) out.emplace(d.index, allowed[pick(rng)]);
  }
  return out;
}

std::vector<SyncVerdict> run_sync_detection(const DetectionStream& audio,
                                            const DetectionStream& video,
                                            const SearchPolicy& policy, std::int64_t total_frames,
                                            const OffsetMap* offsets) {
  policy.validate();
  if (audio.kind() != StreamKind::AudioSegment) {
    throw ConfigError("run_sync_detection needs an audio-segment stream first");
  }
  std::vector<SyncVerdict> verdicts;
  for (const auto& d : audio.decisions()) {
    if (!d.is_hit) continue;
    std::optional<int> offset;
    if (offsets != nullptr) {
      if (auto it = offsets->find(d.index); it != offsets->end()) offset = it->second;
    }
    verdicts.push_back(verify_detection(d.index, video, policy, total_frames, offset));
  }
  return verdicts;
}

std::vector<int> detectable_offsets(const SearchPolicy& policy, BlockTruth truth, int lo, int hi) {
  policy.validate();
  std::vector<int> out;
  for (int d = lo; d <= hi; ++d) {
    bool seen = false;
    for (int o : policy.block_offsets) {
      // Block start relative to the hit frame.
      const int start = o + d;
      if (truth == BlockTruth::StartFrame) {
        seen = seen || start == 0;
      } else {
        seen = seen || (start <= 0 && 0 <= start + policy.block_len - 1);
      }
    }
    if (seen) out.push_back(d);
  }
  return out;
}

VerdictSummary summarize(std::span<const SyncVerdict> verdicts) {
  VerdictSummary s;
  for (const auto& v : verdicts) {
    ++s.verdicts;
    if (v.flagged) ++s.flagged;
    if (v.injected_offset) ++s.injected;
    s.blocks_dropped += v.blocks_dropped;
  }
  return s;
}

nlohmann::json to_json(const SyncVerdict& verdict) {
  nlohmann::json j;
  j["detection_index"] = verdict.detection_index;
  j["blocks_queried"] = verdict.blocks_queried;
  j["blocks_dropped"] = verdict.blocks_dropped;
  j["any_video_hit"] = verdict.any_video_hit;
  j["flagged"] = verdict.flagged;
  j["injected_offset"] =
      verdict.injected_offset ? nlohmann::json(*verdict.injected_offset) : nlohmann::json(nullptr);
  return j;
}

void write_verdicts(std::ostream& out, std::span<const SyncVerdict> verdicts) {
  for (const auto& v : verdicts) out << to_json(v).dump() << '\n';
  const auto s = summarize(verdicts);
  nlohmann::json summary;
  summary["summary"] = {{"verdicts", s.verdicts},
                        {"flagged", s.flagged},
                        {"injected", s.injected},
                        {"blocks_dropped", s.blocks_dropped}};
  out << summary.dump() << '\n';
}

}  // namespace avsync
