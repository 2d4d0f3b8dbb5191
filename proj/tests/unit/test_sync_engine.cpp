#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "avsync/errors.hpp"
#include "avsync/sync_engine.hpp"
#include "oracles/sync_oracle.hpp"

using namespace avsync;

namespace {

LabelTrack single_hit(std::int64_t frames, std::int64_t h) {
  std::vector<EventLabel> l(static_cast<std::size_t>(frames), EventLabel::Neither);
  l[static_cast<std::size_t>(h)] = EventLabel::Hit;
  return LabelTrack({}, l);
}

DetectionStream audio_at(std::initializer_list<std::int64_t> idx) {
  std::vector<std::int64_t> v(idx);
  return DetectionStream::from_hits(StreamKind::AudioSegment, v);
}

}  // namespace

TEST(SearchPolicy, DefaultSpan) {
  SearchPolicy p;
  EXPECT_NO_THROW(p.validate());
  EXPECT_EQ(p.frame_span(), (std::pair<int, int>{-6, 2}));
  p.block_offsets = {-6, -2, 0};
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(QueryBlocks, Examples) {
  SearchPolicy p;
  EXPECT_EQ(query_blocks(100, p, 1000).starts, (std::vector<std::int64_t>{94, 97, 100}));
  const auto edge = query_blocks(2, p, 1000);
  EXPECT_EQ(edge.starts, (std::vector<std::int64_t>{2}));
  EXPECT_EQ(edge.dropped, 2);
  EXPECT_TRUE(query_blocks(0, p, 2).starts.empty());
  EXPECT_EQ(query_blocks(100, p, 1000, 4).starts, (std::vector<std::int64_t>{98, 101, 104}));
  // Block 998 would need frames 998..1000.
  EXPECT_EQ(query_blocks(998, p, 1000).starts, (std::vector<std::int64_t>{992, 995}));
}

TEST(QueryBlocks, MatchesFrameEnumeration) {
  SearchPolicy p;
  for (std::int64_t frames : {0, 2, 3, 9, 40}) {
    for (std::int64_t i = 0; i < 45; ++i) {
      for (int off = -20; off <= 20; ++off) {
        EXPECT_EQ(query_blocks(i, p, frames, off).starts,
                  oracle::searched_blocks(i, off, frames, {}));
      }
    }
  }
}

TEST(Verify, SynchronisedPerfectDetectorIsNotFlagged) {
  const auto video = video_truth(single_hit(300, 150));
  const auto v = verify_detection(150, video, {}, 300);
  EXPECT_TRUE(v.any_video_hit);
  EXPECT_FALSE(v.flagged);
  EXPECT_FALSE(v.injected_offset);
  EXPECT_TRUE(verify_detection(150, video, {}, 300, 10).flagged);
}

TEST(Verify, FalseAudioDetectionIsFlagged) {
  const auto video = video_truth(single_hit(300, 150));
  EXPECT_TRUE(verify_detection(40, video, {}, 300).flagged);
}

TEST(Verify, NothingSearchableIsFlagged) {
  const auto v = verify_detection(0, DetectionStream(StreamKind::VideoBlock), {}, 2);
  EXPECT_TRUE(v.flagged);
  EXPECT_EQ(v.blocks_dropped, 3);
}

class WindowSweep : public ::testing::TestWithParam<BlockTruth> {};

TEST_P(WindowSweep, FlagsExactlyOutsideDerivedWindow) {
  const bool coverage = GetParam() == BlockTruth::Coverage;
  const std::int64_t frames = 200, h = 100;
  const auto video = video_truth(single_hit(frames, h), GetParam());
  const auto window = detectable_offsets({}, GetParam(), -20, 20);
  const std::set<int> inside(window.begin(), window.end());
  for (int off = -20; off <= 20; ++off) {
    const bool expect_found = oracle::found(h, off, frames, {}, coverage);
    EXPECT_EQ(inside.contains(off), expect_found) << off;
    EXPECT_EQ(verify_detection(h, video, {}, frames, off).flagged, !expect_found) << off;
  }
}

INSTANTIATE_TEST_SUITE_P(Truth, WindowSweep,
                         ::testing::Values(BlockTruth::StartFrame, BlockTruth::Coverage));

TEST(DetectableOffsets, KnownWindows) {
  EXPECT_EQ(detectable_offsets({}, BlockTruth::StartFrame, -20, 20),
            (std::vector<int>{0, 3, 6}));
  std::vector<int> cov;
  for (int d = -2; d <= 6; ++d) cov.push_back(d);
  EXPECT_EQ(detectable_offsets({}, BlockTruth::Coverage, -20, 20), cov);
}

TEST(RunSync, EmptyAndZeroOffsets) {
  const auto video = video_truth(single_hit(300, 150));
  EXPECT_TRUE(run_sync_detection(DetectionStream(), video, {}, 300).empty());
  const auto audio = audio_at({20, 150, 151, 290});
  OffsetMap zeros{{20, 0}, {150, 0}, {151, 0}, {290, 0}};
  const auto a = run_sync_detection(audio, video, {}, 300);
  auto b = run_sync_detection(audio, video, {}, 300, &zeros);
  ASSERT_EQ(a.size(), 4u);
  ASSERT_EQ(b.size(), 4u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].flagged, b[k].flagged);
    EXPECT_EQ(a[k].blocks_queried, b[k].blocks_queried);
  }
}

TEST(RunSync, SwappedKindsIsConfigError) {
  const auto audio = audio_at({5});
  EXPECT_THROW((void)run_sync_detection(audio, audio, {}, 100), ConfigError);
}

TEST(RunSync, MinusFifteenIsAlwaysFlagged) {
  std::vector<EventLabel> l(2000, EventLabel::Neither);
  std::vector<std::int64_t> hits;
  for (std::int64_t f = 50; f < 1950; f += 37) {
    l[static_cast<std::size_t>(f)] = EventLabel::Hit;
    hits.push_back(f);
  }
  const LabelTrack track({}, l);
  const auto audio = DetectionStream::from_hits(StreamKind::AudioSegment, hits);
  const auto video = video_truth(track);
  OffsetMap offsets;
  for (auto h : hits) offsets[h] = -15;
  for (const auto& v : run_sync_detection(audio, video, {}, 2000)) EXPECT_FALSE(v.flagged);
  for (const auto& v : run_sync_detection(audio, video, {}, 2000, &offsets)) EXPECT_TRUE(v.flagged);
}

TEST(RunSync, AddingVideoHitsNeverAddsFlags) {
  std::mt19937_64 rng(5);
  std::bernoulli_distribution coin(0.05);
  const std::int64_t frames = 600;
  for (int round = 0; round < 50; ++round) {
    std::vector<std::int64_t> audio_idx, vid_small, vid_extra;
    for (std::int64_t i = 0; i < frames; ++i) {
      if (coin(rng)) audio_idx.push_back(i);
      if (coin(rng)) vid_small.push_back(i);
      else if (coin(rng)) vid_extra.push_back(i);
    }
    std::vector<std::int64_t> vid_big(vid_small);
    vid_big.insert(vid_big.end(), vid_extra.begin(), vid_extra.end());
    std::sort(vid_big.begin(), vid_big.end());
    const auto audio = DetectionStream::from_hits(StreamKind::AudioSegment, audio_idx);
    OffsetMap offsets;
    for (auto i : audio_idx) offsets[i] = static_cast<int>(rng() % 31) - 15;
    const auto a = run_sync_detection(
        audio, DetectionStream::from_hits(StreamKind::VideoBlock, vid_small), {}, frames, &offsets);
    const auto b = run_sync_detection(
        audio, DetectionStream::from_hits(StreamKind::VideoBlock, vid_big), {}, frames, &offsets);
    ASSERT_EQ(a.size(), audio_idx.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (!a[k].flagged) { EXPECT_FALSE(b[k].flagged); }
    }
  }
}

TEST(OffsetSpec, AllowedSetAndValidation) {
  OffsetSpec spec;
  const auto allowed = spec.allowed_offsets();
  EXPECT_EQ(allowed.size(), 21u);
  for (int d : allowed) EXPECT_TRUE((d >= -15 && d <= -4) || (d >= 7 && d <= 15)) << d;
  OffsetSpec empty{-3, 6, -3, 6, 0.5, 0};
  EXPECT_THROW(empty.validate(), ConfigError);
  OffsetSpec bad_fraction;
  bad_fraction.fraction = 1.5;
  EXPECT_THROW(bad_fraction.validate(), ConfigError);
}

TEST(InjectOffsets, FractionZeroOneAndDeterminism) {
  std::vector<std::int64_t> idx;
  for (std::int64_t i = 0; i < 379; ++i) idx.push_back(i * 3);
  const auto audio = DetectionStream::from_hits(StreamKind::AudioSegment, idx);
  OffsetSpec spec;
  spec.fraction = 0.0;
  EXPECT_TRUE(inject_offsets(audio, spec).empty());
  spec.fraction = 1.0;
  const auto all = inject_offsets(audio, spec);
  EXPECT_EQ(all.size(), idx.size());
  for (const auto& [i, d] : all) EXPECT_TRUE((d >= -15 && d <= -4) || (d >= 7 && d <= 15)) << d;

  spec.fraction = 0.5;
  spec.seed = 99;
  const auto half = inject_offsets(audio, spec);
  EXPECT_EQ(half, inject_offsets(audio, spec));
  // Bin(379, 0.5): mean 189.5, sd 9.7.
  EXPECT_NEAR(static_cast<double>(half.size()), 189.5, 5 * 9.74);
}

TEST(Verdicts, JsonLinesWithSummary) {
  const auto video = video_truth(single_hit(300, 150));
  const auto audio = audio_at({40, 150});
  OffsetMap off{{150, 9}};
  const auto verdicts = run_sync_detection(audio, video, {}, 300, &off);
  std::ostringstream out;
  write_verdicts(out, verdicts);
  std::istringstream in(out.str());
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(in, line)) rows.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0]["detection_index"], 40);
  EXPECT_EQ(rows[1]["injected_offset"], 9);
  EXPECT_EQ(rows[2]["summary"]["flagged"], 2);
  EXPECT_EQ(rows[2]["summary"]["injected"], 1);
  for (const auto& v : verdicts) EXPECT_EQ(v.flagged, !v.any_video_hit);
}
