#include <benchmark/benchmark.h>

#include <random>

#include "avsync/detectors.hpp"
#include "avsync/evaluation.hpp"
#include "avsync/features.hpp"
#include "avsync/montecarlo.hpp"
#include "avsync/sync_engine.hpp"
#include "avsync/synth.hpp"

using namespace avsync;

namespace {

const SynthOutput& rally_60s() {
  static const SynthOutput out = [] {
    SynthSpec tmpl;
    tmpl.seed = 1;
    tmpl.set_snr_db(25.0);
    return generate(make_rally(tmpl, 28, 25, 75));
  }();
  return out;
}

}  // namespace

static void BM_ExtractSegment(benchmark::State& state) {
  const FeatureExtractor fx;
  const auto& audio = rally_60s().audio;
  const SegmentGrid grid({}, audio.size());
  std::int64_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fx.extract(audio, grid, i));
    i = (i + 1) % grid.segment_count();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ExtractSegment)->Unit(benchmark::kMicrosecond);

static void BM_DspAed60s(benchmark::State& state) {
  const auto& audio = rally_60s().audio;
  const SegmentGrid grid({}, audio.size());
  for (auto _ : state) benchmark::DoNotOptimize(dsp_aed(audio, grid));
  state.SetItemsProcessed(state.iterations() * grid.segment_count());
}
BENCHMARK(BM_DspAed60s)->Unit(benchmark::kMillisecond);

static void BM_SyncDetection(benchmark::State& state) {
  const auto n = state.range(0);
  std::vector<std::int64_t> hits;
  for (std::int64_t f = 40; f < n; f += 50) hits.push_back(f);
  const auto audio = DetectionStream::from_hits(StreamKind::AudioSegment, hits);
  const auto video = DetectionStream::from_hits(StreamKind::VideoBlock, hits);
  OffsetSpec spec;
  spec.seed = 3;
  const auto offsets = inject_offsets(audio, spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_sync_detection(audio, video, {}, n, &offsets));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(hits.size()));
}
BENCHMARK(BM_SyncDetection)->Arg(15'000)->Arg(150'000);

static void BM_AdjacencyAdjust(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::bernoulli_distribution coin(0.005);
  std::vector<std::int64_t> pred, truth;
  for (std::int64_t i = 0; i < 100'832; ++i) {
    if (coin(rng)) pred.push_back(i);
    if (coin(rng)) truth.push_back(i);
  }
  const auto stream = DetectionStream::from_hits(StreamKind::AudioSegment, pred);
  for (auto _ : state) benchmark::DoNotOptimize(adjacency_adjust(stream, truth, 100'832));
}
BENCHMARK(BM_AdjacencyAdjust);

static void BM_MonteCarloTrial(benchmark::State& state) {
  MonteCarloConfig c;
  c.hits_per_trial = 500;
  c.seed = 11;
  int t = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_trial(c, t++));
}
BENCHMARK(BM_MonteCarloTrial)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
