#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "avsync/errors.hpp"
#include "avsync/features.hpp"
#include "oracles/mfcc_oracle.hpp"
#include "unit/temp_dir.hpp"

using namespace avsync;

namespace {

std::vector<double> noise_segment(std::uint64_t seed, double scale = 0.1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> x(7680);
  for (auto& v : x) v = g(rng);
  return x;
}

std::vector<double> tone(double hz, double amp = 0.5) {
  std::vector<double> x(7680);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / 48000.0);
  }
  return x;
}

const FeatureExtractor& extractor() {
  static const FeatureExtractor fx;
  return fx;
}

}  // namespace

TEST(MfccParams, DefaultsGiveSixtyWindows) {
  MfccParams p;
  EXPECT_EQ(p.n_windows(), 60);
  EXPECT_EQ(p.n_bins(), 1025);
  p.centered = false;
  EXPECT_EQ(p.n_windows(), 45);
}

TEST(MfccParams, MoreCoefficientsThanBandsIsConfigError) {
  MfccParams p;
  p.n_mfcc = 129;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Stft, WrongLengthIsShapeError) {
  std::vector<double> x(7000);
  EXPECT_THROW((void)extractor().stft_power(x), ShapeError);
}

TEST(Stft, ZeroInZeroOut) {
  const auto p = extractor().stft_power(std::vector<double>(7680, 0.0));
  EXPECT_EQ(p.rows(), 1025);
  EXPECT_EQ(p.cols(), 60);
  EXPECT_EQ(p.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Stft, BinAlignedSineMatchesDirectDft) {
  const int k = 100;  // 2343.75 Hz
  const auto seg = tone(k * 48000.0 / 2048.0);
  const auto p = extractor().stft_power(seg);
  oracle::MfccSetup s;
  for (int t : {10, 30, 49}) {
    const auto ref = oracle::direct_power_dft(oracle::frame_at(seg, t, s));
    int argmax = 0;
    for (int b = 0; b < 1025; ++b) {
      EXPECT_NEAR(p(b, t), ref[b], 1e-6 * ref[k]) << "window " << t << " bin " << b;
      if (p(b, t) > p(argmax, t)) argmax = b;
    }
    EXPECT_EQ(argmax, k);
  }
}

TEST(Stft, EdgeWindowsMatchDirectDftOnNoise) {
  const auto seg = noise_segment(3);
  const auto p = extractor().stft_power(seg);
  oracle::MfccSetup s;
  for (int t : {0, 1, 59}) {
    const auto ref = oracle::direct_power_dft(oracle::frame_at(seg, t, s));
    double peak = 0.0;
    for (double v : ref) peak = std::max(peak, v);
    for (int b = 0; b < 1025; ++b) EXPECT_NEAR(p(b, t), ref[b], 1e-9 * peak);
  }
}

TEST(Stft, Parseval) {
  const auto seg = noise_segment(11);
  const auto p = extractor().stft_power(seg);
  oracle::MfccSetup s;
  for (int t = 0; t < 60; t += 7) {
    const auto frame = oracle::frame_at(seg, t, s);
    double time_energy = 0.0;
    for (double v : frame) time_energy += v * v;
    double spec = p(0, t) + p(1024, t);
    for (int b = 1; b < 1024; ++b) spec += 2.0 * p(b, t);
    EXPECT_NEAR(spec / 2048.0, time_energy, 1e-9 * time_energy);
  }
}

TEST(Mel, FilterbankMatchesReference) {
  const auto fb = mel_filterbank({});
  const auto ref = oracle::mel_weights({});
  ASSERT_EQ(fb.rows(), 128);
  ASSERT_EQ(fb.cols(), 1025);
  for (int m = 0; m < 128; ++m) {
    for (int b = 0; b < 1025; ++b) EXPECT_NEAR(fb(m, b), ref[m][b], 1e-12);
  }
}

TEST(Mel, ScaleRoundTripAndBreakPoint) {
  EXPECT_NEAR(hz_to_mel(1000.0), 15.0, 1e-12);
  for (double f : {0.0, 250.0, 999.0, 1000.0, 4000.0, 24000.0}) {
    EXPECT_NEAR(mel_to_hz(hz_to_mel(f)), f, 1e-9);
    EXPECT_NEAR(hz_to_mel(f), oracle::slaney_hz_to_mel(f), 1e-12);
  }
}

TEST(Mel, CentresIncrease) {
  const auto c = mel_center_frequencies({});
  for (std::size_t i = 1; i < c.size(); ++i) EXPECT_GT(c[i], c[i - 1]);
}

TEST(Mel, ZeroSpectrumGivesLogFloor) {
  const auto lm = extractor().mel_project(Eigen::MatrixXd::Zero(1025, 60));
  for (int i = 0; i < lm.size(); ++i) EXPECT_DOUBLE_EQ(lm.data()[i], std::log(1e-10));
}

TEST(Mel, SingleBinTouchesAtMostTwoAdjacentBands) {
  for (int b = 0; b < 1025; ++b) {
    Eigen::MatrixXd power = Eigen::MatrixXd::Zero(1025, 1);
    power(b, 0) = 1.0;
    const auto mp = extractor().mel_power(power);
    std::vector<int> on;
    for (int m = 0; m < mp.rows(); ++m) {
      if (mp(m, 0) != 0.0) on.push_back(m);
    }
    ASSERT_LE(on.size(), 2u) << "bin " << b;
    if (on.size() == 2) { EXPECT_EQ(on[1], on[0] + 1) << "bin " << b; }
  }
}

TEST(Mel, EnergyScalesWithSquareOfGain) {
  const auto seg = noise_segment(5);
  const auto base = extractor().mel_power(extractor().stft_power(seg));
  for (double a : {1.5, 3.0, 10.0}) {
    std::vector<double> scaled(seg);
    for (auto& v : scaled) v *= a;
    const auto mp = extractor().mel_power(extractor().stft_power(scaled));
    for (int i = 0; i < mp.size(); ++i) {
      EXPECT_NEAR(mp.data()[i], a * a * base.data()[i], 1e-9 * a * a * base.data()[i] + 1e-300);
      if (base.data()[i] > 0.0) { EXPECT_GT(mp.data()[i], base.data()[i]); }
    }
  }
}

TEST(Dct, Orthonormal) {
  const auto full = dct_matrix(128, 128);
  EXPECT_LE((full * full.transpose() - Eigen::MatrixXd::Identity(128, 128)).cwiseAbs().maxCoeff(),
            1e-9);
  const auto kept = dct_matrix(61, 128);
  EXPECT_LE((kept * kept.transpose() - Eigen::MatrixXd::Identity(61, 61)).cwiseAbs().maxCoeff(),
            1e-9);
}

TEST(Dct, ConstantColumn) {
  const auto c = extractor().dct_cepstrum(Eigen::MatrixXd::Constant(128, 4, 2.5));
  for (int t = 0; t < 4; ++t) {
    EXPECT_NEAR(c(0, t), 2.5 * std::sqrt(128.0), 1e-9);
    for (int k = 1; k < 61; ++k) EXPECT_NEAR(c(k, t), 0.0, 1e-9);
  }
}

TEST(Dct, MatchesDirectSum) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  oracle::Grid x(128, std::vector<double>(3));
  Eigen::MatrixXd m(128, 3);
  for (int i = 0; i < 128; ++i) {
    for (int t = 0; t < 3; ++t) m(i, t) = x[i][t] = g(rng);
  }
  const auto c = extractor().dct_cepstrum(m);
  const auto ref = oracle::dct2(x, 61);
  for (int k = 0; k < 61; ++k) {
    for (int t = 0; t < 3; ++t) EXPECT_NEAR(c(k, t), ref[k][t], 1e-9);
  }
}

TEST(Deltas, ConstantGivesZero) {
  const auto [d, d2] = temporal_deltas(Eigen::MatrixXd::Constant(61, 60, -3.0));
  EXPECT_EQ(d.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(d2.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Deltas, LinearRampGivesSlopeInInterior) {
  Eigen::MatrixXd x(2, 60);
  for (int t = 0; t < 60; ++t) {
    x(0, t) = 0.75 * t;
    x(1, t) = -2.0 * t + 5.0;
  }
  const auto d = delta_filter(x);
  for (int t = 4; t < 56; ++t) {
    EXPECT_NEAR(d(0, t), 0.75, 1e-12);
    EXPECT_NEAR(d(1, t), -2.0, 1e-12);
  }
}

TEST(Deltas, Linear) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(5, 60), b(5, 60);
  for (int i = 0; i < a.size(); ++i) {
    a.data()[i] = g(rng);
    b.data()[i] = g(rng);
  }
  const Eigen::MatrixXd lhs = delta_filter(2.0 * a - 0.5 * b);
  const Eigen::MatrixXd rhs = 2.0 * delta_filter(a) - 0.5 * delta_filter(b);
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Deltas, MatchesReferenceWithEdges) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(3, 60);
  oracle::Grid ga(3, std::vector<double>(60));
  for (int r = 0; r < 3; ++r) {
    for (int t = 0; t < 60; ++t) a(r, t) = ga[r][t] = g(rng);
  }
  const auto d = delta_filter(a);
  const auto ref = oracle::slope(ga, 4);
  for (int r = 0; r < 3; ++r) {
    for (int t = 0; t < 60; ++t) EXPECT_NEAR(d(r, t), ref[r][t], 1e-12);
  }
}

TEST(Deltas, TooFewWindows) {
  EXPECT_THROW(temporal_deltas(Eigen::MatrixXd::Zero(61, 1)), ShapeError);
}

TEST(Extract, ShapeFiniteAndDeterministic) {
  const auto seg = noise_segment(21);
  const auto a = extractor().extract(seg);
  const auto b = extractor().extract(seg);
  EXPECT_EQ(a.shape(), (std::array<int, 3>{61, 60, 3}));
  EXPECT_TRUE(a.all_finite());
  EXPECT_EQ(a.mfcc, b.mfcc);
  EXPECT_EQ(a.delta, b.delta);
  EXPECT_EQ(a.delta2, b.delta2);
}

TEST(Extract, SilenceIsFlat) {
  const auto img = extractor().extract(std::vector<double>(7680, 0.0));
  for (int k = 0; k < 61; ++k) {
    for (int t = 1; t < 60; ++t) EXPECT_EQ(img.mfcc(k, t), img.mfcc(k, 0));
  }
  EXPECT_EQ(img.delta.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(img.delta2.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Extract, ExtremeInputStaysFinite) {
  std::vector<double> x(7680, 0.0);
  x[100] = 1.0;
  x[5000] = -1.0;
  EXPECT_TRUE(extractor().extract(x).all_finite());
}

TEST(Extract, ToneMatchesReferencePipeline) {
  const auto seg = tone(440.0);
  const auto img = extractor().extract(seg);
  const auto ref = oracle::features(seg, {}, oracle::direct_power_dft);
  for (int k = 0; k < 61; ++k) {
    for (int t = 0; t < 60; ++t) {
      EXPECT_NEAR(img.mfcc(k, t), ref.mfcc[k][t], 1e-4);
      EXPECT_NEAR(img.delta(k, t), ref.delta[k][t], 1e-4);
      EXPECT_NEAR(img.delta2(k, t), ref.delta2[k][t], 1e-4);
    }
  }
}

TEST(Extract, GridSegmentReadsTheRightSamples) {
  AudioBuffer buf;
  const auto grid = SegmentGrid::for_frames({}, 10);
  buf.samples.resize(static_cast<std::size_t>(grid.total_samples()));
  std::mt19937_64 rng(4);
  std::normal_distribution<float> g(0.0f, 0.1f);
  for (auto& v : buf.samples) v = g(rng);
  std::vector<double> seg(7680);
  for (int j = 0; j < 7680; ++j) seg[j] = buf.samples[static_cast<std::size_t>(3 * 1920 + j)];
  EXPECT_EQ(extractor().extract(buf, grid, 3).mfcc, extractor().extract(seg).mfcc);
  EXPECT_THROW((void)extractor().extract(buf, grid, grid.segment_count()), RangeError);
}

TEST(FeatureDump, RoundTrip) {
  testing_support::TempDir dir;
  const auto img = extractor().extract(noise_segment(8));
  {
    FeatureDumpWriter w(dir / "f.bin", 61, 60);
    w.append(img);
    w.append(img);
    EXPECT_EQ(w.records(), 2);
  }
  const auto dump = read_feature_dump(dir / "f.bin");
  EXPECT_EQ(dump.shape, (std::array<std::uint32_t, 3>{61, 60, 3}));
  ASSERT_EQ(dump.records.size(), 2u);
  ASSERT_EQ(dump.records[0].size(), 61u * 60u * 3u);
  // (coefficient, window, channel) row-major.
  EXPECT_FLOAT_EQ(dump.records[1][(7 * 60 + 11) * 3 + 2], static_cast<float>(img.delta2(7, 11)));
  EXPECT_FLOAT_EQ(dump.records[0][(60 * 60 + 59) * 3 + 0], static_cast<float>(img.mfcc(60, 59)));
}
