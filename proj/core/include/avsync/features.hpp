#pragma once

// MFCC feature images for audio segments: per 7680-sample segment, 60 centred
// STFT windows of 2048 points every 128 samples, 128 Slaney mel bands, 61
// cepstral coefficients, plus first and second temporal derivatives stacked
// as three channels (61 x 60 x 3).

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "avsync/audio.hpp"
#include "avsync/fft.hpp"
#include "avsync/timeline.hpp"

namespace avsync {

struct MfccParams {
  int sample_rate = 48000;
  int segment_len = 7680;
  int n_fft = 2048;
  int hop = 128;
  int n_mfcc = 61;
  int n_mels = 128;
  double fmin_hz = 0.0;
  double fmax_hz = 24000.0;
  /// Centred framing with reflection padding of n_fft/2 on both sides.
  bool centered = true;
  /// Added before the natural log of mel energies.
  double log_floor = 1e-10;
  /// Half-width of the least-squares slope filter used for deltas.
  int delta_half_width = 4;

  /// Throws ConfigError.
  void validate() const;

  [[nodiscard]] int n_bins() const { return n_fft / 2 + 1; }
  [[nodiscard]] int n_windows() const;
};

/// Channel 0: MFCC, 1: delta, 2: delta-delta. Each n_mfcc x n_windows.
struct FeatureImage {
  Eigen::MatrixXd mfcc;
  Eigen::MatrixXd delta;
  Eigen::MatrixXd delta2;

  static constexpr int kChannels = 3;

  [[nodiscard]] std::array<int, 3> shape() const {
    return {static_cast<int>(mfcc.rows()), static_cast<int>(mfcc.cols()), kChannels};
  }
  [[nodiscard]] double at(int coeff, int window, int channel) const;
  [[nodiscard]] const Eigen::MatrixXd& channel(int c) const;
  [[nodiscard]] bool all_finite() const;
};

// Slaney mel scale: linear below 1 kHz, logarithmic above.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// n_mels x n_bins triangular filters with area (Slaney) normalisation.
Eigen::MatrixXd mel_filterbank(const MfccParams& params);

/// Centre frequencies (Hz) of the mel filters.
std::vector<double> mel_center_frequencies(const MfccParams& params);

/// Orthonormal DCT-II basis, n_out x n_in.
Eigen::MatrixXd dct_matrix(int n_out, int n_in);

/// Periodic Hann window.
std::vector<double> hann_window(int length);

/// Precomputes window, filterbank, DCT basis and FFT tables for one parameter
/// set. All methods are const and thread-safe.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(MfccParams params = {});

  [[nodiscard]] const MfccParams& params() const { return params_; }

  /// n_bins x n_windows power spectrogram. Throws ShapeError unless the
  /// segment has exactly segment_len samples.
  [[nodiscard]] Eigen::MatrixXd stft_power(std::span<const double> segment) const;

  /// Mel energies before log compression, n_mels x n_windows.
  [[nodiscard]] Eigen::MatrixXd mel_power(const Eigen::MatrixXd& power) const;

  /// log(mel_power + log_floor).
  [[nodiscard]] Eigen::MatrixXd mel_project(const Eigen::MatrixXd& power) const;

  [[nodiscard]] Eigen::MatrixXd dct_cepstrum(const Eigen::MatrixXd& log_mel) const;

  [[nodiscard]] FeatureImage extract(std::span<const double> segment) const;

  /// Segment i of the grid, read from `buffer`. Throws RangeError when the
  /// segment is not fully inside the buffer.
  [[nodiscard]] FeatureImage extract(const AudioBuffer& buffer, const SegmentGrid& grid,
                                     std::int64_t i) const;

 private:
  MfccParams params_;
  std::vector<double> window_;
  Eigen::MatrixXd filterbank_;
  Eigen::MatrixXd dct_;
  Fft fft_;
};

// Free-function forms; each builds a FeatureExtractor, so prefer the class in
// loops.
Eigen::MatrixXd stft_power(std::span<const double> segment, const MfccParams& params = {});
Eigen::MatrixXd mel_project(const Eigen::MatrixXd& power, const MfccParams& params = {});
Eigen::MatrixXd dct_cepstrum(const Eigen::MatrixXd& log_mel, const MfccParams& params = {});
FeatureImage extract_features(const AudioBuffer& buffer, const SegmentGrid& grid, std::int64_t i,
                              const MfccParams& params = {});

/// Least-squares slope over +-half_width windows along each row, with edge
/// replication. Returns (delta, delta of delta). Throws ShapeError for fewer
/// than two columns.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> temporal_deltas(const Eigen::MatrixXd& mfcc,
                                                            int half_width = 4);

/// Single-pass delta filter used by temporal_deltas.
Eigen::MatrixXd delta_filter(const Eigen::MatrixXd& x, int half_width = 4);

/// Binary feature dump: three little-endian uint32 (n_mfcc, n_windows,
/// channels) followed by one float32 record per segment, row-major in
/// (coefficient, window, channel) order.
class FeatureDumpWriter {
 public:
  FeatureDumpWriter(const std::filesystem::path& path, int n_mfcc, int n_windows);

  void append(const FeatureImage& image);
  [[nodiscard]] std::int64_t records() const { return records_; }

 private:
  std::ofstream out_;
  int n_mfcc_;
  int n_windows_;
  std::int64_t records_ = 0;
  std::vector<float> row_;
};

struct FeatureDump {
  std::array<std::uint32_t, 3> shape{};
  std::vector<std::vector<float>> records;
};

FeatureDump read_feature_dump(const std::filesystem::path& path);

}  // namespace avsync
