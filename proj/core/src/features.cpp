#include "avsync/features.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "avsync/errors.hpp"

namespace avsync {

namespace {

constexpr double kMelLinearStep = 200.0 / 3.0;
constexpr double kMelLogStartHz = 1000.0;
constexpr double kMelLogStart = kMelLogStartHz / kMelLinearStep;  // 15
const double kMelLogStep = std::log(6.4) / 27.0;

std::int64_t reflect(std::int64_t j, std::int64_t n) {
  // numpy "reflect": the edge sample is not repeated.
  while (j < 0 || j >= n) {
    if (j < 0) j = -j;
    if (j >= n) j = 2 * (n - 1) - j;
  }
  return j;
}

void put_u32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

}  // namespace

void MfccParams::validate() const {
  if (sample_rate <= 0 || segment_len <= 0 || hop <= 0 || n_fft <= 0 || n_mfcc <= 0 ||
      n_mels <= 0) {
    throw ConfigError("MFCC sizes and rates must be positive");
  }
  if (n_mfcc > n_mels) {
    throw ConfigError("n_mfcc (" + std::to_string(n_mfcc) + ") exceeds n_mels (" +
                      std::to_string(n_mels) + ")");
  }
  if (segment_len % hop != 0) {
    throw ConfigError("hop " + std::to_string(hop) + " does not divide segment length " +
                      std::to_string(segment_len));
  }
  if (centered && n_fft / 2 >= segment_len) {
    throw ConfigError("reflection padding needs n_fft/2 < segment length");
  }
  if (!centered && n_fft > segment_len) {
    throw ConfigError("n_fft exceeds segment length");
  }
  if (fmin_hz < 0.0 || fmax_hz <= fmin_hz || fmax_hz > sample_rate / 2.0) {
    throw ConfigError("mel band edges must satisfy 0 <= fmin < fmax <= sample_rate/2");
  }
  if (!(log_floor > 0.0)) throw ConfigError("log_floor must be positive");
  if (delta_half_width < 1) throw ConfigError("delta_half_width must be >= 1");
}

int MfccParams::n_windows() const {
  if (centered) return (segment_len + hop - 1) / hop;
  return (segment_len - n_fft) / hop + 1;
}

double FeatureImage::at(int coeff, int window, int c) const { return channel(c)(coeff, window); }

const Eigen::MatrixXd& FeatureImage::channel(int c) const {
  switch (c) {
    case 0:
      return mfcc;
    case 1:
      return delta;
    case 2:
      return delta2;
    default:
      throw RangeError("feature channel " + std::to_string(c) + " out of range");
  }
}

bool FeatureImage::all_finite() const {
  return mfcc.allFinite() && delta.allFinite() && delta2.allFinite();
}

double hz_to_mel(double hz) {
  if (hz < kMelLogStartHz) return hz / kMelLinearStep;
  return kMelLogStart + std::log(hz / kMelLogStartHz) / kMelLogStep;
}

double mel_to_hz(double mel) {
  if (mel < kMelLogStart) return mel * kMelLinearStep;
  return kMelLogStartHz * std::exp(kMelLogStep * (mel - kMelLogStart));
}

std::vector<double> mel_center_frequencies(const MfccParams& params) {
  // n_mels + 2 edges evenly spaced in mel; filter i is centred on edge i + 1.
  const double lo = hz_to_mel(params.fmin_hz);
  const double hi = hz_to_mel(params.fmax_hz);
  std::vector<double> edges(static_cast<std::size_t>(params.n_mels) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / (edges.size() - 1));
  }
  return edges;
}

Eigen::MatrixXd mel_filterbank(const MfccParams& params) {
  params.validate();
  const auto edges = mel_center_frequencies(params);
  const int bins = params.n_bins();
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(params.n_mels, bins);
  for (int m = 0; m < params.n_mels; ++m) {
    const double left = edges[m];
    const double center = edges[m + 1];
    const double right = edges[m + 2];
    const double norm = 2.0 / (right - left);
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * params.sample_rate / params.n_fft;
      const double rising = (f - left) / (center - left);
      const double falling = (right - f) / (right - center);
      const double w = std::max(0.0, std::min(rising, falling));
      fb(m, k) = w * norm;
    }
  }
  return fb;
}

Eigen::MatrixXd dct_matrix(int n_out, int n_in) {
  if (n_out > n_in) {
    throw ConfigError("cannot keep " + std::to_string(n_out) + " DCT coefficients of " +
                      std::to_string(n_in) + " inputs");
  }
  Eigen::MatrixXd d(n_out, n_in);
  for (int k = 0; k < n_out; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n_in);
    for (int n = 0; n < n_in; ++n) {
      d(k, n) = scale * std::cos(std::numbers::pi * k * (2.0 * n + 1.0) / (2.0 * n_in));
    }
  }
  return d;
}

std::vector<double> hann_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / length);
  }
  return w;
}

FeatureExtractor::FeatureExtractor(MfccParams params)
    : params_((params.validate(), params)),
      window_(hann_window(params.n_fft)),
      filterbank_(mel_filterbank(params)),
      dct_(dct_matrix(params.n_mfcc, params.n_mels)),
      fft_(static_cast<std::size_t>(params.n_fft)) {}

Eigen::MatrixXd FeatureExtractor::stft_power(std::span<const double> segment) const {
  const auto len = static_cast<std::int64_t>(segment.size());
  if (len != params_.segment_len) {
    throw ShapeError("segment has " + std::to_string(len) + " samples, expected " +
                     std::to_string(params_.segment_len));
  }
  const int n_fft = params_.n_fft;
  const int windows = params_.n_windows();
  const std::int64_t offset = params_.centered ? n_fft / 2 : 0;

  Eigen::MatrixXd power(params_.n_bins(), windows);
  std::vector<double> frame(static_cast<std::size_t>(n_fft));
  std::vector<double> column(static_cast<std::size_t>(params_.n_bins()));
  std::vector<std::complex<double>> scratch;
  for (int t = 0; t < windows; ++t) {
    const std::int64_t start = static_cast<std::int64_t>(t) * params_.hop - offset;
    for (int j = 0; j < n_fft; ++j) {
      frame[j] = window_[j] * segment[static_cast<std::size_t>(reflect(start + j, len))];
    }
    fft_.power_spectrum(frame, column, scratch);
    power.col(t) = Eigen::Map<const Eigen::VectorXd>(column.data(), params_.n_bins());
  }
  return power;
}

Eigen::MatrixXd FeatureExtractor::mel_power(const Eigen::MatrixXd& power) const {
  if (power.rows() != params_.n_bins()) {
    throw ShapeError("power spectrogram has " + std::to_string(power.rows()) + " bins, expected " +
                     std::to_string(params_.n_bins()));
  }
  return filterbank_ * power;
}

Eigen::MatrixXd FeatureExtractor::mel_project(const Eigen::MatrixXd& power) const {
  const double floor = params_.log_floor;
  return mel_power(power).unaryExpr([floor](double x) { return std::log(x + floor); });
}

Eigen::MatrixXd FeatureExtractor::dct_cepstrum(const Eigen::MatrixXd& log_mel) const {
  if (log_mel.rows() != params_.n_mels) {
    throw ShapeError("log-mel spectrogram has " + std::to_string(log_mel.rows()) +
                     " bands, expected " + std::to_string(params_.n_mels));
  }
  return dct_ * log_mel;
}

FeatureImage FeatureExtractor::extract(std::span<const double> segment) const {
  FeatureImage image;
  image.mfcc = dct_cepstrum(mel_project(stft_power(segment)));
  auto [delta, delta2] = temporal_deltas(image.mfcc, params_.delta_half_width);
  image.delta = std::move(delta);
  image.delta2 = std::move(delta2);
  return image;
}

FeatureImage FeatureExtractor::extract(const AudioBuffer& buffer, const SegmentGrid& grid,
                                       std::int64_t i) const {
  if (grid.segment_len() != params_.segment_len) {
    throw ConfigError("grid segment length does not match MFCC parameters");
  }
  const auto range = segment_sample_range(grid, i);
  if (range.end > buffer.size()) {
    throw RangeError("segment " + std::to_string(i) + " [" + std::to_string(range.begin) + ", " +
                     std::to_string(range.end) + ") overruns audio of " +
                     std::to_string(buffer.size()) + " samples");
  }
  std::vector<double> segment(buffer.samples.begin() + range.begin,
                              buffer.samples.begin() + range.end);
  return extract(segment);
}

Eigen::MatrixXd stft_power(std::span<const double> segment, const MfccParams& params) {
  return FeatureExtractor(params).stft_power(segment);
}

Eigen::MatrixXd mel_project(const Eigen::MatrixXd& power, const MfccParams& params) {
  return FeatureExtractor(params).mel_project(power);
}

Eigen::MatrixXd dct_cepstrum(const Eigen::MatrixXd& log_mel, const MfccParams& params) {
  params.validate();
  if (log_mel.rows() != params.n_mels) {
    throw ShapeError("log-mel spectrogram has " + std::to_string(log_mel.rows()) +
                     " bands, expected " + std::to_string(params.n_mels));
  }
  return dct_matrix(params.n_mfcc, params.n_mels) * log_mel;
}

FeatureImage extract_features(const AudioBuffer& buffer, const SegmentGrid& grid, std::int64_t i,
                              const MfccParams& params) {
  return FeatureExtractor(params).extract(buffer, grid, i);
}

Eigen::MatrixXd delta_filter(const Eigen::MatrixXd& x, int half_width) {
  if (x.cols() < 2) {
    throw ShapeError("temporal deltas need at least 2 windows, got " + std::to_string(x.cols()));
  }
  if (half_width < 1) throw ConfigError("delta half width must be >= 1");
  const auto cols = x.cols();
  double denom = 0.0;
  for (int n = 1; n <= half_width; ++n) denom += 2.0 * n * n;

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), cols);
  for (Eigen::Index t = 0; t < cols; ++t) {
    for (int n = 1; n <= half_width; ++n) {
      const auto ahead = std::min<Eigen::Index>(t + n, cols - 1);
      const auto behind = std::max<Eigen::Index>(t - n, 0);
      out.col(t) += n * (x.col(ahead) - x.col(behind));
    }
  }
  return out / denom;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> temporal_deltas(const Eigen::MatrixXd& mfcc,
                                                            int half_width) {
  auto delta = delta_filter(mfcc, half_width);
  auto delta2 = delta_filter(delta, half_width);
  return {std::move(delta), std::move(delta2)};
}

FeatureDumpWriter::FeatureDumpWriter(const std::filesystem::path& path, int n_mfcc, int n_windows)
    : out_(path, std::ios::binary), n_mfcc_(n_mfcc), n_windows_(n_windows) {
  if (!out_) throw FormatError("cannot write feature dump " + path.string());
  put_u32(out_, static_cast<std::uint32_t>(n_mfcc));
  put_u32(out_, static_cast<std::uint32_t>(n_windows));
  put_u32(out_, FeatureImage::kChannels);
  row_.resize(static_cast<std::size_t>(n_mfcc) * n_windows * FeatureImage::kChannels);
}

void FeatureDumpWriter::append(const FeatureImage& image) {
  const auto shape = image.shape();
  if (shape[0] != n_mfcc_ || shape[1] != n_windows_) {
    throw ShapeError("feature image shape does not match dump header");
  }
  std::size_t k = 0;
  for (int m = 0; m < n_mfcc_; ++m) {
    for (int w = 0; w < n_windows_; ++w) {
      row_[k++] = static_cast<float>(image.mfcc(m, w));
      row_[k++] = static_cast<float>(image.delta(m, w));
      row_[k++] = static_cast<float>(image.delta2(m, w));
    }
  }
  for (float v : row_) put_u32(out_, std::bit_cast<std::uint32_t>(v));
  ++records_;
}

FeatureDump read_feature_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open feature dump " + path.string());
  auto read_u32 = [&in]() {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) return std::uint32_t{0};
    return static_cast<std::uint32_t>(b[0] | (b[1] << 8) | (b[2] << 16)) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  };
  FeatureDump dump;
  for (auto& d : dump.shape) d = read_u32();
  if (!in) throw FormatError("truncated feature dump header");
  const std::size_t per_record =
      static_cast<std::size_t>(dump.shape[0]) * dump.shape[1] * dump.shape[2];
  if (per_record == 0) throw FormatError("feature dump declares an empty shape");
  while (in.peek() != std::char_traits<char>::eof()) {
    std::vector<float> record(per_record);
    for (auto& v : record) {
      const auto bits = read_u32();
      if (!in) throw FormatError("truncated feature record");
      v = std::bit_cast<float>(bits);
    }
    dump.records.push_back(std::move(record));
  }
  return dump;
}

}  // namespace avsync
