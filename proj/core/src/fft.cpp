#include "avsync/fft.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "avsync/errors.hpp"

namespace avsync {

Fft::Fft(std::size_t size) : size_(size) {
  if (size < 2 || (size & (size - 1)) != 0) {
    throw ConfigError("FFT size must be a power of two >= 2, got " + std::to_string(size));
  }
  twiddles_.resize(size / 2);
  for (std::size_t k = 0; k < size / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(size);
    twiddles_[k] = {std::cos(angle), std::sin(angle)};
  }
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < size) ++bits;
  bit_reverse_.resize(size);
  for (std::size_t i = 0; i < size; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) {
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
    }
    bit_reverse_[i] = r;
  }
}

void Fft::forward(std::span<std::complex<double>> data) const {
  if (data.size() != size_) {
    throw ShapeError("FFT of size " + std::to_string(size_) + " given " +
                     std::to_string(data.size()) + " points");
  }
  for (std::size_t i = 0; i < size_; ++i) {
    const auto j = bit_reverse_[i];
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= size_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = size_ / len;
    for (std::size_t start = 0; start < size_; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const auto t = twiddles_[k * step] * data[start + k + half];
        const auto u = data[start + k];
        data[start + k] = u + t;
        data[start + k + half] = u - t;
      }
    }
  }
}

void Fft::power_spectrum(std::span<const double> frame, std::span<double> power,
                         std::vector<std::complex<double>>& scratch) const {
  if (frame.size() != size_ || power.size() != size_ / 2 + 1) {
    throw ShapeError("power_spectrum: frame/bins size mismatch");
  }
  scratch.resize(size_);
  for (std::size_t i = 0; i < size_; ++i) scratch[i] = {frame[i], 0.0};
  forward(scratch);
  for (std::size_t k = 0; k <= size_ / 2; ++k) power[k] = std::norm(scratch[k]);
}

void Fft::magnitude_spectrum(std::span<const double> frame, std::span<double> magnitude,
                             std::vector<std::complex<double>>& scratch) const {
  power_spectrum(frame, magnitude, scratch);
  for (auto& m : magnitude) m = std::sqrt(m);
}

}  // namespace avsync
