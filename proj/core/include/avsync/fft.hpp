#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace avsync {

/// In-place iterative radix-2 FFT for a fixed power-of-two size. Twiddles and
/// the bit-reversal permutation are computed once; `forward` is const and may
/// be called concurrently.
class Fft {
 public:
  explicit Fft(std::size_t size);

  [[nodiscard]] std::size_t size() const { return size_; }

  /// Unnormalised forward transform: X[k] = sum_n x[n] exp(-2 pi i k n / N).
  void forward(std::span<std::complex<double>> data) const;

  /// |X[k]|^2 for k = 0..N/2 of a real input frame of length N.
  void power_spectrum(std::span<const double> frame, std::span<double> power,
                      std::vector<std::complex<double>>& scratch) const;

  /// |X[k]| for k = 0..N/2 of a real input frame of length N.
  void magnitude_spectrum(std::span<const double> frame, std::span<double> magnitude,
                          std::vector<std::complex<double>>& scratch) const;

 private:
  std::size_t size_;
  std::vector<std::complex<double>> twiddles_;
  std::vector<std::size_t> bit_reverse_;
};

}  // namespace avsync
