#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace avsync {

/// Mono PCM audio, amplitudes nominally in [-1, 1].
struct AudioBuffer {
  int sample_rate = 48000;
  std::vector<float> samples;

  [[nodiscard]] std::int64_t size() const { return static_cast<std::int64_t>(samples.size()); }
  [[nodiscard]] double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Per-sample mean of two channels. Throws FormatError on length mismatch.
AudioBuffer downmix(std::span<const float> left, std::span<const float> right,
                    int sample_rate = 48000);

/// Reads a RIFF/WAVE file (PCM 16/24/32-bit integer or 32-bit float), mixing
/// all channels down to mono. Rejects files whose rate differs from
/// `expected_rate` with a FormatError; there is no resampling.
AudioBuffer read_wav(const std::filesystem::path& path, int expected_rate = 48000);

/// Writes a mono 32-bit float WAV file.
void write_wav(const std::filesystem::path& path, const AudioBuffer& buffer);

}  // namespace avsync
