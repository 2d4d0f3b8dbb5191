#include "avsync/audio.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "avsync/errors.hpp"

namespace avsync {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::ofstream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                              static_cast<char>((v >> 16) & 0xFF),
                              static_cast<char>((v >> 24) & 0xFF)};
  out.write(b.data(), 4);
}

void put_u16(std::ofstream& out, std::uint16_t v) {
  const std::array<char, 2> b{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF)};
  out.write(b.data(), 2);
}

float decode_sample(const unsigned char* p, std::uint16_t format, std::uint16_t bits) {
  if (format == kFormatFloat) {
    return std::bit_cast<float>(read_u32(p));
  }
  switch (bits) {
    case 16:
      return static_cast<float>(static_cast<std::int16_t>(read_u16(p)) / 32768.0);
    case 24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v -= 0x1000000;
      return static_cast<float>(v / 8388608.0);
    }
    case 32:
      return static_cast<float>(static_cast<std::int32_t>(read_u32(p)) / 2147483648.0);
    default:
      break;
  }
  throw FormatError("unsupported PCM bit depth " + std::to_string(bits));
}

}  // namespace

AudioBuffer downmix(std::span<const float> left, std::span<const float> right, int sample_rate) {
  if (left.size() != right.size()) {
    throw FormatError("channel length mismatch: " + std::to_string(left.size()) + " vs " +
                      std::to_string(right.size()));
  }
  AudioBuffer out{sample_rate, std::vector<float>(left.size())};
  for (std::size_t i = 0; i < left.size(); ++i) {
    out.samples[i] = static_cast<float>(0.5 * (static_cast<double>(left[i]) + right[i]));
  }
  return out;
}

AudioBuffer read_wav(const std::filesystem::path& path, int expected_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open WAV file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(path.string() + " is not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t len = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (len < 16 || avail < 16) throw FormatError("truncated fmt chunk");
      format = read_u16(chunk + 8);
      channels = read_u16(chunk + 10);
      rate = read_u32(chunk + 12);
      bits = read_u16(chunk + 22);
      if (format == kFormatExtensible && len >= 26 && avail >= 26) {
        format = read_u16(chunk + 8 + 24);
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_len = std::min<std::size_t>(len, avail);
    }
    pos = body + len + (len & 1U);
  }
  if (format == 0) throw FormatError("missing fmt chunk in " + path.string());
  if (data == nullptr) throw FormatError("missing data chunk in " + path.string());
  if (format != kFormatPcm && format != kFormatFloat) {
    throw FormatError("unsupported WAV format tag " + std::to_string(format));
  }
  if (format == kFormatFloat && bits != 32) {
    throw FormatError("unsupported float bit depth " + std::to_string(bits));
  }
  if (format == kFormatPcm && bits != 16 && bits != 24 && bits != 32) {
    throw FormatError("unsupported PCM bit depth " + std::to_string(bits));
  }
  if (channels == 0) throw FormatError("WAV file declares zero channels");
  if (static_cast<int>(rate) != expected_rate) {
    throw FormatError("unsupported sample rate " + std::to_string(rate) + " Hz (expected " +
                      std::to_string(expected_rate) + " Hz; resample upstream)");
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t frames = data_len / frame_bytes;
  AudioBuffer out{static_cast<int>(rate), std::vector<float>(frames)};
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      acc += decode_sample(data + f * frame_bytes + c * bytes_per_sample, format, bits);
    }
    out.samples[f] = static_cast<float>(acc / channels);
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& buffer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write WAV file " + path.string());
  const auto data_bytes = static_cast<std::uint32_t>(buffer.samples.size() * 4);
  out.write("RIFF", 4);
  put_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(out, 16);
  put_u16(out, kFormatFloat);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate) * 4);
  put_u16(out, 4);
  put_u16(out, 32);
  out.write("data", 4);
  put_u32(out, data_bytes);
  for (float s : buffer.samples) put_u32(out, std::bit_cast<std::uint32_t>(s));
}

}  // namespace avsync
