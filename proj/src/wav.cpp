#include "sslr/wav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace sslr {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
         std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
std::uint16_t le16(const unsigned char* p) {
  return std::uint16_t(p[0] | p[1] << 8);
}

void put32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xFF);
}
void put16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(v & 0xFF);
  out.push_back(v >> 8);
}
void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

MultichannelSignal read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file: " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  auto fail = [&](const std::string& why) -> MultichannelSignal {
    throw IoError("malformed WAV file " + path.string() + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    return fail("missing RIFF/WAVE header");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t len = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size()) {
      // Tolerate a truncated final data chunk, as some writers produce.
      if (std::memcmp(chunk, "data", 4) != 0) return fail("truncated chunk");
    }
    const std::size_t avail = std::min(len, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) return fail("short fmt chunk");
      format = le16(chunk + 8);
      channels = le16(chunk + 10);
      rate = le32(chunk + 12);
      bits = le16(chunk + 22);
      if (format == kFormatExtensible) {
        if (avail < 40) return fail("short extensible fmt chunk");
        format = le16(chunk + 8 + 24);  // first two bytes of the subformat GUID
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = avail;
    }
    pos = body + len + (len & 1);
  }
  if (channels == 0) return fail("missing fmt chunk");
  if (data == nullptr) return fail("missing data chunk");
  if (rate == 0) return fail("zero sample rate");
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32)
    throw IoError("unsupported WAV codec in " + path.string() +
                  " (need 16-bit PCM or 32-bit float)");

  const std::size_t width = bits / 8;
  const std::size_t frames = data_len / (width * channels);
  if (frames == 0) return fail("no samples");
  SignalMatrix samples(channels, Eigen::Index(frames));
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (t * channels + c) * width;
      double v;
      if (pcm16) {
        v = double(std::int16_t(le16(p))) / 32768.0;
      } else {
        const std::uint32_t raw = le32(p);
        float f;
        std::memcpy(&f, &raw, sizeof f);
        v = double(f);
      }
      samples(Eigen::Index(c), Eigen::Index(t)) = v;
    }
  }
  if (!samples.allFinite()) return fail("non-finite samples");
  return MultichannelSignal(std::move(samples), double(rate));
}

std::size_t write_wav(const MultichannelSignal& signal,
                      const std::filesystem::path& path, WavFormat format) {
  const std::size_t channels = signal.num_channels();
  const std::size_t frames = signal.num_samples();
  if (channels > 0xFFFF) throw ConfigError("write_wav: too many channels");
  const double rate_d = std::round(signal.sample_rate());
  if (rate_d < 1.0 || rate_d > 4294967295.0)
    throw ConfigError("write_wav: sample rate out of range");
  const auto rate = std::uint32_t(rate_d);
  const std::uint16_t bits = format == WavFormat::Pcm16 ? 16 : 32;
  const std::size_t width = bits / 8;
  const std::size_t data_len = frames * channels * width;
  if (data_len > 0xFFFFFFFFULL - 36) throw ConfigError("write_wav: file too large");

  std::vector<unsigned char> out;
  out.reserve(44 + data_len);
  put_tag(out, "RIFF");
  put32(out, std::uint32_t(36 + data_len));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put32(out, 16);
  put16(out, format == WavFormat::Pcm16 ? kFormatPcm : kFormatFloat);
  put16(out, std::uint16_t(channels));
  put32(out, rate);
  put32(out, std::uint32_t(rate * channels * width));
  put16(out, std::uint16_t(channels * width));
  put16(out, bits);
  put_tag(out, "data");
  put32(out, std::uint32_t(data_len));

  std::size_t clipped = 0;
  const auto& s = signal.samples();
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < channels; ++c) {
      double v = s(Eigen::Index(c), Eigen::Index(t));
      if (v > 1.0 || v < -1.0) {
        ++clipped;
        v = std::clamp(v, -1.0, 1.0);
      }
      if (format == WavFormat::Pcm16) {
        const double q = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
        put16(out, std::uint16_t(std::int16_t(q)));
      } else {
        const float f = float(v);
        std::uint32_t raw;
        std::memcpy(&raw, &f, sizeof raw);
        put32(out, raw);
      }
    }
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open for writing: " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()),
             std::streamsize(out.size()));
  if (!file) throw IoError("failed writing WAV file: " + path.string());
  return clipped;
}

}  // namespace sslr
