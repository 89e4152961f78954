#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "lsden/io.hpp"
#include "lsden/signal.hpp"

namespace lsden {

namespace detail {

inline std::uint32_t read_le32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}

inline std::uint16_t read_le16(const char* p) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(p[0]) |
                                    (static_cast<unsigned char>(p[1]) << 8));
}

inline void put_le(std::string& out, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace detail

/// Reads a RIFF/WAVE file holding 16-bit PCM mono. Samples are divided by
/// 32768.
inline Signal load_wav(const std::filesystem::path& path) {
  using detail::read_le16;
  using detail::read_le32;
  const std::string bytes = read_file(path);
  const std::string name = path.string();
  require(bytes.size() >= 12 && bytes.compare(0, 4, "RIFF") == 0 && bytes.compare(8, 4, "WAVE") == 0,
          Errc::malformed_file, name + " is not a RIFF/WAVE file");

  bool have_fmt = false;
  int channels = 0, bits = 0, rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string_view id(bytes.data() + pos, 4);
    const std::size_t len = read_le32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    require(body + len <= bytes.size() || id == "data", Errc::malformed_file,
            name + ": chunk overruns file");
    if (id == "fmt ") {
      require(len >= 16, Errc::malformed_file, name + ": short fmt chunk");
      std::uint16_t format = read_le16(bytes.data() + body);
      channels = read_le16(bytes.data() + body + 2);
      rate = static_cast<int>(read_le32(bytes.data() + body + 4));
      bits = read_le16(bytes.data() + body + 14);
      if (format == 0xFFFE && len >= 26) format = read_le16(bytes.data() + body + 24);
      require(format == 1, Errc::unsupported_encoding, name + ": only PCM is supported");
      require(channels == 1, Errc::unsupported_channels,
              name + ": " + std::to_string(channels) + " channels");
      require(bits == 16, Errc::unsupported_encoding,
              name + ": " + std::to_string(bits) + "-bit samples");
      require(rate > 0, Errc::malformed_file, name + ": zero sample rate");
      have_fmt = true;
    } else if (id == "data") {
      require(have_fmt, Errc::malformed_file, name + ": data chunk before fmt chunk");
      require(body + len <= bytes.size(), Errc::malformed_file, name + ": truncated data chunk");
      require(len % 2 == 0 && len > 0, Errc::malformed_file, name + ": bad data chunk length");
      Signal s{std::vector<double>(len / 2), rate};
      for (std::size_t i = 0; i < s.samples.size(); ++i) {
        const auto raw = static_cast<std::int16_t>(read_le16(bytes.data() + body + 2 * i));
        s.samples[i] = raw / 32768.0;
      }
      return s;
    }
    pos = body + len + (len & 1);
  }
  throw Error(Errc::malformed_file, name + ": no data chunk");
}

/// Writes 16-bit PCM mono. Samples must already lie in [-1, 1]; anything
/// outside is rejected rather than clipped.
inline void write_wav(const Signal& signal, const std::filesystem::path& path) {
  validate(signal);
  std::string pcm;
  pcm.reserve(signal.size() * 2);
  for (std::size_t i = 0; i < signal.size(); ++i) {
    const double v = signal.samples[i];
    require(std::isfinite(v) && v >= -1.0 && v <= 1.0, Errc::out_of_range,
            "sample " + std::to_string(i) + " = " + std::to_string(v) + " outside [-1, 1]");
    const long q = std::clamp(std::lround(v * 32768.0), -32768L, 32767L);
    detail::put_le(pcm, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)), 2);
  }

  std::string file;
  file += "RIFF";
  detail::put_le(file, static_cast<std::uint32_t>(36 + pcm.size()), 4);
  file += "WAVEfmt ";
  detail::put_le(file, 16, 4);
  detail::put_le(file, 1, 2);  // PCM
  detail::put_le(file, 1, 2);  // mono
  detail::put_le(file, static_cast<std::uint32_t>(signal.sample_rate), 4);
  detail::put_le(file, static_cast<std::uint32_t>(signal.sample_rate) * 2, 4);
  detail::put_le(file, 2, 2);
  detail::put_le(file, 16, 2);
  file += "data";
  detail::put_le(file, static_cast<std::uint32_t>(pcm.size()), 4);
  file += pcm;

  atomic_write(path, std::ios::binary, [&](std::ostream& out) { out.write(file.data(), file.size()); });
}

}  // namespace lsden
