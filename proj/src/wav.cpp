#include "pangram/wav.hpp"

#include "pangram/errors.hpp"
#include "pangram/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

namespace pangram {

namespace {

static_assert(std::endian::native == std::endian::little, "WAV codec assumes a little-endian host");

template <class T>
T read_le(std::string_view bytes, size_t offset) {
  if (offset + sizeof(T) > bytes.size()) throw DataError("truncated WAV file");
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

template <class T>
void append_le(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

AudioClip parse_wav(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE") {
    throw DataError("not a RIFF/WAVE file");
  }
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string_view id = bytes.substr(pos, 4);
    const auto size = read_le<uint32_t>(bytes, pos + 4);
    const size_t body = pos + 8;
    if (id == "fmt ") {
      format = read_le<uint16_t>(bytes, body);
      channels = read_le<uint16_t>(bytes, body + 2);
      rate = read_le<uint32_t>(bytes, body + 4);
      bits = read_le<uint16_t>(bytes, body + 14);
      if (format == kFormatExtensible && size >= 26) format = read_le<uint16_t>(bytes, body + 24);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw DataError("WAV data chunk before fmt chunk");
      if (channels != 1) throw DataError("WAV must be mono, got " + std::to_string(channels) + " channels");
      if (rate != kSampleRate) {
        throw DataError("WAV sample rate must be 16000 Hz, got " + std::to_string(rate));
      }
      const size_t len = std::min<size_t>(size, bytes.size() - body);
      AudioClip clip;
      if (format == kFormatPcm && bits == 16) {
        clip.samples.resize(len / 2);
        for (size_t i = 0; i < clip.samples.size(); ++i) {
          clip.samples[i] = read_le<int16_t>(bytes, body + 2 * i) / 32768.0;
        }
      } else if (format == kFormatFloat && bits == 32) {
        clip.samples.resize(len / 4);
        for (size_t i = 0; i < clip.samples.size(); ++i) {
          clip.samples[i] = read_le<float>(bytes, body + 4 * i);
        }
      } else {
        throw DataError("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                        std::to_string(bits) + " bits)");
      }
      return clip;
    }
    pos = body + size + (size & 1);
  }
  throw DataError("WAV file has no data chunk");
}

AudioClip read_wav(const std::filesystem::path& path) {
  try {
    return parse_wav(io::read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string encode_wav(const AudioClip& clip, WavEncoding encoding) {
  const uint16_t bits = encoding == WavEncoding::pcm16 ? 16 : 32;
  const uint16_t format = encoding == WavEncoding::pcm16 ? kFormatPcm : kFormatFloat;
  const uint32_t data_bytes = static_cast<uint32_t>(clip.samples.size() * (bits / 8));
  std::string out;
  out += "RIFF";
  append_le<uint32_t>(out, 36 + data_bytes);
  out += "WAVEfmt ";
  append_le<uint32_t>(out, 16);
  append_le<uint16_t>(out, format);
  append_le<uint16_t>(out, 1);
  append_le<uint32_t>(out, static_cast<uint32_t>(clip.sample_rate));
  append_le<uint32_t>(out, static_cast<uint32_t>(clip.sample_rate) * (bits / 8));
  append_le<uint16_t>(out, bits / 8);
  append_le<uint16_t>(out, bits);
  out += "data";
  append_le<uint32_t>(out, data_bytes);
  for (double s : clip.samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    if (encoding == WavEncoding::pcm16) {
      append_le<int16_t>(out, static_cast<int16_t>(std::lround(std::clamp(c * 32768.0, -32768.0, 32767.0))));
    } else {
      append_le<float>(out, static_cast<float>(c));
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip, WavEncoding encoding) {
  io::write_file_atomic(path, encode_wav(clip, encoding));
}

}  // namespace pangram
