#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pangram {

inline constexpr int kSampleRate = 16000;

struct AudioClip {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = kSampleRate;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

enum class WavEncoding { pcm16, float32 };

// RIFF/WAVE, mono, 16 kHz, PCM 16-bit or IEEE float 32-bit. Other formats
// and rates raise DataError; nothing is resampled.
AudioClip parse_wav(std::string_view bytes);
AudioClip read_wav(const std::filesystem::path& path);

std::string encode_wav(const AudioClip& clip, WavEncoding encoding = WavEncoding::pcm16);
void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding = WavEncoding::pcm16);

}  // namespace pangram
