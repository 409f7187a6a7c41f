// Minimal PCM WAV reader/writer: 16- or 24-bit integer PCM, mono or
// multi-channel (downmixed to mono by averaging on read).
#pragma once

#include <string>
#include <vector>

namespace acr {

struct Waveform {
  std::vector<double> samples;  // mono, in [-1, 1]
  int sample_rate = 44100;

  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

Waveform read_wav(const std::string& path);
void write_wav16(const std::string& path, const Waveform& w);

}  // namespace acr
