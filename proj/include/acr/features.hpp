// Constant-Q transform frontend producing the model's log-amplitude
// spectrograms, plus the feature-side pitch-shift augmentation.
#pragma once

#include <string>
#include <vector>

#include "acr/wav.hpp"

namespace acr {

inline constexpr int kSampleRate = 44100;
inline constexpr int kHopSamples = 4410;  // 0.1 s
inline constexpr int kBinsPerOctave = 24;
inline constexpr int kNumBins = 144;  // 6 octaves from C1
inline constexpr int kFramesPerSegment = 256;
inline constexpr double kFreqC1 = 32.7032;

// Time x frequency matrix, row-major [frame][bin].
struct Spectrogram {
  int frames = 0;
  int bins = kNumBins;
  std::vector<double> values;

  double& at(int f, int b) { return values[static_cast<size_t>(f) * bins + b]; }
  double at(int f, int b) const {
    return values[static_cast<size_t>(f) * bins + b];
  }
  const double* row(int f) const {
    return values.data() + static_cast<size_t>(f) * bins;
  }
  double* row(int f) { return values.data() + static_cast<size_t>(f) * bins; }

  friend bool operator==(const Spectrogram&, const Spectrogram&) = default;
};

struct CqtParams {
  int sample_rate = kSampleRate;
  int hop = kHopSamples;
  int bins = kNumBins;
  int bins_per_octave = kBinsPerOctave;
  double f_min = kFreqC1;
  double log_gain = 1000.0;

  friend bool operator==(const CqtParams&, const CqtParams&) = default;
};

// Per-bin windowed complex filters with Q = 1 / (2^(1/B) - 1), evaluated at
// frame centers (i + 0.5) * hop with reflection padding at the signal edges.
// The input is max-amplitude normalized per call, magnitudes are compressed
// as log(1 + gain * |X|). Kernels are built once and reused across calls.
class CqtTransform {
 public:
  explicit CqtTransform(const CqtParams& params = {});

  const CqtParams& params() const { return params_; }

  // Frames = round(samples / hop); a 25.6 s segment yields exactly 256 x 144.
  // Throws if the waveform sample rate differs from the configured one.
  Spectrogram transform(const Waveform& w) const;         // OpenMP over frames
  Spectrogram transform_serial(const Waveform& w) const;  // reference

  static double bin_frequency(int bin, const CqtParams& params = {});

 private:
  Spectrogram run(const Waveform& w, bool parallel) const;

  struct Kernel {
    std::vector<double> re, im;
    int half = 0;  // kernel extends [-half, half] around the frame center
  };

  CqtParams params_;
  std::vector<Kernel> kernels_;
  int max_half_ = 0;
};

// Convenience wrapper over a shared default-parameter transform.
Spectrogram cqt(const Waveform& w);

// Shifts content along the frequency axis by 2 bins per semitone
// (bins_per_octave = 24); vacated bins are zero-filled. Requires |k| <= 5.
Spectrogram pitch_shifted(const Spectrogram& s, int semitones);

}  // namespace acr
