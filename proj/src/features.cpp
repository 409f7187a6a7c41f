#include "acr/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace acr {

namespace {

// Symmetric reflection (no edge repeat) for indices outside [0, n).
inline size_t reflect(long i, long n) {
  if (n == 1) return 0;
  long period = 2 * (n - 1);
  i = std::abs(i) % period;
  if (i >= n) i = period - i;
  return static_cast<size_t>(i);
}

}  // namespace

double CqtTransform::bin_frequency(int bin, const CqtParams& params) {
  return params.f_min *
         std::pow(2.0, static_cast<double>(bin) / params.bins_per_octave);
}

CqtTransform::CqtTransform(const CqtParams& params) : params_(params) {
  const double q =
      1.0 / (std::pow(2.0, 1.0 / params.bins_per_octave) - 1.0);
  kernels_.resize(static_cast<size_t>(params.bins));
  for (int b = 0; b < params.bins; ++b) {
    double freq = bin_frequency(b, params);
    int length = static_cast<int>(std::ceil(q * params.sample_rate / freq));
    length |= 1;  // odd, so the kernel centers on a sample
    int half = length / 2;

    Kernel& k = kernels_[static_cast<size_t>(b)];
    k.half = half;
    k.re.resize(static_cast<size_t>(length));
    k.im.resize(static_cast<size_t>(length));

    double wsum = 0;
    for (int n = 0; n < length; ++n) {
      double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / (length - 1));
      double phase = 2.0 * std::numbers::pi * freq * (n - half) /
                     params.sample_rate;
      k.re[static_cast<size_t>(n)] = w * std::cos(phase);
      k.im[static_cast<size_t>(n)] = -w * std::sin(phase);
      wsum += w;
    }
    double inv = wsum > 0 ? 1.0 / wsum : 1.0;
    for (int n = 0; n < length; ++n) {
      k.re[static_cast<size_t>(n)] *= inv;
      k.im[static_cast<size_t>(n)] *= inv;
    }
    max_half_ = std::max(max_half_, half);
  }
}

Spectrogram CqtTransform::run(const Waveform& w, bool parallel) const {
  if (w.sample_rate != params_.sample_rate) {
    throw std::invalid_argument("waveform sample rate mismatch (expected " +
                                std::to_string(params_.sample_rate) + ")");
  }
  const long n = static_cast<long>(w.samples.size());
  const int frames = static_cast<int>(
      std::llround(static_cast<double>(n) / params_.hop));

  Spectrogram out;
  out.frames = frames;
  out.bins = params_.bins;
  out.values.assign(static_cast<size_t>(frames) * params_.bins, 0.0);
  if (frames == 0 || n == 0) return out;

  double peak = 0;
  for (double s : w.samples) peak = std::max(peak, std::abs(s));
  const double norm = peak > 0 ? 1.0 / peak : 1.0;

  // Padded copy so the inner loops never branch on the signal edges. The
  // extra hop of slack covers the last frame center when the signal length
  // is not an exact hop multiple.
  const long pad = max_half_;
  const long padded = n + 2 * pad + params_.hop;
  std::vector<double> x(static_cast<size_t>(padded));
  for (long i = 0; i < padded; ++i) {
    x[static_cast<size_t>(i)] = w.samples[reflect(i - pad, n)] * norm;
  }

  const double gain = params_.log_gain;
  auto frame_job = [&](int f) {
    const long center = static_cast<long>(f) * params_.hop + params_.hop / 2;
    double* row = out.row(f);
    for (int b = 0; b < params_.bins; ++b) {
      const Kernel& k = kernels_[static_cast<size_t>(b)];
      const double* sig = x.data() + (center - k.half + pad);
      const size_t len = k.re.size();
      double acc_re = 0, acc_im = 0;
      for (size_t i = 0; i < len; ++i) {
        acc_re += sig[i] * k.re[i];
        acc_im += sig[i] * k.im[i];
      }
      row[b] = std::log1p(gain * std::sqrt(acc_re * acc_re + acc_im * acc_im));
    }
  };

  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int f = 0; f < frames; ++f) frame_job(f);
  } else {
    for (int f = 0; f < frames; ++f) frame_job(f);
  }
  return out;
}

Spectrogram CqtTransform::transform(const Waveform& w) const {
  return run(w, true);
}

Spectrogram CqtTransform::transform_serial(const Waveform& w) const {
  return run(w, false);
}

Spectrogram cqt(const Waveform& w) {
  static const CqtTransform shared{};
  return shared.transform(w);
}

Spectrogram pitch_shifted(const Spectrogram& s, int semitones) {
  if (semitones < -5 || semitones > 5) {
    throw std::invalid_argument("pitch shift limited to +-5 semitones");
  }
  const int shift = 2 * semitones;  // 24 bins/octave -> 2 bins/semitone
  Spectrogram out;
  out.frames = s.frames;
  out.bins = s.bins;
  out.values.assign(s.values.size(), 0.0);
  for (int f = 0; f < s.frames; ++f) {
    const double* src = s.row(f);
    double* dst = out.row(f);
    for (int b = 0; b < s.bins; ++b) {
      int from = b - shift;
      if (from >= 0 && from < s.bins) dst[b] = src[from];
    }
  }
  return out;
}

}  // namespace acr
