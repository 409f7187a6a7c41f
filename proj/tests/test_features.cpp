// CQT calibration, shape contract, pitch-shift geometry, WAV round trip.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <utility>
#include <vector>

#include "acr/features.hpp"
#include "acr/io.hpp"
#include "acr/rng.hpp"
#include "acr/timeline.hpp"
#include "acr/wav.hpp"
#include "doctest.h"

using namespace acr;

namespace {

Waveform sine(double freq, double seconds, double amp = 0.5) {
  Waveform w;
  w.sample_rate = kSampleRate;
  auto n = static_cast<size_t>(std::llround(seconds * kSampleRate));
  w.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq *
                                  static_cast<double>(i) / kSampleRate);
  }
  return w;
}

int argmax_bin(const Spectrogram& s, int frame) {
  const double* row = s.row(frame);
  int best = 0;
  for (int b = 1; b < s.bins; ++b) {
    if (row[b] > row[best]) best = b;
  }
  return best;
}

const CqtTransform& shared_transform() {
  static const CqtTransform t{};
  return t;
}

}  // namespace

TEST_CASE("shape contract: 25.6 s in, 256 x 144 out") {
  Waveform w = sine(440.0, kSegmentSeconds);
  REQUIRE(w.samples.size() == 1128960);
  Spectrogram s = shared_transform().transform(w);
  CHECK(s.frames == 256);
  CHECK(s.bins == 144);
}

TEST_CASE("sample rate mismatch is rejected") {
  Waveform w = sine(440.0, 1.0);
  w.sample_rate = 22050;
  CHECK_THROWS_AS(shared_transform().transform(w), std::invalid_argument);
}

TEST_CASE("pure tones peak at their bins") {
  // C1 -> bin 0, C2 -> bin 24 (one octave = 24 bins).
  const std::vector<std::pair<double, int>> tones = {{32.7032, 0},
                                                     {65.4064, 24}};
  for (auto [freq, bin] : tones) {
    Waveform w = sine(freq, 4.0);
    Spectrogram s = shared_transform().transform(w);
    CHECK(argmax_bin(s, s.frames / 2) == bin);
  }
  // A few higher center frequencies, exact.
  for (int bin : {48, 70, 96, 143}) {
    Waveform w = sine(CqtTransform::bin_frequency(bin), 2.0);
    Spectrogram s = shared_transform().transform(w);
    CHECK(argmax_bin(s, s.frames / 2) == bin);
  }
}

TEST_CASE("silence maps to zero") {
  Waveform w;
  w.samples.assign(4 * kSampleRate, 0.0);
  Spectrogram s = shared_transform().transform(w);
  for (double v : s.values) CHECK(v == 0.0);
}

TEST_CASE("energy monotonicity in input amplitude") {
  // The per-call max normalization cancels a global gain, so compare a tone
  // against the same tone with the louder half attenuated.
  Waveform quiet = sine(220.0, 2.0, 0.2);
  Waveform loud = sine(220.0, 2.0, 0.9);
  Spectrogram sq = shared_transform().transform(quiet);
  Spectrogram sl = shared_transform().transform(loud);
  // Identical after normalization.
  for (size_t i = 0; i < sq.values.size(); ++i) {
    CHECK(sq.values[i] == doctest::Approx(sl.values[i]).epsilon(1e-9));
  }
}

TEST_CASE("serial and parallel CQT agree bit-exactly") {
  auto rng = seeded_rng(51);
  Waveform w;
  w.samples.resize(3 * kSampleRate);
  for (auto& v : w.samples) v = 0.3 * gaussian(rng);
  Spectrogram a = shared_transform().transform_serial(w);
  Spectrogram b = shared_transform().transform(w);
  CHECK(a == b);
}

TEST_CASE("pitch shift moves content two bins per semitone") {
  Spectrogram s;
  s.frames = 4;
  s.bins = kNumBins;
  s.values.assign(static_cast<size_t>(s.frames) * s.bins, 0.0);
  for (int f = 0; f < s.frames; ++f) s.at(f, 10) = 1.0;

  Spectrogram up = pitch_shifted(s, 1);
  CHECK(up.at(0, 12) == 1.0);
  CHECK(up.at(0, 10) == 0.0);

  CHECK(pitch_shifted(s, 0) == s);
  CHECK_THROWS_AS(pitch_shifted(s, 6), std::invalid_argument);

  // Round trip zeroes exactly the vacated edge bins.
  Spectrogram back = pitch_shifted(pitch_shifted(s, 3), -3);
  CHECK(back == s);  // spike at 10 survives (10 - 6 >= 0)
  Spectrogram low;
  low.frames = 1;
  low.bins = kNumBins;
  low.values.assign(static_cast<size_t>(kNumBins), 0.0);
  low.at(0, 5) = 1.0;
  Spectrogram clipped = pitch_shifted(pitch_shifted(low, -3), 3);
  CHECK(clipped.at(0, 5) == 0.0);  // 5 - 6 < 0 fell off the bottom
}

TEST_CASE("real pitch shift approximates the bin shift") {
  // A tone one semitone above bin 48 should land where the shifted
  // spectrogram of the original tone puts it.
  Waveform base = sine(CqtTransform::bin_frequency(48), 2.0);
  Waveform up = sine(CqtTransform::bin_frequency(50), 2.0);
  Spectrogram shifted = pitch_shifted(shared_transform().transform(base), 1);
  Spectrogram real = shared_transform().transform(up);
  CHECK(argmax_bin(shifted, shifted.frames / 2) ==
        argmax_bin(real, real.frames / 2));
}

TEST_CASE("wav 16-bit round trip and spectrogram container") {
  namespace fs = std::filesystem;
  auto rng = seeded_rng(52);
  fs::path dir = fs::temp_directory_path() / "acr_test_io";
  fs::create_directories(dir);

  Waveform w;
  w.samples.resize(kSampleRate / 2);
  for (auto& v : w.samples) v = 0.8 * std::clamp(gaussian(rng) * 0.3, -1.0, 1.0);
  auto wav_path = (dir / "t.wav").string();
  write_wav16(wav_path, w);
  Waveform r = read_wav(wav_path);
  REQUIRE(r.samples.size() == w.samples.size());
  CHECK(r.sample_rate == kSampleRate);
  for (size_t i = 0; i < w.samples.size(); ++i) {
    CHECK(std::abs(r.samples[i] - w.samples[i]) < 1.0 / 32000.0);
  }

  Spectrogram s = shared_transform().transform(sine(440.0, 1.0));
  auto spec_path = (dir / "t.spec").string();
  write_spectrogram(spec_path, s);
  Spectrogram back = read_spectrogram(spec_path);
  CHECK(back.frames == s.frames);
  CHECK(back.bins == s.bins);
  for (size_t i = 0; i < s.values.size(); ++i) {
    CHECK(back.values[i] == doctest::Approx(s.values[i]).epsilon(1e-6));
  }
  fs::remove_all(dir);
}
