// Deterministic synthetic chord-audio corpus: random progressions rendered
// as additive sinusoid chords, a stand-in for licensed song datasets so the
// full pipeline trains and evaluates reproducibly.
#pragma once

#include <array>
#include <filesystem>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "acr/features.hpp"
#include "acr/io.hpp"
#include "acr/timeline.hpp"
#include "acr/wav.hpp"

namespace acr {

struct SynthSpec {
  uint64_t seed = 1;
  int n_songs = 20;
  double song_duration = 60.0;
  double min_chord_seconds = 1.2;
  double max_chord_seconds = 3.2;
  // Skewed on purpose: maj/min heavy, tetrads rare, mirroring the imbalance
  // of real chord corpora.
  std::array<double, kNumQualities> quality_weights = {
      0.30,   // maj
      0.22,   // min
      0.02,   // dim
      0.015,  // aug
      0.02,   // min6
      0.03,   // maj6
      0.06,   // min7
      0.01,   // minmaj7
      0.06,   // maj7
      0.09,   // 7
      0.015,  // dim7
      0.015,  // hdim7
      0.04,   // sus2
      0.055,  // sus4
  };
  double no_chord_rate = 0.06;
  std::vector<double> partials = {1.0, 0.35, 0.12};  // overtone amplitudes
  double noise_level = 0.02;
  int folds = 5;
};

// Random chords: uniform roots, qualities per the weight table, durations
// uniform in range and quantized to the 0.1 s grid; adjacent duplicates are
// re-rolled.
Timeline generate_progression(const SynthSpec& spec, std::mt19937_64& rng);

// Additive rendering: pitched chords become sinusoid stacks at the chord's
// pitch classes voiced across octaves 3-5 with the configured overtone
// series, 10 ms cosine ramps at boundaries, plus white noise; no-chord spans
// are noise only.
Waveform render_audio(const Timeline& t, const SynthSpec& spec,
                      std::mt19937_64& rng);

// WAV + .lab pairs and a manifest with fold assignments under out_dir.
std::vector<ManifestEntry> write_corpus(const SynthSpec& spec,
                                        const std::filesystem::path& out_dir);

// Corpus learnability gate: predicts each annotated span's root by the best
// pcs-template dot product on the mean CQT chroma over the span and reports
// the fraction of pitched spans whose root is recovered. Takes (labels,
// full-song spectrogram) pairs on the shared 0.1 s frame grid.
double template_baseline_root_accuracy(
    std::span<const std::pair<Timeline, Spectrogram>> songs);

}  // namespace acr
