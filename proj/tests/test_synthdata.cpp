// Synthetic corpus: determinism, distribution control, spectral content.
#include <array>
#include <filesystem>

#include "acr/rng.hpp"
#include "acr/synthdata.hpp"
#include "doctest.h"

using namespace acr;

TEST_CASE("generation is deterministic under a fixed seed") {
  SynthSpec spec;
  spec.song_duration = 30.0;
  auto r1 = seeded_rng(5, 0);
  auto r2 = seeded_rng(5, 0);
  Timeline a = generate_progression(spec, r1);
  Timeline b = generate_progression(spec, r2);
  CHECK(a == b);

  auto a1 = seeded_rng(5, 1);
  auto a2 = seeded_rng(5, 1);
  Waveform wa = render_audio(a, spec, a1);
  Waveform wb = render_audio(b, spec, a2);
  CHECK(wa.samples == wb.samples);
}

TEST_CASE("progressions are grid-quantized with no adjacent duplicates") {
  SynthSpec spec;
  spec.song_duration = 120.0;
  auto rng = seeded_rng(6, 0);
  Timeline t = generate_progression(spec, rng);
  CHECK(t.duration() == doctest::Approx(120.0));
  CHECK(is_quantized(t));
  for (size_t i = 1; i < t.spans().size(); ++i) {
    CHECK(t.spans()[i].chord != t.spans()[i - 1].chord);
  }
}

TEST_CASE("degenerate weight tables still yield the requested quality") {
  SynthSpec spec;
  spec.quality_weights = {};
  spec.quality_weights[0] = 1.0;  // all mass on maj
  spec.no_chord_rate = 0.0;
  spec.song_duration = 40.0;
  auto rng = seeded_rng(7, 0);
  Timeline t = generate_progression(spec, rng);
  for (const auto& s : t.spans()) {
    REQUIRE(s.chord.is_pitched());
    CHECK(s.chord.quality() == Quality::kMaj);
  }
}

TEST_CASE("empirical quality frequencies track the weights") {
  SynthSpec spec;
  spec.min_chord_seconds = 0.2;
  spec.max_chord_seconds = 0.4;
  spec.song_duration = 3500.0;  // ~11k chords
  spec.no_chord_rate = 0.05;
  auto rng = seeded_rng(8, 0);
  Timeline t = generate_progression(spec, rng);

  std::array<double, kNumQualities> counts{};
  double pitched = 0;
  for (const auto& s : t.spans()) {
    if (!s.chord.is_pitched()) continue;
    counts[static_cast<size_t>(s.chord.quality())] += 1;
    pitched += 1;
  }
  REQUIRE(pitched > 10000);
  double wsum = 0;
  for (double w : spec.quality_weights) wsum += w;
  for (int q = 0; q < kNumQualities; ++q) {
    double expected = spec.quality_weights[static_cast<size_t>(q)] / wsum;
    CHECK(std::abs(counts[static_cast<size_t>(q)] / pitched - expected) < 0.02);
  }
}

TEST_CASE("rendered chords concentrate energy at their pitch classes") {
  SynthSpec spec;
  spec.song_duration = kSegmentSeconds;
  spec.noise_level = 0.01;
  Timeline t = Timeline::from_spans(
      {{0, kSegmentSeconds, Chord::pitched(0, Quality::kMaj)}},
      kSegmentSeconds);
  auto rng = seeded_rng(9, 1);
  Waveform w = render_audio(t, spec, rng);
  Spectrogram s = cqt(w);

  // Fold to linear-magnitude chroma over the middle frame.
  std::array<double, 12> chroma{};
  for (int b = 0; b < s.bins; ++b) {
    chroma[static_cast<size_t>((b / 2) % 12)] +=
        std::expm1(s.at(s.frames / 2, b));
  }
  // {0, 4, 7} should dominate every other pitch class.
  double in_min = std::min({chroma[0], chroma[4], chroma[7]});
  for (int p : {1, 2, 3, 5, 6, 8, 10, 11}) {
    CHECK(in_min > chroma[static_cast<size_t>(p)]);
  }
}

TEST_CASE("no-chord spans carry only noise") {
  SynthSpec spec;
  spec.noise_level = 0.02;
  Timeline t = Timeline::from_spans({{0, 4.0, Chord::no_chord()}}, 4.0);
  auto rng = seeded_rng(10, 1);
  Waveform w = render_audio(t, spec, rng);
  double peak = 0;
  for (double v : w.samples) peak = std::max(peak, std::abs(v));
  CHECK(peak < 10 * spec.noise_level);
}

TEST_CASE("corpus writer emits a complete, deterministic manifest") {
  namespace fs = std::filesystem;
  SynthSpec spec;
  spec.seed = 77;
  spec.n_songs = 6;
  spec.song_duration = 8.0;
  spec.folds = 3;
  fs::path dir = fs::temp_directory_path() / "acr_test_corpus";
  fs::remove_all(dir);

  auto entries = write_corpus(spec, dir);
  REQUIRE(entries.size() == 6);
  for (const auto& e : entries) {
    CHECK(fs::exists(e.audio_path));
    CHECK(fs::exists(e.lab_path));
  }
  // Fold partition: every song in exactly one fold, 0..folds-1 round robin.
  for (size_t i = 0; i < entries.size(); ++i) {
    CHECK(entries[i].fold == static_cast<int>(i) % 3);
  }

  auto manifest = read_manifest((dir / "manifest.jsonl").string());
  REQUIRE(manifest.size() == 6);
  CHECK(manifest[0].id == "song_000");
  CHECK(manifest[0].duration == doctest::Approx(8.0));

  // Re-running with the same seed reproduces the audio bytes.
  auto h1 = hash_file(entries[2].audio_path);
  fs::path dir2 = fs::temp_directory_path() / "acr_test_corpus2";
  fs::remove_all(dir2);
  auto entries2 = write_corpus(spec, dir2);
  CHECK(hash_file(entries2[2].audio_path) == h1);
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("template baseline recovers roots on clean renders") {
  SynthSpec spec;
  spec.seed = 3;
  spec.n_songs = 3;
  spec.song_duration = 20.0;
  CqtTransform transform;
  std::vector<std::pair<Timeline, Spectrogram>> songs;
  for (int i = 0; i < spec.n_songs; ++i) {
    auto lr = seeded_rng(spec.seed, static_cast<uint64_t>(i) * 2);
    auto ar = seeded_rng(spec.seed, static_cast<uint64_t>(i) * 2 + 1);
    Timeline labels = generate_progression(spec, lr);
    Waveform audio = render_audio(labels, spec, ar);
    songs.emplace_back(labels, transform.transform(audio));
  }
  CHECK(template_baseline_root_accuracy(songs) >= 0.95);
}
