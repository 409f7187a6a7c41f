#include "acr/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "acr/rng.hpp"

namespace acr {

namespace {

Chord draw_chord(const SynthSpec& spec, std::mt19937_64& rng) {
  double total = std::accumulate(spec.quality_weights.begin(),
                                 spec.quality_weights.end(), 0.0);
  if (total <= 0) throw std::invalid_argument("quality weights must not all be zero");
  if (uniform_unit(rng) < spec.no_chord_rate) return Chord::no_chord();
  int root = static_cast<int>(uniform_int(rng, 0, 11));
  double pick = uniform_unit(rng) * total;
  double acc = 0;
  for (int q = 0; q < kNumQualities; ++q) {
    acc += spec.quality_weights[static_cast<size_t>(q)];
    if (pick < acc) return Chord::pitched(root, static_cast<Quality>(q));
  }
  return Chord::pitched(root, Quality::kSus4);
}

double midi_to_hz(int midi) {
  return 440.0 * std::pow(2.0, (midi - 69) / 12.0);
}

}  // namespace

Timeline generate_progression(const SynthSpec& spec, std::mt19937_64& rng) {
  if (spec.max_chord_seconds < spec.min_chord_seconds ||
      spec.min_chord_seconds <= 0) {
    throw std::invalid_argument("chord duration range must be positive");
  }
  long min_steps = std::max(1L, grid_index(spec.min_chord_seconds));
  long max_steps = std::max(min_steps, grid_index(spec.max_chord_seconds));

  std::vector<ChordSpan> spans;
  double cursor = 0;
  Chord previous = Chord::unknown();  // synth never draws unknown
  while (cursor < spec.song_duration - kTimeEps) {
    double dur = static_cast<double>(uniform_int(rng, min_steps, max_steps)) *
                 kGridSeconds;
    Chord c = draw_chord(spec, rng);
    for (int attempt = 0; c == previous && attempt < 100; ++attempt) {
      c = draw_chord(spec, rng);
    }
    if (c == previous && c.is_pitched()) {
      c = c.transposed(1);  // degenerate weight tables still progress
    }
    double offset = std::min(cursor + dur, spec.song_duration);
    spans.push_back({cursor, offset, c});
    previous = c;
    cursor = offset;
  }
  return Timeline::from_spans(std::move(spans), spec.song_duration);
}

Waveform render_audio(const Timeline& t, const SynthSpec& spec,
                      std::mt19937_64& rng) {
  Waveform w;
  w.sample_rate = kSampleRate;
  auto n = static_cast<size_t>(std::llround(t.duration() * kSampleRate));
  w.samples.assign(n, 0.0);

  const double nyquist = kSampleRate / 2.0;
  const size_t ramp = static_cast<size_t>(0.010 * kSampleRate);  // 10 ms

  for (const auto& span : t.spans()) {
    if (!span.chord.is_pitched()) continue;
    auto begin = static_cast<size_t>(std::llround(span.onset * kSampleRate));
    auto end = std::min(n, static_cast<size_t>(
                               std::llround(span.offset * kSampleRate)));
    if (end <= begin) continue;
    size_t len = end - begin;

    // Voicing: the root in octave 3, every chord tone in octave 4, and the
    // top template tone doubled in octave 5.
    std::vector<int> midis;
    int root = span.chord.root();
    const auto& tpl = quality_template(span.chord.quality());
    midis.push_back(48 + root);
    for (int i = 0; i < tpl.size; ++i) {
      midis.push_back(60 + (root + tpl.offsets[static_cast<size_t>(i)]) % 12);
    }
    midis.push_back(72 + (root + tpl.offsets[static_cast<size_t>(tpl.size - 1)]) % 12);

    double psum = std::accumulate(spec.partials.begin(), spec.partials.end(), 0.0);
    double amp = 0.8 / (static_cast<double>(midis.size()) * std::max(psum, 1e-9));

    for (int midi : midis) {
      double f0 = midi_to_hz(midi);
      for (size_t p = 0; p < spec.partials.size(); ++p) {
        double freq = f0 * static_cast<double>(p + 1);
        double phase0 = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
        if (freq >= nyquist) continue;
        double a = amp * spec.partials[p];
        // Phasor recurrence instead of per-sample sin().
        double step = 2.0 * std::numbers::pi * freq / kSampleRate;
        double rot_re = std::cos(step), rot_im = std::sin(step);
        double z_re = std::cos(phase0), z_im = std::sin(phase0);
        for (size_t i = 0; i < len; ++i) {
          w.samples[begin + i] += a * z_im;
          double nr = z_re * rot_re - z_im * rot_im;
          z_im = z_re * rot_im + z_im * rot_re;
          z_re = nr;
        }
      }
    }

    // Cosine attack/release inside the span.
    size_t r = std::min(ramp, len / 2);
    for (size_t i = 0; i < r; ++i) {
      double g = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) /
                                      static_cast<double>(r));
      w.samples[begin + i] *= g;
      w.samples[end - 1 - i] *= g;
    }
  }

  if (spec.noise_level > 0) {
    for (auto& s : w.samples) s += spec.noise_level * gaussian(rng);
  }
  return w;
}

std::vector<ManifestEntry> write_corpus(const SynthSpec& spec,
                                        const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "wav");
  fs::create_directories(out_dir / "lab");

  std::vector<ManifestEntry> entries(static_cast<size_t>(spec.n_songs));

  // Per-song rng streams keep generation order-independent, so songs can be
  // rendered in parallel without changing a single sample.
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < spec.n_songs; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "song_%03d", i);

    auto label_rng = seeded_rng(spec.seed, static_cast<uint64_t>(i) * 2);
    auto audio_rng = seeded_rng(spec.seed, static_cast<uint64_t>(i) * 2 + 1);
    Timeline labels = generate_progression(spec, label_rng);
    Waveform audio = render_audio(labels, spec, audio_rng);

    ManifestEntry e;
    e.id = name;
    e.audio_path = (out_dir / "wav" / (std::string(name) + ".wav")).string();
    e.lab_path = (out_dir / "lab" / (std::string(name) + ".lab")).string();
    e.fold = i % std::max(1, spec.folds);
    e.duration = labels.duration();
    write_wav16(e.audio_path, audio);
    write_lab_file(e.lab_path, labels);
    entries[static_cast<size_t>(i)] = std::move(e);
  }

  write_manifest((out_dir / "manifest.jsonl").string(), entries);
  return entries;
}

double template_baseline_root_accuracy(
    std::span<const std::pair<Timeline, Spectrogram>> songs) {
  long correct = 0, total = 0;
  for (const auto& [labels, spec] : songs) {
    for (const auto& span : labels.spans()) {
      if (!span.chord.is_pitched()) continue;
      int f0 = static_cast<int>(grid_index(span.onset));
      int f1 = std::min<int>(spec.frames,
                             static_cast<int>(grid_index(span.offset)));
      if (f1 <= f0) continue;

      // Mean chroma over the span: invert the log compression back to
      // linear magnitude (so tones dominate the noise floor), then fold the
      // 24-bins-per-octave axis down to 12 pitch classes. The bass register
      // (lowest three octaves) is folded separately: pitch-class sets alone
      // cannot name the root of inversion-equivalent chords (dim7 is
      // root-symmetric, sus2/sus4 and maj6/min7 are rotations of each
      // other), so the root score carries a bass term.
      std::array<double, 12> chroma{}, bass{};
      for (int f = f0; f < f1; ++f) {
        const double* row = spec.row(f);
        for (int b = 0; b < spec.bins; ++b) {
          double mag = std::expm1(row[b]);
          chroma[static_cast<size_t>((b / 2) % 12)] += mag;
          if (b < 3 * kBinsPerOctave) {
            bass[static_cast<size_t>((b / 2) % 12)] += mag;
          }
        }
      }

      double best = -1;
      int best_root = -1;
      for (int root = 0; root < 12; ++root) {
        for (int q = 0; q < kNumQualities; ++q) {
          const auto& tpl = quality_template(static_cast<Quality>(q));
          double score = 0;
          for (int i = 0; i < tpl.size; ++i) {
            score += chroma[static_cast<size_t>(
                (root + tpl.offsets[static_cast<size_t>(i)]) % 12)];
          }
          score = score / tpl.size + bass[static_cast<size_t>(root)];
          if (score > best) {
            best = score;
            best_root = root;
          }
        }
      }
      total += 1;
      if (best_root == span.chord.root()) correct += 1;
    }
  }
  return total > 0 ? static_cast<double>(correct) / static_cast<double>(total)
                   : 0.0;
}

}  // namespace acr
