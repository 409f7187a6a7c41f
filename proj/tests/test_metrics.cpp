// Metric semantics plus oracle equivalence: the interval-exact WCSR sweep is
// checked against 1 ms frame sampling, and the segmentation scores against a
// naive max-overlap scan.
#include <cmath>

#include "acr/metrics.hpp"
#include "acr/rng.hpp"
#include "doctest.h"

using namespace acr;

namespace {

Chord pc(int root, Quality q) { return Chord::pitched(root, q); }

Timeline random_timeline(std::mt19937_64& rng, double duration,
                         bool with_special = true) {
  std::vector<ChordSpan> spans;
  double t = 0;
  while (t < duration - kTimeEps) {
    double len = uniform_real(rng, 0.3, 4.0);
    double end = std::min(t + len, duration);
    int idx = static_cast<int>(
        uniform_int(rng, 0, with_special ? 169 : 167));
    spans.push_back({t, end, Chord::from_vocab_index(idx)});
    t = end;
  }
  return Timeline::from_spans(std::move(spans), duration);
}

// Frame-sampling oracle for WCSR (1 ms frames).
std::pair<double, double> wcsr_sampled(Criterion c, const Timeline& ref,
                                       const Timeline& est, double dt = 1e-3) {
  double matched = 0, support = 0;
  auto rf = sample_frames(ref, dt);
  auto ef = sample_frames(est, dt);
  size_t n = std::min(rf.size(), ef.size());
  for (size_t i = 0; i < n; ++i) {
    switch (chord_match(c, rf[i], ef[i])) {
      case MatchResult::kMatch:
        matched += dt;
        support += dt;
        break;
      case MatchResult::kNoMatch:
        support += dt;
        break;
      case MatchResult::kExcluded:
        break;
    }
  }
  return {matched, support};
}

// Naive directional Hamming oracle: per segment of a, scan every segment of
// b for the best overlap.
double dhd_naive(const Timeline& a, const Timeline& b) {
  double total = 0;
  for (const auto& sa : a.spans()) {
    double best = 0;
    for (const auto& sb : b.spans()) {
      double lo = std::max(sa.onset, sb.onset);
      double hi = std::min(sa.offset, sb.offset);
      best = std::max(best, hi - lo);
    }
    total += sa.length() - best;
  }
  return total;
}

SegScores seg_scores_naive(const Timeline& ref, const Timeline& est) {
  SegScores s;
  s.over = 1.0 - dhd_naive(ref, est) / ref.duration();
  s.under = 1.0 - dhd_naive(est, ref) / ref.duration();
  s.mean = 0.5 * (s.over + s.under);
  return s;
}

}  // namespace

TEST_CASE("mirex matches on three shared pitch classes") {
  // C:maj {0,4,7} vs C:maj7 {0,4,7,11}: intersection size 3.
  CHECK(chord_match(Criterion::kMirex, pc(0, Quality::kMaj),
                    pc(0, Quality::kMaj7)) == MatchResult::kMatch);
  // C:maj {0,4,7} vs A:min {9,0,4}: intersection {0,4}, size 2.
  CHECK(chord_match(Criterion::kMirex, pc(0, Quality::kMaj),
                    pc(9, Quality::kMin)) == MatchResult::kNoMatch);
  // Symmetry over pitched chords.
  auto rng = seeded_rng(31);
  for (int i = 0; i < 200; ++i) {
    Chord a = Chord::from_vocab_index(static_cast<int>(uniform_int(rng, 0, 167)));
    Chord b = Chord::from_vocab_index(static_cast<int>(uniform_int(rng, 0, 167)));
    CHECK(chord_match(Criterion::kMirex, a, b) ==
          chord_match(Criterion::kMirex, b, a));
  }
}

TEST_CASE("criterion support and matching rules") {
  SUBCASE("root matches any quality with the same root") {
    CHECK(chord_match(Criterion::kRoot, pc(0, Quality::kMaj),
                      pc(0, Quality::kMin)) == MatchResult::kMatch);
    CHECK(chord_match(Criterion::kRoot, pc(0, Quality::kMaj),
                      pc(1, Quality::kMaj)) == MatchResult::kNoMatch);
  }
  SUBCASE("sevenths support excludes dim and friends") {
    CHECK(chord_match(Criterion::kSevenths, pc(0, Quality::kDim),
                      pc(0, Quality::kDim)) == MatchResult::kExcluded);
    CHECK(chord_match(Criterion::kSevenths, pc(0, Quality::kMin7),
                      pc(0, Quality::kMin7)) == MatchResult::kMatch);
    CHECK(chord_match(Criterion::kSevenths, pc(0, Quality::kMaj),
                      pc(0, Quality::kMaj7)) == MatchResult::kNoMatch);
  }
  SUBCASE("maj-min support") {
    CHECK(chord_match(Criterion::kMajMin, pc(4, Quality::kSus2),
                      pc(4, Quality::kSus2)) == MatchResult::kExcluded);
    CHECK(chord_match(Criterion::kMajMin, pc(4, Quality::kMin),
                      pc(4, Quality::kMin)) == MatchResult::kMatch);
    CHECK(chord_match(Criterion::kMajMin, pc(4, Quality::kMin),
                      pc(4, Quality::kMaj)) == MatchResult::kNoMatch);
  }
  SUBCASE("thirds compares the third interval only") {
    CHECK(chord_match(Criterion::kThirds, pc(2, Quality::kMaj),
                      pc(2, Quality::kDom7)) == MatchResult::kMatch);
    CHECK(chord_match(Criterion::kThirds, pc(2, Quality::kMin),
                      pc(2, Quality::kDim7)) == MatchResult::kMatch);
    CHECK(chord_match(Criterion::kThirds, pc(2, Quality::kSus2),
                      pc(2, Quality::kSus4)) == MatchResult::kMatch);
    CHECK(chord_match(Criterion::kThirds, pc(2, Quality::kMaj),
                      pc(2, Quality::kMin)) == MatchResult::kNoMatch);
    CHECK(chord_match(Criterion::kThirds, pc(2, Quality::kMaj),
                      pc(2, Quality::kSus4)) == MatchResult::kNoMatch);
  }
  SUBCASE("triads reduces templates below the octave's upper reaches") {
    CHECK(chord_match(Criterion::kTriads, pc(0, Quality::kMaj),
                      pc(0, Quality::kMaj7)) == MatchResult::kMatch);
    CHECK(chord_match(Criterion::kTriads, pc(0, Quality::kMin),
                      pc(0, Quality::kMin6)) == MatchResult::kMatch);
    CHECK(chord_match(Criterion::kTriads, pc(0, Quality::kMaj),
                      pc(0, Quality::kMin7)) == MatchResult::kNoMatch);
    CHECK(chord_match(Criterion::kTriads, pc(0, Quality::kDim),
                      pc(0, Quality::kDim7)) == MatchResult::kMatch);
  }
  SUBCASE("tetrads requires the full template") {
    CHECK(chord_match(Criterion::kTetrads, pc(0, Quality::kMaj),
                      pc(0, Quality::kMaj)) == MatchResult::kMatch);
    CHECK(chord_match(Criterion::kTetrads, pc(0, Quality::kMaj),
                      pc(0, Quality::kMaj6)) == MatchResult::kNoMatch);
  }
  SUBCASE("no-chord matches only no-chord; unknown is excluded or never matches") {
    for (auto c : kAllCriteria) {
      CHECK(chord_match(c, Chord::no_chord(), Chord::no_chord()) ==
            MatchResult::kMatch);
      CHECK(chord_match(c, Chord::no_chord(), pc(0, Quality::kMaj)) ==
            MatchResult::kNoMatch);
      CHECK(chord_match(c, Chord::unknown(), Chord::unknown()) ==
            MatchResult::kExcluded);
      CHECK(chord_match(c, pc(0, Quality::kMaj), Chord::unknown()) ==
            MatchResult::kNoMatch);
    }
  }
  SUBCASE("reflexivity for in-support chords") {
    for (auto c : kAllCriteria) {
      for (int i = 0; i < 168; ++i) {
        Chord x = Chord::from_vocab_index(i);
        auto r = chord_match(c, x, x);
        CHECK((r == MatchResult::kMatch || r == MatchResult::kExcluded));
      }
    }
  }
  SUBCASE("tetrads match implies triads, thirds and root match") {
    for (int i = 0; i < 168; ++i) {
      for (int j = 0; j < 168; ++j) {
        if (chord_match(Criterion::kTetrads, Chord::from_vocab_index(i),
                        Chord::from_vocab_index(j)) == MatchResult::kMatch) {
          for (auto c : {Criterion::kTriads, Criterion::kThirds,
                         Criterion::kRoot}) {
            CHECK(chord_match(c, Chord::from_vocab_index(i),
                              Chord::from_vocab_index(j)) ==
                  MatchResult::kMatch);
          }
        }
      }
    }
  }
}

TEST_CASE("wcsr over intervals") {
  SUBCASE("identical timelines score 1 under every criterion") {
    auto rng = seeded_rng(32);
    Timeline t = random_timeline(rng, 30.0, /*with_special=*/false);
    for (auto c : kAllCriteria) {
      WcsrResult r = wcsr(c, t, t);
      if (r.defined()) CHECK(r.score() == doctest::Approx(1.0));
    }
  }
  SUBCASE("partial overlap") {
    Timeline ref = Timeline::from_spans({{0, 10, pc(0, Quality::kMaj)}});
    Timeline est = Timeline::from_spans(
        {{0, 6, pc(0, Quality::kMaj)}, {6, 10, pc(7, Quality::kMaj)}});
    WcsrResult r = wcsr(Criterion::kRoot, ref, est);
    CHECK(r.score() == doctest::Approx(0.6));
    CHECK(r.support == doctest::Approx(10.0));
  }
  SUBCASE("duration mismatch is an error") {
    Timeline a = Timeline::from_spans({{0, 10, pc(0, Quality::kMaj)}});
    Timeline b = Timeline::from_spans({{0, 9, pc(0, Quality::kMaj)}});
    CHECK_THROWS_AS(wcsr(Criterion::kRoot, a, b), std::invalid_argument);
  }
  SUBCASE("all-unknown reference has empty support") {
    Timeline ref = Timeline::from_spans({{0, 10, Chord::unknown()}});
    Timeline est = Timeline::from_spans({{0, 10, pc(0, Quality::kMaj)}});
    CHECK_FALSE(wcsr(Criterion::kRoot, ref, est).defined());
  }
}

TEST_CASE("wcsr transposition invariance") {
  auto rng = seeded_rng(33);
  for (int i = 0; i < 20; ++i) {
    Timeline ref = random_timeline(rng, 20.0);
    Timeline est = random_timeline(rng, 20.0);
    int k = static_cast<int>(uniform_int(rng, 1, 11));
    for (auto c : kAllCriteria) {
      WcsrResult a = wcsr(c, ref, est);
      WcsrResult b = wcsr(c, ref.transposed(k), est.transposed(k));
      CHECK(a.matched == doctest::Approx(b.matched).epsilon(1e-9));
      CHECK(a.support == doctest::Approx(b.support).epsilon(1e-9));
    }
  }
}

TEST_CASE("wcsr equals the 1 ms frame-sampling oracle") {
  auto rng = seeded_rng(34);
  for (int i = 0; i < 40; ++i) {
    double dur = uniform_real(rng, 5.0, 30.0);
    Timeline ref = random_timeline(rng, dur);
    Timeline est = random_timeline(rng, dur);
    for (auto c : kAllCriteria) {
      WcsrResult exact = wcsr(c, ref, est);
      auto [m, s] = wcsr_sampled(c, ref, est);
      if (s <= 0) {
        continue;
      }
      CHECK(std::abs(exact.score() - m / s) < 1e-3);
    }
  }
}

TEST_CASE("wcsr_corpus weights by duration") {
  Timeline ref1 = Timeline::from_spans({{0, 10, pc(0, Quality::kMaj)}});
  Timeline est1 = ref1;
  Timeline ref2 = Timeline::from_spans({{0, 30, pc(1, Quality::kMaj)}});
  Timeline est2 = Timeline::from_spans({{0, 30, pc(2, Quality::kMaj)}});
  std::vector<std::pair<Timeline, Timeline>> songs{{ref1, est1}, {ref2, est2}};
  CHECK(wcsr_corpus(Criterion::kRoot, songs) == doctest::Approx(0.25));
  std::vector<std::pair<Timeline, Timeline>> flipped{{ref2, est2}, {ref1, est1}};
  CHECK(wcsr_corpus(Criterion::kRoot, flipped) == doctest::Approx(0.25));
  std::vector<std::pair<Timeline, Timeline>> one{{ref1, est1}};
  CHECK(wcsr_corpus(Criterion::kRoot, one) ==
        doctest::Approx(wcsr(Criterion::kRoot, ref1, est1).score()));
}

TEST_CASE("segmentation scores") {
  Chord a = pc(0, Quality::kMaj), b = pc(5, Quality::kMin);
  SUBCASE("identical boundaries are perfect") {
    Timeline t = Timeline::from_spans({{0, 5, a}, {5, 10, b}});
    SegScores s = seg_scores(t, t);
    CHECK(s.under == doctest::Approx(1.0));
    CHECK(s.over == doctest::Approx(1.0));
    CHECK(s.mean == doctest::Approx(1.0));
  }
  SUBCASE("merged estimate: over stays 1, under drops") {
    Timeline ref = Timeline::from_spans({{0, 5, a}, {5, 10, b}});
    Timeline est = Timeline::from_spans({{0, 10, a}});
    SegScores s = seg_scores(ref, est);
    CHECK(s.over == doctest::Approx(1.0));
    CHECK(s.under == doctest::Approx(0.5));
    CHECK(s.mean == doctest::Approx(0.75));
  }
  SUBCASE("fragmented estimate: over drops, under stays 1") {
    Timeline ref = Timeline::from_spans({{0, 10, a}});
    Timeline est = Timeline::from_spans({{0, 5, a}, {5, 10, b}});
    SegScores s = seg_scores(ref, est);
    CHECK(s.over == doctest::Approx(0.5));
    CHECK(s.under == doctest::Approx(1.0));
  }
  SUBCASE("labels are ignored") {
    auto rng = seeded_rng(35);
    Timeline ref = random_timeline(rng, 25.0);
    Timeline est = random_timeline(rng, 25.0);
    SegScores s1 = seg_scores(ref, est);
    SegScores s2 = seg_scores(ref.transposed(4), est.transposed(9));
    CHECK(s1.under == doctest::Approx(s2.under).epsilon(1e-12));
    CHECK(s1.over == doctest::Approx(s2.over).epsilon(1e-12));
  }
}

TEST_CASE("seg_scores equals the naive max-overlap oracle") {
  auto rng = seeded_rng(36);
  for (int i = 0; i < 60; ++i) {
    double dur = uniform_real(rng, 3.0, 40.0);
    Timeline ref = random_timeline(rng, dur);
    Timeline est = random_timeline(rng, dur);
    SegScores fast = seg_scores(ref, est);
    SegScores slow = seg_scores_naive(ref, est);
    CHECK(fast.under == doctest::Approx(slow.under).epsilon(1e-12));
    CHECK(fast.over == doctest::Approx(slow.over).epsilon(1e-12));
    CHECK(fast.mean == doctest::Approx(slow.mean).epsilon(1e-12));
  }
}

TEST_CASE("quality confusion matrix") {
  SUBCASE("perfect predictions give identity rows") {
    auto rng = seeded_rng(37);
    Timeline t = random_timeline(rng, 40.0);
    std::vector<std::pair<Timeline, Timeline>> songs{{t, t}};
    QualityConfusion qc = quality_confusion(songs);
    for (int r = 0; r < 16; ++r) {
      if (!qc.populated(r)) continue;
      CHECK(qc.ratio[r][r] == doctest::Approx(1.0));
    }
  }
  SUBCASE("maj6 predicted as maj lands in the maj column") {
    Timeline ref = Timeline::from_spans({{0, 10, pc(0, Quality::kMaj6)}});
    Timeline est = Timeline::from_spans({{0, 10, pc(0, Quality::kMaj)}});
    std::vector<std::pair<Timeline, Timeline>> songs{{ref, est}};
    QualityConfusion qc = quality_confusion(songs);
    int maj6 = static_cast<int>(Quality::kMaj6);
    CHECK(qc.ratio[maj6][static_cast<int>(Quality::kMaj)] ==
          doctest::Approx(1.0));
  }
  SUBCASE("rows are normalized and root-mismatched time is excluded") {
    Timeline ref = Timeline::from_spans(
        {{0, 6, pc(0, Quality::kMaj)}, {6, 10, pc(0, Quality::kMin)}});
    Timeline est = Timeline::from_spans(
        {{0, 3, pc(0, Quality::kMaj7)}, {3, 6, pc(5, Quality::kMaj)},
         {6, 10, pc(0, Quality::kMin)}});
    std::vector<std::pair<Timeline, Timeline>> songs{{ref, est}};
    QualityConfusion qc = quality_confusion(songs);
    int maj = static_cast<int>(Quality::kMaj);
    // Only [0,3) counts for the maj row (the [3,6) piece has a different root).
    CHECK(qc.row_seconds[maj] == doctest::Approx(3.0));
    CHECK(qc.ratio[maj][static_cast<int>(Quality::kMaj7)] ==
          doctest::Approx(1.0));
    double sum = 0;
    for (int c = 0; c < 16; ++c) sum += qc.ratio[maj][c];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}
