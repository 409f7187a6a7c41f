// Timeline validation, .lab I/O, quantization, slicing, frame sampling.
#include <cmath>
#include <sstream>

#include "acr/rng.hpp"
#include "acr/timeline.hpp"
#include "doctest.h"

using namespace acr;

namespace {

Chord cmaj() { return Chord::pitched(0, Quality::kMaj); }
Chord g7() { return Chord::pitched(7, Quality::kDom7); }

Timeline random_timeline(std::mt19937_64& rng, double duration) {
  std::vector<ChordSpan> spans;
  double t = 0;
  while (t < duration - kTimeEps) {
    double len = uniform_real(rng, 0.2, 3.0);
    double end = std::min(t + len, duration);
    spans.push_back({t, end, Chord::from_vocab_index(
                                 static_cast<int>(uniform_int(rng, 0, 169)))});
    t = end;
  }
  return Timeline::from_spans(std::move(spans), duration);
}

}  // namespace

TEST_CASE("read_lab parses, validates and fills") {
  SUBCASE("plain two-interval file") {
    std::istringstream in("0.0 1.5 C:maj\n1.5 3.0 G:7\n");
    Timeline t = read_lab(in);
    REQUIRE(t.spans().size() == 2);
    CHECK(t.duration() == doctest::Approx(3.0));
    CHECK(t.spans()[0].chord == cmaj());
    CHECK(t.spans()[1].chord == g7());
  }
  SUBCASE("gap is filled with no-chord") {
    std::istringstream in("0.0 1.0 C:maj\n2.0 3.0 C:maj\n");
    Timeline t = read_lab(in);
    REQUIRE(t.spans().size() == 3);
    CHECK(t.spans()[1].chord == Chord::no_chord());
    CHECK(t.spans()[1].onset == doctest::Approx(1.0));
    CHECK(t.spans()[1].offset == doctest::Approx(2.0));
  }
  SUBCASE("adjacent equal chords merge") {
    std::istringstream in("0.0 1.0 C:maj\n1.0 2.0 C:maj\n");
    Timeline t = read_lab(in);
    REQUIRE(t.spans().size() == 1);
    CHECK(t.spans()[0].offset == doctest::Approx(2.0));
  }
  SUBCASE("tabs and leading silence") {
    std::istringstream in("0.5\t1.0\tD:min\n");
    Timeline t = read_lab(in);
    REQUIRE(t.spans().size() == 2);
    CHECK(t.spans()[0].chord == Chord::no_chord());
  }
  SUBCASE("unsorted intervals rejected") {
    std::istringstream in("1.0 2.0 C:maj\n0.0 0.5 G:7\n");
    CHECK_THROWS_AS(read_lab(in), LabParseError);
  }
  SUBCASE("overlap rejected") {
    std::istringstream in("0.0 2.0 C:maj\n1.0 3.0 G:7\n");
    CHECK_THROWS_AS(read_lab(in), LabParseError);
  }
  SUBCASE("bad label carries the line number") {
    std::istringstream in("0.0 1.0 C:maj\n1.0 2.0 Q:maj\n");
    try {
      read_lab(in);
      FAIL("expected LabParseError");
    } catch (const LabParseError& e) {
      CHECK(e.line() == 2);
    }
  }
}

TEST_CASE("lab round trip") {
  auto rng = seeded_rng(11);
  for (int i = 0; i < 20; ++i) {
    Timeline t = random_timeline(rng, 30.0);
    std::ostringstream out;
    write_lab(out, t);
    std::istringstream in(out.str());
    Timeline back = read_lab(in);
    REQUIRE(back.spans().size() == t.spans().size());
    for (size_t s = 0; s < t.spans().size(); ++s) {
      CHECK(back.spans()[s].chord == t.spans()[s].chord);
      CHECK(back.spans()[s].onset ==
            doctest::Approx(t.spans()[s].onset).epsilon(1e-6));
    }
  }
}

TEST_CASE("coverage invariant: spans tile the duration") {
  auto rng = seeded_rng(12);
  for (int i = 0; i < 50; ++i) {
    Timeline t = random_timeline(rng, uniform_real(rng, 1.0, 80.0));
    double sum = 0;
    double cursor = 0;
    for (const auto& s : t.spans()) {
      CHECK(s.onset == doctest::Approx(cursor).epsilon(1e-9));
      sum += s.length();
      cursor = s.offset;
    }
    CHECK(sum == doctest::Approx(t.duration()).epsilon(1e-9));
  }
}

TEST_CASE("quantize rounds onsets to the grid") {
  SUBCASE("nearest rounding") {
    Timeline t = Timeline::from_spans({{0, 1.23, cmaj()}, {1.23, 3.0, g7()}});
    Timeline q = quantized(t);
    REQUIRE(q.spans().size() == 2);
    CHECK(q.spans()[1].onset == doctest::Approx(1.2));
  }
  SUBCASE("ties round up") {
    Timeline t = Timeline::from_spans({{0, 1.25, cmaj()}, {1.25, 3.0, g7()}});
    Timeline q = quantized(t);
    CHECK(q.spans()[1].onset == doctest::Approx(1.3));
  }
  SUBCASE("idempotent and duration-preserving") {
    auto rng = seeded_rng(13);
    for (int i = 0; i < 30; ++i) {
      Timeline t = random_timeline(rng, 27.3);
      Timeline q1 = quantized(t);
      CHECK(quantized(q1) == q1);
      CHECK(q1.duration() == doctest::Approx(t.duration()));
      CHECK(is_quantized(q1));
    }
  }
  SUBCASE("collapsing spans are dropped") {
    Timeline t = Timeline::from_spans(
        {{0, 1.01, cmaj()}, {1.01, 1.04, g7()}, {1.04, 2.0, cmaj()}});
    Timeline q = quantized(t);
    // The 30 ms middle chord rounds onto [1.0, 1.0) and disappears; the two
    // C:maj neighbours then merge.
    REQUIRE(q.spans().size() == 1);
    CHECK(q.spans()[0].chord == cmaj());
  }
}

TEST_CASE("slice_segment") {
  std::vector<ChordSpan> spans;
  for (int i = 0; i < 12; ++i) {
    spans.push_back({i * 5.0, (i + 1) * 5.0,
                     Chord::pitched(i % 12, Quality::kMaj)});
  }
  Timeline song = Timeline::from_spans(spans, 60.0);

  SUBCASE("head slice covers the segment length") {
    Segment seg = slice_segment(song, 0);
    CHECK(seg.timeline.duration() == doctest::Approx(kSegmentSeconds));
    CHECK(seg.timeline.spans().front().onset == 0);
    CHECK(seg.timeline.spans().back().offset ==
          doctest::Approx(kSegmentSeconds));
  }
  SUBCASE("chord crossing the boundary is clipped then continues") {
    Segment first = slice_segment(song, 0);
    Segment second = slice_segment(song, kSegmentSeconds);
    // 25.6 falls inside the chord at [25, 30).
    CHECK(first.timeline.spans().back().chord ==
          Chord::pitched(5, Quality::kMaj));
    CHECK(first.timeline.spans().back().offset ==
          doctest::Approx(kSegmentSeconds));
    CHECK(second.timeline.spans().front().chord ==
          Chord::pitched(5, Quality::kMaj));
    CHECK(second.timeline.spans().front().onset == 0);
  }
  SUBCASE("slice beyond the song end pads with no-chord") {
    Segment seg = slice_segment(song, 50.0);
    CHECK(seg.timeline.duration() == doctest::Approx(kSegmentSeconds));
    CHECK(seg.timeline.spans().back().chord == Chord::no_chord());
    CHECK(seg.timeline.spans().back().onset == doctest::Approx(10.0));
  }
}

TEST_CASE("segment slicing partitions the song") {
  auto rng = seeded_rng(14);
  Timeline song = quantized(random_timeline(rng, 61.7));
  std::vector<ChordSpan> glued;
  for (double start = 0; start < song.duration() - kTimeEps;
       start += kSegmentSeconds) {
    Segment seg = slice_segment(song, start);
    for (const auto& s : seg.timeline.spans()) {
      if (start + s.onset >= song.duration() - kTimeEps) break;
      glued.push_back({start + s.onset,
                       std::min(start + s.offset, song.duration()), s.chord});
    }
  }
  Timeline rebuilt = Timeline::from_spans(std::move(glued), song.duration());
  REQUIRE(rebuilt.spans().size() == song.spans().size());
  for (size_t i = 0; i < song.spans().size(); ++i) {
    CHECK(rebuilt.spans()[i].chord == song.spans()[i].chord);
    CHECK(rebuilt.spans()[i].onset ==
          doctest::Approx(song.spans()[i].onset).epsilon(1e-9));
  }
}

TEST_CASE("sample_frames uses midpoints") {
  Timeline t = Timeline::from_spans({{0, 1, cmaj()}, {1, 2, g7()}});
  auto frames = sample_frames(t, 0.1);
  REQUIRE(frames.size() == 20);
  for (int i = 0; i < 10; ++i) CHECK(frames[static_cast<size_t>(i)] == cmaj());
  for (int i = 10; i < 20; ++i) CHECK(frames[static_cast<size_t>(i)] == g7());
}

TEST_CASE("a 25.6 s segment yields exactly 256 frames") {
  Timeline t = Timeline::from_spans({{0, kSegmentSeconds, cmaj()}});
  CHECK(sample_frames(t, 0.1).size() == 256);
  for (const auto& c : sample_frames(t, 0.1)) CHECK(c == cmaj());
}
