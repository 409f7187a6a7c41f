// Time-aligned chord annotations: .lab I/O, validation, grid quantization,
// segment slicing, and frame sampling.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "acr/chord.hpp"

namespace acr {

inline constexpr double kGridSeconds = 0.1;
inline constexpr double kSegmentSeconds = 25.6;
inline constexpr double kTimeEps = 1e-9;

struct ChordSpan {
  double onset = 0;
  double offset = 0;
  Chord chord;

  double length() const { return offset - onset; }
  friend bool operator==(const ChordSpan&, const ChordSpan&) = default;
};

// Ordered, non-overlapping, gap-free chord intervals covering [0, duration].
// Construction fills gaps with no-chord and merges adjacent spans that carry
// the same chord, so no two neighbours are equal.
class Timeline {
 public:
  Timeline() = default;

  // Validates (sorted, non-overlapping, onset < offset), gap-fills and
  // normalizes. duration < 0 means "use the last offset".
  static Timeline from_spans(std::vector<ChordSpan> spans, double duration = -1);

  const std::vector<ChordSpan>& spans() const { return spans_; }
  double duration() const { return duration_; }
  bool empty() const { return spans_.empty(); }

  // Chord sounding at time t (clamped to [0, duration)).
  const Chord& at(double t) const;

  Timeline transposed(int semitones) const;

  friend bool operator==(const Timeline&, const Timeline&) = default;

 private:
  std::vector<ChordSpan> spans_;
  double duration_ = 0;
};

class LabParseError : public std::runtime_error {
 public:
  LabParseError(const std::string& what, size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

// Reads "onset offset label" lines (tab or space separated). The result is
// validated, gap-filled and merged; bad labels or out-of-order intervals
// throw LabParseError with the line number.
Timeline read_lab(std::istream& in);
Timeline read_lab(std::istream& in, const ReductionTable& table);
Timeline read_lab_file(const std::string& path);
Timeline read_lab_file(const std::string& path, const ReductionTable& table);

void write_lab(std::ostream& out, const Timeline& t);
void write_lab_file(const std::string& path, const Timeline& t);

// Rounds every onset to the nearest grid point (ties round up), drops spans
// that collapse to zero length and re-merges. Idempotent; duration unchanged.
Timeline quantized(const Timeline& t, double grid = kGridSeconds);

bool is_quantized(const Timeline& t, double grid = kGridSeconds);

// Nearest-grid index of a time value with half-up tie breaking.
long grid_index(double seconds, double grid = kGridSeconds);

// A fixed-length slice of a song timeline, re-based to onset 0.
struct Segment {
  Timeline timeline;  // duration exactly the segment length
  std::string song_id;
  double start = 0;  // offset of the slice within the source song
};

// Clips [start, start+dur) out of t, re-bases to 0 and pads the tail with
// no-chord when the song ends early.
Segment slice_segment(const Timeline& t, double start,
                      double dur = kSegmentSeconds,
                      const std::string& song_id = {});

// Chord active at the midpoint of each hop-sized frame;
// length = floor(duration / hop).
std::vector<Chord> sample_frames(const Timeline& t, double hop);

}  // namespace acr
