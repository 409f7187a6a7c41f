#include "acr/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace acr {

namespace {

void merge_adjacent(std::vector<ChordSpan>& spans) {
  if (spans.empty()) return;
  std::vector<ChordSpan> out;
  out.reserve(spans.size());
  out.push_back(spans.front());
  for (size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].chord == out.back().chord &&
        std::abs(spans[i].onset - out.back().offset) < kTimeEps) {
      out.back().offset = spans[i].offset;
    } else {
      out.push_back(spans[i]);
    }
  }
  spans = std::move(out);
}

}  // namespace

Timeline Timeline::from_spans(std::vector<ChordSpan> spans, double duration) {
  for (const auto& s : spans) {
    if (s.onset < -kTimeEps || s.offset <= s.onset + kTimeEps) {
      throw std::invalid_argument("chord span must satisfy 0 <= onset < offset");
    }
  }
  std::stable_sort(spans.begin(), spans.end(),
                   [](const ChordSpan& a, const ChordSpan& b) {
                     return a.onset < b.onset;
                   });
  for (size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].onset < spans[i - 1].offset - kTimeEps) {
      throw std::invalid_argument("overlapping chord spans");
    }
  }

  double dur = duration;
  if (dur < 0) dur = spans.empty() ? 0 : spans.back().offset;

  std::vector<ChordSpan> filled;
  filled.reserve(spans.size() + 4);
  double cursor = 0;
  for (auto& s : spans) {
    if (s.onset >= dur - kTimeEps) break;
    if (s.onset > cursor + kTimeEps) {
      filled.push_back({cursor, s.onset, Chord::no_chord()});
    }
    s.offset = std::min(s.offset, dur);
    s.onset = std::max(s.onset, cursor);
    if (s.offset > s.onset + kTimeEps) filled.push_back(s);
    cursor = filled.empty() ? 0.0 : filled.back().offset;
  }
  if (dur > cursor + kTimeEps) {
    filled.push_back({cursor, dur, Chord::no_chord()});
  }
  merge_adjacent(filled);

  Timeline t;
  t.spans_ = std::move(filled);
  t.duration_ = dur;
  return t;
}

const Chord& Timeline::at(double t) const {
  static const Chord kN = Chord::no_chord();
  if (spans_.empty()) return kN;
  // Binary search for the span containing t.
  auto it = std::upper_bound(
      spans_.begin(), spans_.end(), t,
      [](double v, const ChordSpan& s) { return v < s.onset; });
  if (it == spans_.begin()) return spans_.front().chord;
  return std::prev(it)->chord;
}

Timeline Timeline::transposed(int semitones) const {
  Timeline t = *this;
  for (auto& s : t.spans_) s.chord = s.chord.transposed(semitones);
  merge_adjacent(t.spans_);
  return t;
}

Timeline read_lab(std::istream& in) {
  return read_lab(in, ReductionTable::builtin());
}

Timeline read_lab(std::istream& in, const ReductionTable& table) {
  std::vector<ChordSpan> spans;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    std::istringstream ls(line);
    double onset = 0, offset = 0;
    std::string label;
    if (!(ls >> onset >> offset >> label)) {
      throw LabParseError("expected 'onset offset label'", line_no);
    }
    std::string extra;
    if (ls >> extra) {
      throw LabParseError("trailing fields after label", line_no);
    }
    if (onset < 0 || offset <= onset) {
      throw LabParseError("interval must satisfy 0 <= onset < offset", line_no);
    }
    if (!spans.empty() && onset < spans.back().offset - kTimeEps) {
      throw LabParseError("intervals unsorted or overlapping", line_no);
    }
    Chord chord;
    try {
      chord = parse_chord_label(label, table);
    } catch (const ChordParseError& e) {
      throw LabParseError("bad chord label '" + label + "': " + e.what(),
                          line_no);
    }
    spans.push_back({onset, offset, chord});
  }
  return Timeline::from_spans(std::move(spans));
}

Timeline read_lab_file(const std::string& path) {
  return read_lab_file(path, ReductionTable::builtin());
}

Timeline read_lab_file(const std::string& path, const ReductionTable& table) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lab file: " + path);
  return read_lab(in, table);
}

void write_lab(std::ostream& out, const Timeline& t) {
  out << std::fixed << std::setprecision(6);
  for (const auto& s : t.spans()) {
    out << s.onset << '\t' << s.offset << '\t' << s.chord.to_string() << '\n';
  }
}

void write_lab_file(const std::string& path, const Timeline& t) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_lab(out, t);
}

long grid_index(double seconds, double grid) {
  // Half-up rounding with a small bias so exact .5 ties survive the division.
  return static_cast<long>(std::floor(seconds / grid + 0.5 + kTimeEps));
}

Timeline quantized(const Timeline& t, double grid) {
  if (grid <= 0) throw std::invalid_argument("grid must be positive");
  std::vector<ChordSpan> spans;
  spans.reserve(t.spans().size());
  for (const auto& s : t.spans()) {
    double onset = static_cast<double>(grid_index(s.onset, grid)) * grid;
    if (!spans.empty()) spans.back().offset = onset;
    spans.push_back({onset, s.offset, s.chord});
  }
  if (!spans.empty()) spans.back().offset = t.duration();
  // Drop spans that collapsed to zero length.
  std::erase_if(spans, [](const ChordSpan& s) {
    return s.offset <= s.onset + kTimeEps;
  });
  return Timeline::from_spans(std::move(spans), t.duration());
}

bool is_quantized(const Timeline& t, double grid) {
  for (const auto& s : t.spans()) {
    double snapped = static_cast<double>(grid_index(s.onset, grid)) * grid;
    if (std::abs(snapped - s.onset) > 1e-6) return false;
  }
  return true;
}

Segment slice_segment(const Timeline& t, double start, double dur,
                      const std::string& song_id) {
  if (start < 0) throw std::invalid_argument("slice start must be >= 0");
  std::vector<ChordSpan> spans;
  double end = start + dur;
  for (const auto& s : t.spans()) {
    double a = std::max(s.onset, start);
    double b = std::min(s.offset, end);
    if (b > a + kTimeEps) {
      spans.push_back({a - start, b - start, s.chord});
    }
  }
  Segment seg;
  seg.timeline = Timeline::from_spans(std::move(spans), dur);  // pads tail
  seg.song_id = song_id;
  seg.start = start;
  return seg;
}

std::vector<Chord> sample_frames(const Timeline& t, double hop) {
  if (hop <= 0) throw std::invalid_argument("hop must be positive");
  auto n = static_cast<size_t>(std::floor(t.duration() / hop + kTimeEps));
  std::vector<Chord> frames;
  frames.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    frames.push_back(t.at((static_cast<double>(i) + 0.5) * hop));
  }
  return frames;
}

}  // namespace acr
