#include "acr/chord.hpp"

#include <algorithm>
#include <bit>
#include <istream>
#include <sstream>

namespace acr {

namespace {

constexpr std::array<std::string_view, kNumQualities> kQualityNames = {
    "maj", "min",     "dim",  "aug", "min6", "maj6", "min7",
    "minmaj7", "maj7", "7",   "dim7", "hdim7", "sus2", "sus4"};

constexpr uint16_t mask_of(std::initializer_list<int> offsets) {
  uint16_t m = 0;
  for (int o : offsets) m |= static_cast<uint16_t>(1u << o);
  return m;
}

constexpr std::array<QualityTemplate, kNumQualities> kTemplates = {{
    {{0, 4, 7, 0}, 3, mask_of({0, 4, 7})},    // maj
    {{0, 3, 7, 0}, 3, mask_of({0, 3, 7})},    // min
    {{0, 3, 6, 0}, 3, mask_of({0, 3, 6})},    // dim
    {{0, 4, 8, 0}, 3, mask_of({0, 4, 8})},    // aug
    {{0, 3, 7, 9}, 4, mask_of({0, 3, 7, 9})},   // min6
    {{0, 4, 7, 9}, 4, mask_of({0, 4, 7, 9})},   // maj6
    {{0, 3, 7, 10}, 4, mask_of({0, 3, 7, 10})},  // min7
    {{0, 3, 7, 11}, 4, mask_of({0, 3, 7, 11})},  // minmaj7
    {{0, 4, 7, 11}, 4, mask_of({0, 4, 7, 11})},  // maj7
    {{0, 4, 7, 10}, 4, mask_of({0, 4, 7, 10})},  // 7
    {{0, 3, 6, 9}, 4, mask_of({0, 3, 6, 9})},   // dim7
    {{0, 3, 6, 10}, 4, mask_of({0, 3, 6, 10})},  // hdim7
    {{0, 2, 7, 0}, 3, mask_of({0, 2, 7})},    // sus2
    {{0, 5, 7, 0}, 3, mask_of({0, 5, 7})},    // sus4
}};

constexpr std::array<std::string_view, 12> kSharpNames = {
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"};

// Natural letter -> pitch class.
constexpr int letter_pitch_class(char c) {
  switch (c) {
    case 'C': return 0;
    case 'D': return 2;
    case 'E': return 4;
    case 'F': return 5;
    case 'G': return 7;
    case 'A': return 9;
    case 'B': return 11;
    default: return -1;
  }
}

uint16_t rotate12(uint16_t mask, int k) {
  k = ((k % 12) + 12) % 12;
  uint32_t wide = (static_cast<uint32_t>(mask) << k);
  return static_cast<uint16_t>((wide | (wide >> 12)) & 0xFFFu);
}

}  // namespace

std::string_view quality_name(Quality q) {
  return kQualityNames[static_cast<int>(q)];
}

std::optional<Quality> quality_from_name(std::string_view name) {
  for (int i = 0; i < kNumQualities; ++i) {
    if (kQualityNames[i] == name) return static_cast<Quality>(i);
  }
  return std::nullopt;
}

const QualityTemplate& quality_template(Quality q) {
  return kTemplates[static_cast<int>(q)];
}

uint16_t Chord::pitch_class_mask() const {
  if (!is_pitched()) return 0;
  return rotate12(quality_template(quality()).mask, root());
}

std::vector<PitchClass> Chord::pitch_classes() const {
  std::vector<PitchClass> out;
  uint16_t m = pitch_class_mask();
  for (int p = 0; p < 12; ++p) {
    if (m & (1u << p)) out.push_back(p);
  }
  return out;
}

Chord Chord::transposed(int semitones) const {
  if (!is_pitched()) return *this;
  int r = ((root() + semitones) % 12 + 12) % 12;
  return pitched(r, quality());
}

Chord Chord::from_vocab_index(int index) {
  if (index < 0 || index >= kVocabSize) {
    throw std::out_of_range("chord vocab index out of range: " +
                            std::to_string(index));
  }
  return Chord(static_cast<int16_t>(index));
}

std::string Chord::to_string() const {
  switch (kind()) {
    case Kind::kNoChord: return "N";
    case Kind::kUnknown: return "X";
    case Kind::kPitched: break;
  }
  std::string s(kSharpNames[root()]);
  s += ':';
  s += quality_name(quality());
  return s;
}

std::string_view pitch_class_name(PitchClass pc) {
  return kSharpNames[((pc % 12) + 12) % 12];
}

// ---------------------------------------------------------------------------
// Reduction table
// ---------------------------------------------------------------------------

namespace {

// Common shorthand qualities outside the vocabulary with their full interval
// templates. Reduction keeps a name only if its template exactly equals an
// in-vocabulary template; none of these do, so they all land on unknown, but
// the table stays data so deployments can override it.
struct OovEntry {
  std::string_view name;
  uint16_t mask;
};

constexpr std::array<OovEntry, 13> kOovTemplates = {{
    {"1", mask_of({0})},
    {"5", mask_of({0, 7})},
    {"9", mask_of({0, 2, 4, 7, 10})},
    {"maj9", mask_of({0, 2, 4, 7, 11})},
    {"min9", mask_of({0, 2, 3, 7, 10})},
    {"11", mask_of({0, 2, 4, 5, 7, 10})},
    {"min11", mask_of({0, 2, 3, 5, 7, 10})},
    {"maj11", mask_of({0, 2, 4, 5, 7, 11})},
    {"13", mask_of({0, 2, 4, 5, 7, 9, 10})},
    {"min13", mask_of({0, 2, 3, 5, 7, 9, 10})},
    {"maj13", mask_of({0, 2, 4, 5, 7, 9, 11})},
    {"aug7", mask_of({0, 4, 8, 10})},
    {"dim7b9", mask_of({0, 1, 3, 6, 9})},
}};

std::optional<Quality> quality_with_mask(uint16_t mask) {
  for (int i = 0; i < kNumQualities; ++i) {
    if (kTemplates[i].mask == mask) return static_cast<Quality>(i);
  }
  return std::nullopt;
}

}  // namespace

const ReductionTable& ReductionTable::builtin() {
  static const ReductionTable table = [] {
    ReductionTable t;
    for (const auto& e : kOovTemplates) {
      t.set(std::string(e.name), quality_with_mask(e.mask));
    }
    return t;
  }();
  return table;
}

ReductionTable ReductionTable::load(std::istream& in) {
  ReductionTable t = builtin();
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string name, target;
    if (!(ls >> name)) continue;  // blank line
    if (name.starts_with('#')) continue;
    if (!(ls >> target)) {
      throw std::runtime_error("reduction table line " +
                               std::to_string(line_no) + ": missing target");
    }
    if (target == "X") {
      t.set(name, std::nullopt);
    } else if (auto q = quality_from_name(target)) {
      t.set(name, *q);
    } else {
      throw std::runtime_error("reduction table line " +
                               std::to_string(line_no) +
                               ": unknown target quality '" + target + "'");
    }
  }
  return t;
}

std::optional<std::optional<Quality>> ReductionTable::lookup(
    std::string_view name) const {
  for (const auto& [n, q] : entries_) {
    if (n == name) return q;
  }
  return std::nullopt;
}

void ReductionTable::set(std::string name, std::optional<Quality> target) {
  for (auto& [n, q] : entries_) {
    if (n == name) {
      q = target;
      return;
    }
  }
  entries_.emplace_back(std::move(name), target);
}

// ---------------------------------------------------------------------------
// Label parsing
// ---------------------------------------------------------------------------

Chord parse_chord_label(std::string_view text) {
  return parse_chord_label(text, ReductionTable::builtin());
}

Chord parse_chord_label(std::string_view text, const ReductionTable& table) {
  if (text.empty()) throw ChordParseError("empty chord label", 0);
  if (text == "N") return Chord::no_chord();
  if (text == "X") return Chord::unknown();

  size_t pos = 0;
  int pc = letter_pitch_class(text[0]);
  if (pc < 0) {
    throw ChordParseError("expected root letter A..G, 'N' or 'X'", 0);
  }
  ++pos;
  if (pos < text.size() && (text[pos] == '#' || text[pos] == 'b')) {
    pc += text[pos] == '#' ? 1 : -1;
    pc = ((pc % 12) + 12) % 12;
    ++pos;
  }

  std::string_view quality_str;
  if (pos < text.size() && text[pos] == ':') {
    ++pos;
    size_t start = pos;
    while (pos < text.size() && text[pos] != '/') ++pos;
    quality_str = text.substr(start, pos - start);
    if (quality_str.empty()) {
      throw ChordParseError("missing quality after ':'", start);
    }
  }

  if (pos < text.size() && text[pos] == '/') {
    size_t bass_start = ++pos;
    while (pos < text.size()) {
      char c = text[pos];
      bool ok = (c >= '0' && c <= '9') || c == '#' || c == 'b';
      if (!ok) throw ChordParseError("malformed bass degree", pos);
      ++pos;
    }
    if (pos == bass_start) throw ChordParseError("missing bass degree", pos);
    // Bass is stripped: evaluation here is inversion-blind.
  }

  if (pos != text.size()) {
    throw ChordParseError("trailing characters after chord label", pos);
  }

  if (quality_str.empty()) return Chord::pitched(pc, Quality::kMaj);
  if (auto q = quality_from_name(quality_str)) return Chord::pitched(pc, *q);

  auto reduced = table.lookup(quality_str);
  if (!reduced.has_value()) {
    throw ChordParseError("unknown quality '" + std::string(quality_str) + "'",
                          text.find(':') + 1);
  }
  if (reduced->has_value()) return Chord::pitched(pc, **reduced);
  return Chord::unknown();
}

}  // namespace acr
