// Chord labels: root + quality semantics, the 170-entry vocabulary,
// transposition, and reduction of out-of-vocabulary labels.
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace acr {

// Octave-equivalent pitch class, 0 = C ... 11 = B. Enharmonic spellings
// (C# vs Db) collapse to the same value.
using PitchClass = int;

inline constexpr int kNumPitchClasses = 12;

// The 14 chord qualities, in vocabulary order.
enum class Quality : int {
  kMaj = 0,
  kMin,
  kDim,
  kAug,
  kMin6,
  kMaj6,
  kMin7,
  kMinMaj7,
  kMaj7,
  kDom7,  // written "7"
  kDim7,
  kHdim7,
  kSus2,
  kSus4,
};

inline constexpr int kNumQualities = 14;

std::string_view quality_name(Quality q);
std::optional<Quality> quality_from_name(std::string_view name);

// Interval template of a quality: semitone offsets from the root, ascending.
// Every template starts at 0 and has 3 or 4 degrees.
struct QualityTemplate {
  std::array<uint8_t, 4> offsets;
  int size;
  uint16_t mask;  // bit i set <=> offset i present
};

const QualityTemplate& quality_template(Quality q);

class ChordParseError : public std::runtime_error {
 public:
  ChordParseError(const std::string& what, size_t position)
      : std::runtime_error(what), position_(position) {}
  size_t position() const { return position_; }

 private:
  size_t position_;
};

// One of the 170 vocabulary entries: a pitched chord (root x quality),
// no-chord, or unknown. Total order follows the vocabulary index, so
// Chord values can key maps and drive stable token layouts.
class Chord {
 public:
  enum class Kind { kPitched, kNoChord, kUnknown };

  static constexpr int kVocabSize = kNumPitchClasses * kNumQualities + 2;  // 170
  static constexpr int kNoChordIndex = kNumPitchClasses * kNumQualities;  // 168
  static constexpr int kUnknownIndex = kNoChordIndex + 1;                 // 169

  constexpr Chord() : code_(kNoChordIndex) {}

  static constexpr Chord pitched(PitchClass root, Quality q) {
    return Chord(static_cast<int16_t>((root % 12) * kNumQualities +
                                      static_cast<int>(q)));
  }
  static constexpr Chord no_chord() { return Chord(kNoChordIndex); }
  static constexpr Chord unknown() { return Chord(kUnknownIndex); }

  Kind kind() const {
    if (code_ < kNoChordIndex) return Kind::kPitched;
    return code_ == kNoChordIndex ? Kind::kNoChord : Kind::kUnknown;
  }
  bool is_pitched() const { return code_ < kNoChordIndex; }
  bool is_no_chord() const { return code_ == kNoChordIndex; }
  bool is_unknown() const { return code_ == kUnknownIndex; }

  // Pitched chords only.
  PitchClass root() const { return code_ / kNumQualities; }
  Quality quality() const { return static_cast<Quality>(code_ % kNumQualities); }

  // Sounding pitch classes as a 12-bit mask (bit p <=> pitch class p).
  // Empty for no-chord and unknown.
  uint16_t pitch_class_mask() const;
  std::vector<PitchClass> pitch_classes() const;

  Chord transposed(int semitones) const;

  int vocab_index() const { return code_; }
  static Chord from_vocab_index(int index);

  // Canonical label with sharp spellings, e.g. "C:maj", "F#:min7", "N", "X".
  std::string to_string() const;

  friend bool operator==(const Chord&, const Chord&) = default;
  friend auto operator<=>(const Chord& a, const Chord& b) {
    return a.code_ <=> b.code_;
  }

 private:
  explicit constexpr Chord(int16_t code) : code_(code) {}
  int16_t code_;
};

// Maps quality names outside the vocabulary to an in-vocabulary quality or
// to unknown. The built-in table carries the common shorthand templates and
// admits a quality only when its template exactly equals an in-vocabulary
// template; everything else reduces to unknown. Override entries can be
// loaded from a stream of "name<ws>target" lines where target is a quality
// name or "X".
class ReductionTable {
 public:
  static const ReductionTable& builtin();
  static ReductionTable load(std::istream& in);

  // nullopt: name not known at all. Otherwise the reduced quality, where
  // nullopt inside means "reduce to unknown".
  std::optional<std::optional<Quality>> lookup(std::string_view name) const;

  void set(std::string name, std::optional<Quality> target);

 private:
  std::vector<std::pair<std::string, std::optional<Quality>>> entries_;
};

// Parses a chord label of the form ROOT[:QUALITY][/BASS], or bare "N" / "X".
// ROOT is A..G with an optional single # or b; a missing quality means maj.
// Bass degrees are stripped. Qualities outside the vocabulary reduce via the
// table. Malformed labels throw ChordParseError with the offending position.
Chord parse_chord_label(std::string_view text);
Chord parse_chord_label(std::string_view text, const ReductionTable& table);

std::string_view pitch_class_name(PitchClass pc);  // sharp spelling

}  // namespace acr
