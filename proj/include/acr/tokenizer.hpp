// Token representations for time-aligned chord sequences.
//
// MERGE writes each chord event as (time, chord); SPLIT as
// (time, root, quality). Chord durations are implicit: a chord lasts until
// the next chord onset or the segment end. A small grammar FSM drives both
// validation and the inference-time token masking.
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "acr/timeline.hpp"

namespace acr {

enum class Repr { kMerge, kSplit };

std::string_view repr_name(Repr r);
std::optional<Repr> repr_from_name(std::string_view name);

inline constexpr int kNumTimeTokens = 257;  // 0.0 .. 25.6 s at 0.1 s steps
inline constexpr int kNumRootTokens = 13;   // 12 pitch classes + shared N/X
inline constexpr int kNumQualityTokens = 16;  // 14 qualities + N + X
inline constexpr int kSharedNoChordRoot = 12;
inline constexpr int kNoChordQuality = 14;
inline constexpr int kUnknownQuality = 15;

// Token id layout (contiguous blocks, stable across versions):
//   0 SOS, 1 EOS, 2 PAD,
//   3..259 Time(0..256),
//   MERGE: 260..429 Chord(vocab 0..169)          -> 430 ids
//   SPLIT: 260..272 Root(0..12), 273..288 Quality(0..15) -> 289 ids
class TokenSet {
 public:
  explicit TokenSet(Repr repr);

  Repr repr() const { return repr_; }
  int size() const { return size_; }

  static constexpr int kSos = 0;
  static constexpr int kEos = 1;
  static constexpr int kPad = 2;
  static constexpr int kTimeBase = 3;
  static constexpr int kEventBase = kTimeBase + kNumTimeTokens;  // 260

  int time_token(int grid_index) const;
  int chord_token(const Chord& c) const;     // MERGE only
  int root_token(int root_or_shared) const;  // SPLIT only, 0..12
  int quality_token(int quality_index) const;  // SPLIT only, 0..15

  enum class Kind { kSos, kEos, kPad, kTime, kChord, kRoot, kQuality };
  Kind kind_of(int id) const;
  // Grid index for time tokens, vocab index for chord tokens,
  // root / quality index otherwise.
  int value_of(int id) const;

  // Split-token indices for a chord and back.
  std::pair<int, int> root_quality_of(const Chord& c) const;
  Chord chord_of_root_quality(int root, int quality) const;

  std::string token_name(int id) const;
  std::optional<int> token_from_name(std::string_view name) const;

  // Stable hash over the layout; checkpoints refuse to load on mismatch.
  uint64_t fingerprint() const;

 private:
  Repr repr_;
  int size_;
};

struct TokenSequence {
  Repr repr = Repr::kMerge;
  std::vector<int> ids;

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

// FSM over token kinds. Drives next_token_mask during inference and
// validation during decode. last_time enforces strictly increasing time
// values along the sequence.
struct GrammarState {
  enum class Pos {
    kAfterSos,
    kAfterTime,
    kAfterChord,
    kAfterRoot,
    kAfterQuality,
    kDone,
  };
  Pos pos = Pos::kAfterSos;
  int last_time = -1;
};

// Writes the allowed-token mask for the current state. Exactly the canonical
// order Time -> Chord (MERGE) / Time -> Root -> Quality (SPLIT), with only
// Time(k > last_time) and EOS at event boundaries. PAD and SOS are never
// generable; the Done state admits only PAD.
void next_token_mask(const TokenSet& ts, const GrammarState& state,
                     std::vector<uint8_t>& mask);
std::vector<uint8_t> next_token_mask(const TokenSet& ts,
                                     const GrammarState& state);

// Advances the state by one token. Returns false (state unchanged) if the
// token is not acceptable. Acceptance is the mask language plus EOS directly
// after SOS, which decodes to an all-no-chord segment but is never generated.
bool advance_grammar(const TokenSet& ts, GrammarState& state, int token);

class TokenizeError : public std::runtime_error {
 public:
  TokenizeError(const std::string& what, size_t position)
      : std::runtime_error(what), position_(position) {}
  size_t position() const { return position_; }

 private:
  size_t position_;
};

// Segment -> token sequence. The segment must be quantized to the 0.1 s grid.
TokenSequence encode(const Segment& seg, const TokenSet& ts);

enum class DecodeMode { kStrict, kLenient };

// Token sequence -> timeline over [0, segment_duration). Inverse of encode.
// Strict mode throws TokenizeError at the first ungrammatical position;
// lenient mode truncates there. A sequence carrying no chord yields a single
// no-chord span. Time(256) starts a zero-length final chord, which is
// dropped. A sequence may end at an event boundary without EOS (a decode hit
// the length cap); incomplete trailing events are an error in strict mode.
Timeline decode(const TokenSequence& seq, const TokenSet& ts,
                double segment_duration = kSegmentSeconds,
                DecodeMode mode = DecodeMode::kStrict);

// Transposes every chord; times are untouched. Pairs with the feature-side
// spectrogram bin shift.
Segment pitch_shifted(const Segment& seg, int semitones);

// A segment at a uniformly random gridded start offset in
// [0, song duration - segment length]; shorter songs are padded from offset 0.
Segment random_crop(const Timeline& song, std::mt19937_64& rng,
                    const std::string& song_id = {});

}  // namespace acr
