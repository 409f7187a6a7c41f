#include "acr/tokenizer.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>

namespace acr {

std::string_view repr_name(Repr r) {
  return r == Repr::kMerge ? "merge" : "split";
}

std::optional<Repr> repr_from_name(std::string_view name) {
  if (name == "merge" || name == "MERGE") return Repr::kMerge;
  if (name == "split" || name == "SPLIT") return Repr::kSplit;
  return std::nullopt;
}

TokenSet::TokenSet(Repr repr) : repr_(repr) {
  size_ = kEventBase + (repr == Repr::kMerge
                            ? Chord::kVocabSize
                            : kNumRootTokens + kNumQualityTokens);
  // 430 for MERGE, 289 for SPLIT.
  assert(size_ == (repr == Repr::kMerge ? 430 : 289));
}

int TokenSet::time_token(int grid_index) const {
  if (grid_index < 0 || grid_index >= kNumTimeTokens) {
    throw std::out_of_range("time token index out of range");
  }
  return kTimeBase + grid_index;
}

int TokenSet::chord_token(const Chord& c) const {
  if (repr_ != Repr::kMerge) {
    throw std::logic_error("chord tokens exist only in the merge set");
  }
  return kEventBase + c.vocab_index();
}

int TokenSet::root_token(int root_or_shared) const {
  if (repr_ != Repr::kSplit) {
    throw std::logic_error("root tokens exist only in the split set");
  }
  if (root_or_shared < 0 || root_or_shared >= kNumRootTokens) {
    throw std::out_of_range("root token index out of range");
  }
  return kEventBase + root_or_shared;
}

int TokenSet::quality_token(int quality_index) const {
  if (repr_ != Repr::kSplit) {
    throw std::logic_error("quality tokens exist only in the split set");
  }
  if (quality_index < 0 || quality_index >= kNumQualityTokens) {
    throw std::out_of_range("quality token index out of range");
  }
  return kEventBase + kNumRootTokens + quality_index;
}

TokenSet::Kind TokenSet::kind_of(int id) const {
  if (id < 0 || id >= size_) throw std::out_of_range("token id out of range");
  switch (id) {
    case kSos: return Kind::kSos;
    case kEos: return Kind::kEos;
    case kPad: return Kind::kPad;
    default: break;
  }
  if (id < kEventBase) return Kind::kTime;
  if (repr_ == Repr::kMerge) return Kind::kChord;
  return id < kEventBase + kNumRootTokens ? Kind::kRoot : Kind::kQuality;
}

int TokenSet::value_of(int id) const {
  switch (kind_of(id)) {
    case Kind::kTime: return id - kTimeBase;
    case Kind::kChord: return id - kEventBase;
    case Kind::kRoot: return id - kEventBase;
    case Kind::kQuality: return id - kEventBase - kNumRootTokens;
    default: return 0;
  }
}

std::pair<int, int> TokenSet::root_quality_of(const Chord& c) const {
  switch (c.kind()) {
    case Chord::Kind::kPitched:
      return {c.root(), static_cast<int>(c.quality())};
    case Chord::Kind::kNoChord:
      return {kSharedNoChordRoot, kNoChordQuality};
    case Chord::Kind::kUnknown:
      return {kSharedNoChordRoot, kUnknownQuality};
  }
  return {kSharedNoChordRoot, kUnknownQuality};
}

Chord TokenSet::chord_of_root_quality(int root, int quality) const {
  // The mask does not couple root and quality, so decode must be total:
  // quality N/X wins regardless of root, and a shared root with a pitched
  // quality carries no identifiable pitch content.
  if (quality == kNoChordQuality) return Chord::no_chord();
  if (quality == kUnknownQuality) return Chord::unknown();
  if (root == kSharedNoChordRoot) return Chord::unknown();
  return Chord::pitched(root, static_cast<Quality>(quality));
}

std::string TokenSet::token_name(int id) const {
  switch (kind_of(id)) {
    case Kind::kSos: return "SOS";
    case Kind::kEos: return "EOS";
    case Kind::kPad: return "PAD";
    case Kind::kTime: return "Time:" + std::to_string(value_of(id));
    case Kind::kChord:
      return "Chord:" + Chord::from_vocab_index(value_of(id)).to_string();
    case Kind::kRoot: {
      int v = value_of(id);
      if (v == kSharedNoChordRoot) return "Root:N";
      return "Root:" + std::string(pitch_class_name(v));
    }
    case Kind::kQuality: {
      int v = value_of(id);
      if (v == kNoChordQuality) return "Quality:N";
      if (v == kUnknownQuality) return "Quality:X";
      return "Quality:" + std::string(quality_name(static_cast<Quality>(v)));
    }
  }
  return {};
}

std::optional<int> TokenSet::token_from_name(std::string_view name) const {
  if (name == "SOS") return kSos;
  if (name == "EOS") return kEos;
  if (name == "PAD") return kPad;
  auto colon = name.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  std::string_view head = name.substr(0, colon);
  std::string_view rest = name.substr(colon + 1);
  if (head == "Time") {
    int v = -1;
    auto [p, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), v);
    if (ec != std::errc() || p != rest.data() + rest.size()) return std::nullopt;
    if (v < 0 || v >= kNumTimeTokens) return std::nullopt;
    return kTimeBase + v;
  }
  if (head == "Chord" && repr_ == Repr::kMerge) {
    try {
      return chord_token(parse_chord_label(rest));
    } catch (const ChordParseError&) {
      return std::nullopt;
    }
  }
  if (head == "Root" && repr_ == Repr::kSplit) {
    if (rest == "N") return root_token(kSharedNoChordRoot);
    for (int p = 0; p < 12; ++p) {
      if (pitch_class_name(p) == rest) return root_token(p);
    }
    return std::nullopt;
  }
  if (head == "Quality" && repr_ == Repr::kSplit) {
    if (rest == "N") return quality_token(kNoChordQuality);
    if (rest == "X") return quality_token(kUnknownQuality);
    if (auto q = quality_from_name(rest)) {
      return quality_token(static_cast<int>(*q));
    }
    return std::nullopt;
  }
  return std::nullopt;
}

uint64_t TokenSet::fingerprint() const {
  // FNV-1a over the layout description.
  std::string desc = std::string(repr_name(repr_)) + "|" +
                     std::to_string(size_) + "|sos0eos1pad2|time3|event" +
                     std::to_string(kEventBase);
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : desc) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Grammar
// ---------------------------------------------------------------------------

void next_token_mask(const TokenSet& ts, const GrammarState& state,
                     std::vector<uint8_t>& mask) {
  mask.assign(static_cast<size_t>(ts.size()), 0);
  using Pos = GrammarState::Pos;

  auto allow_times_after = [&](int last) {
    for (int k = last + 1; k < kNumTimeTokens; ++k) {
      mask[static_cast<size_t>(TokenSet::kTimeBase + k)] = 1;
    }
  };

  switch (state.pos) {
    case Pos::kAfterSos:
      allow_times_after(state.last_time);
      break;
    case Pos::kAfterTime:
      if (ts.repr() == Repr::kMerge) {
        for (int i = 0; i < Chord::kVocabSize; ++i) {
          mask[static_cast<size_t>(TokenSet::kEventBase + i)] = 1;
        }
      } else {
        for (int r = 0; r < kNumRootTokens; ++r) {
          mask[static_cast<size_t>(TokenSet::kEventBase + r)] = 1;
        }
      }
      break;
    case Pos::kAfterRoot:
      for (int q = 0; q < kNumQualityTokens; ++q) {
        mask[static_cast<size_t>(TokenSet::kEventBase + kNumRootTokens + q)] = 1;
      }
      break;
    case Pos::kAfterChord:
    case Pos::kAfterQuality:
      allow_times_after(state.last_time);
      mask[TokenSet::kEos] = 1;
      break;
    case Pos::kDone:
      mask[TokenSet::kPad] = 1;
      break;
  }
}

std::vector<uint8_t> next_token_mask(const TokenSet& ts,
                                     const GrammarState& state) {
  std::vector<uint8_t> mask;
  next_token_mask(ts, state, mask);
  return mask;
}

bool advance_grammar(const TokenSet& ts, GrammarState& state, int token) {
  if (token < 0 || token >= ts.size()) return false;
  using Pos = GrammarState::Pos;
  using Kind = TokenSet::Kind;
  Kind kind = ts.kind_of(token);

  switch (state.pos) {
    case Pos::kAfterSos:
      if (kind == Kind::kEos) {  // empty sequence: valid input, never generated
        state.pos = Pos::kDone;
        return true;
      }
      [[fallthrough]];
    case Pos::kAfterChord:
    case Pos::kAfterQuality:
      if (kind == Kind::kEos && state.pos != Pos::kAfterSos) {
        state.pos = Pos::kDone;
        return true;
      }
      if (kind == Kind::kTime) {
        int t = ts.value_of(token);
        if (t <= state.last_time) return false;
        state.last_time = t;
        state.pos = Pos::kAfterTime;
        return true;
      }
      return false;
    case Pos::kAfterTime:
      if (ts.repr() == Repr::kMerge && kind == Kind::kChord) {
        state.pos = Pos::kAfterChord;
        return true;
      }
      if (ts.repr() == Repr::kSplit && kind == Kind::kRoot) {
        state.pos = Pos::kAfterRoot;
        return true;
      }
      return false;
    case Pos::kAfterRoot:
      if (kind == Kind::kQuality) {
        state.pos = Pos::kAfterQuality;
        return true;
      }
      return false;
    case Pos::kDone:
      return kind == Kind::kPad;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Encode / decode
// ---------------------------------------------------------------------------

TokenSequence encode(const Segment& seg, const TokenSet& ts) {
  TokenSequence seq;
  seq.repr = ts.repr();
  seq.ids.push_back(TokenSet::kSos);
  for (const auto& span : seg.timeline.spans()) {
    long idx = grid_index(span.onset);
    double snapped = static_cast<double>(idx) * kGridSeconds;
    if (std::abs(snapped - span.onset) > 1e-6) {
      throw TokenizeError("segment onset not on the 0.1 s grid",
                          static_cast<size_t>(seq.ids.size()));
    }
    seq.ids.push_back(ts.time_token(static_cast<int>(idx)));
    if (ts.repr() == Repr::kMerge) {
      seq.ids.push_back(ts.chord_token(span.chord));
    } else {
      auto [r, q] = ts.root_quality_of(span.chord);
      seq.ids.push_back(ts.root_token(r));
      seq.ids.push_back(ts.quality_token(q));
    }
  }
  seq.ids.push_back(TokenSet::kEos);
  return seq;
}

Timeline decode(const TokenSequence& seq, const TokenSet& ts,
                double segment_duration, DecodeMode mode) {
  if (seq.repr != ts.repr()) {
    throw std::invalid_argument("sequence representation does not match set");
  }
  auto fail = [&](const std::string& what, size_t pos) -> bool {
    if (mode == DecodeMode::kStrict) {
      throw TokenizeError(what + " at position " + std::to_string(pos), pos);
    }
    return false;  // lenient: stop consuming
  };

  struct Event {
    int time = 0;
    Chord chord;
  };
  std::vector<Event> events;

  if (seq.ids.empty() || seq.ids.front() != TokenSet::kSos) {
    fail("sequence must begin with SOS", 0);
    return Timeline::from_spans({}, segment_duration);
  }

  GrammarState state;
  int pending_time = -1;
  int pending_root = -1;
  size_t i = 1;
  for (; i < seq.ids.size(); ++i) {
    int id = seq.ids[i];
    GrammarState before = state;
    if (!advance_grammar(ts, state, id)) {
      state = before;
      if (!fail("ungrammatical token " +
                    (id >= 0 && id < ts.size() ? ts.token_name(id)
                                               : std::to_string(id)),
                i)) {
        break;
      }
    }
    switch (ts.kind_of(id)) {
      case TokenSet::Kind::kTime:
        pending_time = ts.value_of(id);
        break;
      case TokenSet::Kind::kChord:
        events.push_back({pending_time,
                          Chord::from_vocab_index(ts.value_of(id))});
        break;
      case TokenSet::Kind::kRoot:
        pending_root = ts.value_of(id);
        break;
      case TokenSet::Kind::kQuality:
        events.push_back({pending_time,
                          ts.chord_of_root_quality(pending_root,
                                                   ts.value_of(id))});
        break;
      default:
        break;  // SOS handled above; EOS/PAD carry no content
    }
    if (state.pos == GrammarState::Pos::kDone && id == TokenSet::kEos) {
      // Only PAD may follow.
      for (size_t j = i + 1; j < seq.ids.size(); ++j) {
        if (seq.ids[j] != TokenSet::kPad) {
          fail("non-PAD token after EOS", j);
          break;
        }
      }
      break;
    }
  }
  // Without EOS the sequence must end at an event boundary (a decode that
  // hit the length cap); a trailing half-finished event is malformed.
  if (state.pos == GrammarState::Pos::kAfterTime ||
      state.pos == GrammarState::Pos::kAfterRoot) {
    fail("sequence ends inside an event", seq.ids.size());
  }

  std::vector<ChordSpan> spans;
  for (size_t e = 0; e < events.size(); ++e) {
    double onset = events[e].time * kGridSeconds;
    double offset = e + 1 < events.size()
                        ? events[e + 1].time * kGridSeconds
                        : segment_duration;
    offset = std::min(offset, segment_duration);
    if (offset > onset + kTimeEps) {
      spans.push_back({onset, offset, events[e].chord});
    }
  }
  return Timeline::from_spans(std::move(spans), segment_duration);
}

// ---------------------------------------------------------------------------
// Augmentations
// ---------------------------------------------------------------------------

Segment pitch_shifted(const Segment& seg, int semitones) {
  Segment out = seg;
  out.timeline = seg.timeline.transposed(semitones);
  return out;
}

Segment random_crop(const Timeline& song, std::mt19937_64& rng,
                    const std::string& song_id) {
  double max_start = song.duration() - kSegmentSeconds;
  long start_idx = 0;
  if (max_start > kTimeEps) {
    long max_idx = static_cast<long>(std::floor(max_start / kGridSeconds +
                                                kTimeEps));
    std::uniform_int_distribution<long> dist(0, max_idx);
    start_idx = dist(rng);
  }
  return slice_segment(song, static_cast<double>(start_idx) * kGridSeconds,
                       kSegmentSeconds, song_id);
}

}  // namespace acr
