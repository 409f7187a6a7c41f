#include "acr/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "acr/features.hpp"
#include "acr/training.hpp"

namespace acr {

TokenSequence greedy_masked_decode(const Model& model, const Spectrogram& spec,
                                   const TokenSet& ts) {
  if (model.config().vocab != ts.size()) {
    throw std::invalid_argument("model vocabulary does not match token set");
  }
  Mat enc = model.forward_encoder(spec);

  TokenSequence seq;
  seq.repr = ts.repr();
  seq.ids = {TokenSet::kSos};
  GrammarState state;
  std::vector<uint8_t> mask;
  size_t last_boundary = 1;  // sequence length at the last completed event

  while (static_cast<int>(seq.ids.size()) < model.config().max_target_len) {
    Mat logits = model.forward_decoder(seq.ids, enc);
    const double* row = logits.row(logits.rows() - 1);
    next_token_mask(ts, state, mask);

    int best = -1;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int id = 0; id < ts.size(); ++id) {
      if (mask[static_cast<size_t>(id)] && row[id] > best_v) {
        best_v = row[id];
        best = id;  // strict > keeps the lowest id on ties
      }
    }
    advance_grammar(ts, state, best);
    seq.ids.push_back(best);
    if (best == TokenSet::kEos) break;
    if (state.pos == GrammarState::Pos::kAfterChord ||
        state.pos == GrammarState::Pos::kAfterQuality) {
      last_boundary = seq.ids.size();
    }
  }
  if (seq.ids.back() != TokenSet::kEos) {
    seq.ids.resize(last_boundary);  // drop a length-capped partial event
  }
  return seq;
}

Timeline predict_song(const Model& model, const Spectrogram& song_features,
                      double duration, const TokenSet& ts) {
  const int frames_per_seg = model.config().input_frames;
  const double seg_seconds = frames_per_seg * kGridSeconds;
  std::vector<ChordSpan> spans;
  for (int start = 0; start * kGridSeconds < duration - kTimeEps;
       start += frames_per_seg) {
    Spectrogram window = slice_frames(song_features, start, frames_per_seg);
    TokenSequence seq = greedy_masked_decode(model, window, ts);
    Timeline segment = decode(seq, ts, seg_seconds);
    double base = start * kGridSeconds;
    for (const auto& s : segment.spans()) {
      if (base + s.onset >= duration - kTimeEps) break;
      spans.push_back({base + s.onset, std::min(base + s.offset, duration),
                       s.chord});
    }
  }
  return Timeline::from_spans(std::move(spans), duration);
}

Timeline predict_song(const Model& model, const Waveform& audio,
                      const TokenSet& ts) {
  return predict_song(model, cqt(audio), audio.duration(), ts);
}

Timeline frames_to_timeline(std::span<const int> frame_labels, double hop) {
  std::vector<ChordSpan> spans;
  for (size_t f = 0; f < frame_labels.size(); ++f) {
    spans.push_back({static_cast<double>(f) * hop,
                     static_cast<double>(f + 1) * hop,
                     Chord::from_vocab_index(frame_labels[f])});
  }
  return Timeline::from_spans(std::move(spans),
                              static_cast<double>(frame_labels.size()) * hop);
}

Timeline frame_decode(const Model& model, const Spectrogram& spec) {
  Mat states = model.forward_encoder(spec);
  Mat logits = model.frame_classify(states);
  std::vector<int> labels;
  labels.reserve(static_cast<size_t>(logits.rows()));
  for (int f = 0; f < logits.rows(); ++f) {
    const double* row = logits.row(f);
    int best = 0;
    for (int c = 1; c < logits.cols(); ++c) {
      if (row[c] > row[best]) best = c;
    }
    labels.push_back(best);
  }
  return frames_to_timeline(labels);
}

Timeline predict_song_frames(const Model& model,
                             const Spectrogram& song_features,
                             double duration) {
  const int frames_per_seg = model.config().input_frames;
  std::vector<ChordSpan> spans;
  for (int start = 0; start * kGridSeconds < duration - kTimeEps;
       start += frames_per_seg) {
    Spectrogram window = slice_frames(song_features, start, frames_per_seg);
    Timeline segment = frame_decode(model, window);
    double base = start * kGridSeconds;
    for (const auto& s : segment.spans()) {
      if (base + s.onset >= duration - kTimeEps) break;
      spans.push_back({base + s.onset, std::min(base + s.offset, duration),
                       s.chord});
    }
  }
  return Timeline::from_spans(std::move(spans), duration);
}

Timeline predict_song_frames(const Model& model, const Waveform& audio) {
  return predict_song_frames(model, cqt(audio), audio.duration());
}

}  // namespace acr
