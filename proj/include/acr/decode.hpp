// Inference: masked greedy auto-regressive decoding, segment stitching into
// full-song predictions, and the frame-level baseline decode path.
#pragma once

#include "acr/model.hpp"
#include "acr/tokenizer.hpp"

namespace acr {

// Greedy decoding from SOS: at each step the argmax over mask-allowed tokens
// (ties break toward the lowest id), until EOS or max_target_len. If the
// length cap interrupts an event, the trailing partial event is dropped, so
// the output always decodes strictly.
TokenSequence greedy_masked_decode(const Model& model, const Spectrogram& spec,
                                   const TokenSet& ts);

// Tiles the song spectrogram into consecutive segment windows, decodes each,
// re-bases and concatenates, merging identical chords at boundaries and
// truncating to the true duration.
Timeline predict_song(const Model& model, const Spectrogram& song_features,
                      double duration, const TokenSet& ts);
Timeline predict_song(const Model& model, const Waveform& audio,
                      const TokenSet& ts);

// Frame labels (chord vocab indices) mapped back to hop-sized spans with
// adjacent duplicates merged.
Timeline frames_to_timeline(std::span<const int> frame_labels,
                            double hop = kGridSeconds);

// Frame-level baseline: per-frame argmax mapped back to 0.1 s spans with
// adjacent duplicates merged. No smoothing.
Timeline frame_decode(const Model& model, const Spectrogram& spec);
Timeline predict_song_frames(const Model& model,
                             const Spectrogram& song_features, double duration);
Timeline predict_song_frames(const Model& model, const Waveform& audio);

}  // namespace acr
