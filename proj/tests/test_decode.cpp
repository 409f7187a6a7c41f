// Masked greedy decoding, tie-breaking, stitching, frame baseline paths.
#include "acr/decode.hpp"
#include "acr/rng.hpp"
#include "acr/training.hpp"
#include "doctest.h"

using namespace acr;

namespace {

ModelConfig tiny_config(Repr repr) {
  ModelConfig cfg;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.n_enc = 1;
  cfg.n_dec = 1;
  cfg.ff_dim = 16;
  cfg.dropout = 0.0;
  cfg.vocab = static_cast<int>(TokenSet(repr).size());
  cfg.max_target_len = ModelConfig::grammar_max_len(repr);
  cfg.input_bins = 12;
  cfg.input_frames = 256;
  return cfg;
}

Spectrogram random_spec(int frames, int bins, std::mt19937_64& rng) {
  Spectrogram s;
  s.frames = frames;
  s.bins = bins;
  s.values.resize(static_cast<size_t>(frames) * bins);
  for (auto& v : s.values) v = std::abs(gaussian(rng));
  return s;
}

}  // namespace

TEST_CASE("all-zero logits pick the lowest allowed id at every step") {
  auto rng = seeded_rng(81);
  ModelConfig cfg = tiny_config(Repr::kMerge);
  Model model(cfg, rng);
  for (auto& np : model.parameters()) np.param->w.zero();

  TokenSet ts(Repr::kMerge);
  Spectrogram spec = random_spec(cfg.input_frames, cfg.input_bins, rng);
  TokenSequence seq = greedy_masked_decode(model, spec, ts);
  // Ties everywhere: Time(0) (lowest time id), then Chord index 0, then EOS
  // (id 1, below every time token id).
  CHECK(seq.ids == std::vector<int>{TokenSet::kSos, ts.time_token(0),
                                    ts.chord_token(Chord::pitched(0, Quality::kMaj)),
                                    TokenSet::kEos});
}

TEST_CASE("greedy output is grammatical and mask-dominant for random models") {
  auto rng = seeded_rng(82);
  for (Repr repr : {Repr::kMerge, Repr::kSplit}) {
    ModelConfig cfg = tiny_config(repr);
    Model model(cfg, rng);
    TokenSet ts(repr);
    for (int trial = 0; trial < 3; ++trial) {
      Spectrogram spec = random_spec(cfg.input_frames, cfg.input_bins, rng);
      TokenSequence seq = greedy_masked_decode(model, spec, ts);

      // Replay the walk: every token must be mask-allowed.
      GrammarState st;
      std::vector<uint8_t> mask;
      for (size_t i = 1; i < seq.ids.size(); ++i) {
        next_token_mask(ts, st, mask);
        CHECK(mask[static_cast<size_t>(seq.ids[i])]);
        REQUIRE(advance_grammar(ts, st, seq.ids[i]));
      }
      CHECK_NOTHROW(decode(seq, ts));

      // Determinism.
      TokenSequence again = greedy_masked_decode(model, spec, ts);
      CHECK(seq.ids == again.ids);
    }
  }
}

TEST_CASE("masked tokens are never selected even when favored") {
  // Zero weights except a bias pushing probability onto PAD and SOS, which
  // the mask always blocks.
  auto rng = seeded_rng(83);
  ModelConfig cfg = tiny_config(Repr::kMerge);
  Model model(cfg, rng);
  for (auto& np : model.parameters()) {
    np.param->w.zero();
    if (np.name == "out_proj.b") {
      np.param->w(0, TokenSet::kPad) = 50.0;
      np.param->w(0, TokenSet::kSos) = 40.0;
      np.param->w(0, TokenSet::kEos) = 30.0;
    }
  }
  TokenSet ts(Repr::kMerge);
  Spectrogram spec = random_spec(cfg.input_frames, cfg.input_bins, rng);
  TokenSequence seq = greedy_masked_decode(model, spec, ts);
  // After SOS only times are allowed, so PAD/SOS/EOS cannot appear first;
  // after the first chord, EOS (the best unmasked of the biased trio) ends it.
  REQUIRE(seq.ids.size() >= 2);
  CHECK(ts.kind_of(seq.ids[1]) == TokenSet::Kind::kTime);
  for (int id : seq.ids) {
    CHECK(id != TokenSet::kPad);
  }
  CHECK(seq.ids.back() == TokenSet::kEos);
}

TEST_CASE("frames_to_timeline merges runs and keeps deviants") {
  int cmaj = Chord::pitched(0, Quality::kMaj).vocab_index();
  int gmin = Chord::pitched(7, Quality::kMin).vocab_index();

  SUBCASE("constant frames give a single span") {
    std::vector<int> frames(256, cmaj);
    Timeline t = frames_to_timeline(frames);
    REQUIRE(t.spans().size() == 1);
    CHECK(t.duration() == doctest::Approx(25.6));
  }
  SUBCASE("one deviant frame fragments the run into three spans") {
    std::vector<int> frames(256, cmaj);
    frames[100] = gmin;
    Timeline t = frames_to_timeline(frames);
    REQUIRE(t.spans().size() == 3);
    CHECK(t.spans()[1].chord == Chord::pitched(7, Quality::kMin));
    CHECK(t.spans()[1].length() == doctest::Approx(0.1));
  }
}

TEST_CASE("frame_decode covers the segment") {
  auto rng = seeded_rng(84);
  ModelConfig cfg = tiny_config(Repr::kMerge);
  Model model(cfg, rng);
  Spectrogram spec = random_spec(cfg.input_frames, cfg.input_bins, rng);
  Timeline t = frame_decode(model, spec);
  CHECK(t.duration() == doctest::Approx(25.6));
  CHECK(t.spans().front().onset == 0);
  CHECK(t.spans().back().offset == doctest::Approx(25.6));
}

TEST_CASE("predict_song on one segment equals a single decode") {
  auto rng = seeded_rng(85);
  ModelConfig cfg = tiny_config(Repr::kSplit);
  Model model(cfg, rng);
  TokenSet ts(Repr::kSplit);
  Spectrogram song = random_spec(256, cfg.input_bins, rng);

  Timeline direct = decode(greedy_masked_decode(model, song, ts), ts);
  Timeline full = predict_song(model, song, 25.6, ts);
  CHECK(direct == full);
}

TEST_CASE("predict_song truncates to the true duration") {
  auto rng = seeded_rng(86);
  ModelConfig cfg = tiny_config(Repr::kSplit);
  Model model(cfg, rng);
  TokenSet ts(Repr::kSplit);
  // 29.0 s song: 290 frames, two windows, second mostly padding.
  Spectrogram song = random_spec(290, cfg.input_bins, rng);
  Timeline t = predict_song(model, song, 29.0, ts);
  CHECK(t.duration() == doctest::Approx(29.0));
  CHECK(t.spans().back().offset == doctest::Approx(29.0));
  // Timeline invariants hold on the stitched result.
  double cursor = 0;
  for (size_t i = 0; i < t.spans().size(); ++i) {
    CHECK(t.spans()[i].onset == doctest::Approx(cursor));
    if (i > 0) CHECK(t.spans()[i].chord != t.spans()[i - 1].chord);
    cursor = t.spans()[i].offset;
  }
}
