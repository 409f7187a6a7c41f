// Transformer encoder-decoder for spectrogram -> token prediction, the
// pooled-embedding head used by similarity pre-training, and the per-frame
// classification head for the encoder-only baseline.
//
// Forward and backward passes are written out explicitly in double
// precision; gradients accumulate into each parameter's .g buffer and are
// validated against central finite differences in the test suite.
#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "acr/features.hpp"
#include "acr/tokenizer.hpp"

namespace acr {

struct ModelConfig {
  int d_model = 256;
  int n_heads = 4;
  int n_enc = 4;
  int n_dec = 4;
  int ff_dim = 512;
  double dropout = 0.2;
  int vocab = 430;
  int max_target_len = 515;
  int input_bins = kNumBins;
  int input_frames = kFramesPerSegment;

  void validate() const;
  static int grammar_max_len(Repr r) {
    return r == Repr::kMerge ? 2 * kNumTimeTokens + 1 : 3 * kNumTimeTokens + 3;
  }
  static ModelConfig for_repr(Repr r) {
    ModelConfig c;
    c.vocab = static_cast<int>(TokenSet(r).size());
    c.max_target_len = r == Repr::kMerge ? 515 : 771;
    return c;
  }
};

// Row-major matrix of doubles.
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols)
      : rows_(rows), cols_(cols),
        v_(static_cast<size_t>(rows) * cols, 0.0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  double* row(int r) { return v_.data() + static_cast<size_t>(r) * cols_; }
  const double* row(int r) const {
    return v_.data() + static_cast<size_t>(r) * cols_;
  }
  double& operator()(int r, int c) {
    return v_[static_cast<size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    return v_[static_cast<size_t>(r) * cols_ + c];
  }
  void zero() { std::fill(v_.begin(), v_.end(), 0.0); }
  bool empty() const { return v_.empty(); }
  size_t size() const { return v_.size(); }

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> v_;
};

struct Param {
  Mat w;
  Mat g;  // same shape, accumulated by backward passes

  void init(int rows, int cols) {
    w = Mat(rows, cols);
    g = Mat(rows, cols);
  }
};

struct RunMode {
  bool training = false;
  std::mt19937_64* rng = nullptr;  // required when training with dropout > 0
};

namespace detail {

struct Linear {
  Param weight;  // [in, out]
  Param bias;    // [1, out]

  void init(int in, int out, double scale, std::mt19937_64& rng);
  void forward(const Mat& x, Mat& y) const;
  // dx may be null when the input gradient is not needed.
  void backward(const Mat& x, const Mat& dy, Mat* dx);
};

struct LayerNormCache {
  Mat x;
  std::vector<double> rstd;
  std::vector<double> mean;
};

struct LayerNorm {
  Param gamma;  // [1, d]
  Param beta;   // [1, d]

  void init(int d);
  void forward(const Mat& x, Mat& y, LayerNormCache& cache) const;
  void backward(const LayerNormCache& cache, const Mat& dy, Mat& dx);
};

struct DropoutCache {
  Mat mask;  // empty in eval mode
};

struct AttentionCache {
  Mat xq, xkv;           // layer inputs
  Mat q, k, v;           // [Tq,d], [Tk,d], [Tk,d]
  std::vector<Mat> att;  // per head, [Tq, Tk] post-softmax
  Mat concat;            // [Tq, d]
};

struct MultiHeadAttention {
  Linear wq, wk, wv, wo;
  int n_heads = 1;

  void init(int d, int heads, std::mt19937_64& rng);
  void forward(const Mat& xq, const Mat& xkv, bool causal, Mat& y,
               AttentionCache& cache) const;
  // Accumulates input gradients into dxq/dxkv (they may alias for
  // self-attention; both must be pre-sized and may hold prior gradient).
  void backward(const AttentionCache& cache, bool causal, const Mat& dy,
                Mat& dxq, Mat& dxkv);
};

struct FeedForwardCache {
  Mat x;
  Mat hidden_pre;  // before ReLU
  Mat hidden;
};

struct FeedForward {
  Linear in, out;

  void init(int d, int ff, std::mt19937_64& rng);
  void forward(const Mat& x, Mat& y, FeedForwardCache& cache) const;
  void backward(const FeedForwardCache& cache, const Mat& dy, Mat& dx);
};

struct EncoderLayerCache {
  LayerNormCache ln1, ln2;
  AttentionCache att;
  FeedForwardCache ff;
  DropoutCache drop1, drop2;
  Mat after_att;  // residual stream between the two sublayers
};

struct EncoderLayer {
  LayerNorm ln1, ln2;
  MultiHeadAttention att;
  FeedForward ff;

  void init(int d, int heads, int ff_dim, std::mt19937_64& rng);
};

struct DecoderLayerCache {
  LayerNormCache ln1, ln2, ln3;
  AttentionCache self_att, cross_att;
  FeedForwardCache ff;
  DropoutCache drop1, drop2, drop3;
  Mat after_self, after_cross;
};

struct DecoderLayer {
  LayerNorm ln1, ln2, ln3;
  MultiHeadAttention self_att, cross_att;
  FeedForward ff;

  void init(int d, int heads, int ff_dim, std::mt19937_64& rng);
};

}  // namespace detail

struct EncoderCache {
  Mat input;      // [frames, bins]
  Mat x0;         // after projection + positional encoding (+ dropout)
  detail::DropoutCache drop_in;
  std::vector<detail::EncoderLayerCache> layers;
  std::vector<Mat> stream;  // layer inputs
  detail::LayerNormCache final_ln;
};

struct DecoderCache {
  std::vector<int> tokens;
  Mat x0;
  detail::DropoutCache drop_in;
  std::vector<detail::DecoderLayerCache> layers;
  std::vector<Mat> stream;
  detail::LayerNormCache final_ln;
  Mat final_out;        // input to the output projection
  const Mat* enc_states = nullptr;
};

class Model {
 public:
  Model(const ModelConfig& cfg, std::mt19937_64& rng);

  const ModelConfig& config() const { return cfg_; }

  // --- training-facing per-sample passes -------------------------------
  Mat encoder_forward(const Spectrogram& spec, EncoderCache& cache,
                      const RunMode& mode) const;
  // d_states: gradient w.r.t. the encoder output. Accumulates into grads.
  void encoder_backward(const EncoderCache& cache, const Mat& d_states);

  // Causal decoder over a token prefix; rows are next-token logits.
  Mat decoder_forward(std::span<const int> tokens, const Mat& enc_states,
                      DecoderCache& cache, const RunMode& mode) const;
  // Returns gradient w.r.t. the encoder states via d_enc (accumulated).
  void decoder_backward(const DecoderCache& cache, const Mat& d_logits,
                        Mat& d_enc);

  Mat frame_forward(const Mat& enc_states) const;  // [frames, 170]
  void frame_backward(const Mat& enc_states, const Mat& d_logits, Mat& d_enc);

  // --- evaluation-mode contract operations ------------------------------
  Mat forward_encoder(const Spectrogram& spec) const;
  Mat forward_decoder(std::span<const int> prefix, const Mat& enc_states) const;
  Mat frame_classify(const Mat& enc_states) const;
  static std::vector<double> pool_embedding(const Mat& states);  // time mean

  // --- parameter access --------------------------------------------------
  struct NamedParam {
    std::string name;
    Param* param;
  };
  std::vector<NamedParam> parameters();        // all
  std::vector<NamedParam> encoder_parameters();  // encoder + input projection
  std::vector<NamedParam> decoder_parameters();
  std::vector<NamedParam> frame_head_parameters();
  void zero_grad();

  static constexpr int kFrameVocab = Chord::kVocabSize;

 private:
  friend struct ModelIo;

  ModelConfig cfg_;

  detail::Linear input_proj_;
  Mat enc_pos_;  // [input_frames, d_model]
  std::vector<detail::EncoderLayer> enc_layers_;
  detail::LayerNorm enc_final_ln_;

  Param embedding_;  // [vocab, d_model]
  Mat dec_pos_;      // [max_target_len, d_model]
  std::vector<detail::DecoderLayer> dec_layers_;
  detail::LayerNorm dec_final_ln_;
  detail::Linear out_proj_;

  detail::Linear frame_head_;
};

// Checkpoint container: versioned header (config + token-set fingerprint +
// parameter table) followed by little-endian float64 parameter blocks, then
// optional Adam state blocks. Save/load round-trips bit-exactly.
struct CheckpointMeta {
  Repr repr = Repr::kMerge;
  uint64_t tokenset_fingerprint = 0;
  bool frame_task = false;
};

class Adam;  // training.hpp

void save_checkpoint(const std::string& path, Model& model,
                     const CheckpointMeta& meta, const Adam* optimizer = nullptr);

struct LoadedModel {
  std::unique_ptr<Model> model;
  CheckpointMeta meta;
};

// Rebuilds the model stored at path. Fails if expected_fingerprint is
// nonzero and does not match the stored token-set fingerprint.
LoadedModel load_checkpoint(const std::string& path,
                            uint64_t expected_fingerprint = 0,
                            Adam* optimizer = nullptr);

// Copies encoder (+ input projection) parameters from a checkpoint into an
// existing model; shapes must match.
void load_encoder_weights(const std::string& path, Model& model);

}  // namespace acr
