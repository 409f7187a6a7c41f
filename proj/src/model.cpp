#include "acr/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

#include "acr/kernels.hpp"
#include "acr/rng.hpp"
#include "acr/training.hpp"
#include "json.hpp"

// Gradient convention: every backward routine ACCUMULATES into its d-input
// output buffers and into the parameter .g buffers. Callers zero fresh
// buffers; aliased buffers (self-attention query/key/value inputs) then
// come out right for free.

namespace acr {

using kernels::gemm_nn;
using kernels::gemm_nt;
using kernels::gemm_tn;

namespace {

constexpr double kLnEps = 1e-5;

void add_inplace(Mat& a, const Mat& b) {
  double* pa = a.data();
  const double* pb = b.data();
  for (size_t i = 0; i < a.size(); ++i) pa[i] += pb[i];
}

void fill_sinusoidal(Mat& pe) {
  const int d = pe.cols();
  for (int pos = 0; pos < pe.rows(); ++pos) {
    for (int i = 0; i < d; i += 2) {
      double rate = std::pow(10000.0, -static_cast<double>(i) / d);
      pe(pos, i) = std::sin(pos * rate);
      if (i + 1 < d) pe(pos, i + 1) = std::cos(pos * rate);
    }
  }
}

void apply_dropout(Mat& x, detail::DropoutCache& cache, double p,
                   const RunMode& mode) {
  if (!mode.training || p <= 0) {
    cache.mask = Mat();
    return;
  }
  if (mode.rng == nullptr) {
    throw std::logic_error("training mode with dropout requires an rng");
  }
  cache.mask = Mat(x.rows(), x.cols());
  const double keep = 1.0 - p;
  const double scale = 1.0 / keep;
  double* m = cache.mask.data();
  double* v = x.data();
  for (size_t i = 0; i < x.size(); ++i) {
    m[i] = uniform_unit(*mode.rng) < keep ? scale : 0.0;
    v[i] *= m[i];
  }
}

void dropout_backward(const detail::DropoutCache& cache, const Mat& dy,
                      Mat& dx) {
  const double* m = cache.mask.empty() ? nullptr : cache.mask.data();
  const double* s = dy.data();
  double* d = dx.data();
  for (size_t i = 0; i < dy.size(); ++i) {
    d[i] = m ? s[i] * m[i] : s[i];
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (d_model <= 0 || n_heads <= 0 || n_enc <= 0 || n_dec <= 0 || ff_dim <= 0)
    throw std::invalid_argument("model dimensions must be positive");
  if (d_model % n_heads != 0)
    throw std::invalid_argument("d_model must be divisible by n_heads");
  if (vocab <= 3) throw std::invalid_argument("vocab too small");
  if (max_target_len <= 1 || input_bins <= 0 || input_frames <= 0)
    throw std::invalid_argument("sequence dimensions must be positive");
  if (dropout < 0 || dropout >= 1)
    throw std::invalid_argument("dropout must be in [0, 1)");
}

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

namespace detail {

void Linear::init(int in, int out, double scale, std::mt19937_64& rng) {
  weight.init(in, out);
  bias.init(1, out);
  double std_dev = scale / std::sqrt(static_cast<double>(in));
  for (size_t i = 0; i < weight.w.size(); ++i) {
    weight.w.data()[i] = std_dev * gaussian(rng);
  }
}

void Linear::forward(const Mat& x, Mat& y) const {
  y = Mat(x.rows(), weight.w.cols());
  gemm_nn(x.rows(), y.cols(), x.cols(), x.data(), x.cols(), weight.w.data(),
          y.cols(), y.data(), y.cols());
  const double* b = bias.w.data();
  for (int r = 0; r < y.rows(); ++r) {
    double* row = y.row(r);
    for (int c = 0; c < y.cols(); ++c) row[c] += b[c];
  }
}

void Linear::backward(const Mat& x, const Mat& dy, Mat* dx) {
  // dW += x^T dy, db += column sums of dy, dx += dy W^T.
  gemm_tn(x.cols(), dy.cols(), x.rows(), x.data(), x.cols(), dy.data(),
          dy.cols(), weight.g.data(), dy.cols(), /*accumulate=*/true);
  double* db = bias.g.data();
  for (int r = 0; r < dy.rows(); ++r) {
    const double* row = dy.row(r);
    for (int c = 0; c < dy.cols(); ++c) db[c] += row[c];
  }
  if (dx != nullptr) {
    gemm_nt(dy.rows(), x.cols(), dy.cols(), dy.data(), dy.cols(),
            weight.w.data(), dy.cols(), dx->data(), x.cols(),
            /*accumulate=*/true);
  }
}

void LayerNorm::init(int d) {
  gamma.init(1, d);
  beta.init(1, d);
  for (int i = 0; i < d; ++i) gamma.w(0, i) = 1.0;
}

void LayerNorm::forward(const Mat& x, Mat& y, LayerNormCache& cache) const {
  const int d = x.cols();
  y = Mat(x.rows(), d);
  cache.x = x;
  cache.mean.resize(static_cast<size_t>(x.rows()));
  cache.rstd.resize(static_cast<size_t>(x.rows()));
  const double* g = gamma.w.data();
  const double* b = beta.w.data();
  for (int r = 0; r < x.rows(); ++r) {
    const double* xi = x.row(r);
    double* yi = y.row(r);
    double mean = 0;
    for (int c = 0; c < d; ++c) mean += xi[c];
    mean /= d;
    double var = 0;
    for (int c = 0; c < d; ++c) var += (xi[c] - mean) * (xi[c] - mean);
    var /= d;
    double rstd = 1.0 / std::sqrt(var + kLnEps);
    cache.mean[static_cast<size_t>(r)] = mean;
    cache.rstd[static_cast<size_t>(r)] = rstd;
    for (int c = 0; c < d; ++c) {
      yi[c] = (xi[c] - mean) * rstd * g[c] + b[c];
    }
  }
}

void LayerNorm::backward(const LayerNormCache& cache, const Mat& dy, Mat& dx) {
  const int d = dy.cols();
  const double* g = gamma.w.data();
  double* dg = gamma.g.data();
  double* db = beta.g.data();
  for (int r = 0; r < dy.rows(); ++r) {
    const double* xi = cache.x.row(r);
    const double* dyi = dy.row(r);
    double* dxi = dx.row(r);
    double mean = cache.mean[static_cast<size_t>(r)];
    double rstd = cache.rstd[static_cast<size_t>(r)];

    double sum_dxhat = 0, sum_dxhat_xhat = 0;
    for (int c = 0; c < d; ++c) {
      double xhat = (xi[c] - mean) * rstd;
      double dxhat = dyi[c] * g[c];
      dg[c] += dyi[c] * xhat;
      db[c] += dyi[c];
      sum_dxhat += dxhat;
      sum_dxhat_xhat += dxhat * xhat;
    }
    for (int c = 0; c < d; ++c) {
      double xhat = (xi[c] - mean) * rstd;
      double dxhat = dyi[c] * g[c];
      dxi[c] += rstd * (dxhat - sum_dxhat / d - xhat * sum_dxhat_xhat / d);
    }
  }
}

void MultiHeadAttention::init(int d, int heads, std::mt19937_64& rng) {
  n_heads = heads;
  wq.init(d, d, 1.0, rng);
  wk.init(d, d, 1.0, rng);
  wv.init(d, d, 1.0, rng);
  wo.init(d, d, 1.0, rng);
}

void MultiHeadAttention::forward(const Mat& xq, const Mat& xkv, bool causal,
                                 Mat& y, AttentionCache& cache) const {
  const int d = xq.cols();
  const int dh = d / n_heads;
  const int tq = xq.rows();
  const int tk = xkv.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  cache.xq = xq;
  cache.xkv = xkv;
  wq.forward(xq, cache.q);
  wk.forward(xkv, cache.k);
  wv.forward(xkv, cache.v);
  cache.att.assign(static_cast<size_t>(n_heads), Mat());
  cache.concat = Mat(tq, d);

  for (int h = 0; h < n_heads; ++h) {
    const double* qh = cache.q.data() + h * dh;
    const double* kh = cache.k.data() + h * dh;
    const double* vh = cache.v.data() + h * dh;
    Mat& att = cache.att[static_cast<size_t>(h)];
    att = Mat(tq, tk);
    gemm_nt(tq, tk, dh, qh, d, kh, d, att.data(), tk);

    for (int i = 0; i < tq; ++i) {
      double* row = att.row(i);
      int limit = causal ? std::min(i + 1, tk) : tk;
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < limit; ++j) mx = std::max(mx, row[j] * scale);
      double sum = 0;
      for (int j = 0; j < limit; ++j) {
        row[j] = std::exp(row[j] * scale - mx);
        sum += row[j];
      }
      double inv = 1.0 / sum;
      for (int j = 0; j < limit; ++j) row[j] *= inv;
      for (int j = limit; j < tk; ++j) row[j] = 0.0;
    }

    gemm_nn(tq, dh, tk, att.data(), tk, vh, d,
            cache.concat.data() + h * dh, d);
  }
  wo.forward(cache.concat, y);
}

void MultiHeadAttention::backward(const AttentionCache& cache, bool causal,
                                  const Mat& dy, Mat& dxq, Mat& dxkv) {
  const int d = cache.q.cols();
  const int dh = d / n_heads;
  const int tq = cache.q.rows();
  const int tk = cache.k.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Mat d_concat(tq, d);
  wo.backward(cache.concat, dy, &d_concat);

  Mat dq(tq, d), dk(tk, d), dv(tk, d);
  Mat datt(tq, tk), ds(tq, tk);
  for (int h = 0; h < n_heads; ++h) {
    const double* vh = cache.v.data() + h * dh;
    const double* kh = cache.k.data() + h * dh;
    const double* qh = cache.q.data() + h * dh;
    const Mat& att = cache.att[static_cast<size_t>(h)];
    const double* doh = d_concat.data() + h * dh;

    // dA = dO V^T ; dV = A^T dO
    gemm_nt(tq, tk, dh, doh, d, vh, d, datt.data(), tk);
    gemm_tn(tk, dh, tq, att.data(), tk, doh, d, dv.data() + h * dh, d,
            /*accumulate=*/false);

    // Softmax backward: dS = A * (dA - rowsum(dA * A)), then the 1/sqrt(dh)
    // score scale. Masked positions carry A = 0 and drop out on their own.
    for (int i = 0; i < tq; ++i) {
      const double* arow = att.row(i);
      const double* darow = datt.row(i);
      double* dsrow = ds.row(i);
      double dot = 0;
      int limit = causal ? std::min(i + 1, tk) : tk;
      for (int j = 0; j < limit; ++j) dot += darow[j] * arow[j];
      for (int j = 0; j < limit; ++j) {
        dsrow[j] = arow[j] * (darow[j] - dot) * scale;
      }
      for (int j = limit; j < tk; ++j) dsrow[j] = 0.0;
    }

    // dQ = dS K ; dK = dS^T Q
    gemm_nn(tq, dh, tk, ds.data(), tk, kh, d, dq.data() + h * dh, d);
    gemm_tn(tk, dh, tq, ds.data(), tk, qh, d, dk.data() + h * dh, d,
            /*accumulate=*/false);
  }

  wq.backward(cache.xq, dq, &dxq);
  wk.backward(cache.xkv, dk, &dxkv);
  wv.backward(cache.xkv, dv, &dxkv);
}

void FeedForward::init(int d, int ff, std::mt19937_64& rng) {
  in.init(d, ff, 1.0, rng);
  out.init(ff, d, 1.0, rng);
}

void FeedForward::forward(const Mat& x, Mat& y, FeedForwardCache& cache) const {
  cache.x = x;
  in.forward(x, cache.hidden_pre);
  cache.hidden = cache.hidden_pre;
  for (size_t i = 0; i < cache.hidden.size(); ++i) {
    cache.hidden.data()[i] = std::max(0.0, cache.hidden.data()[i]);
  }
  out.forward(cache.hidden, y);
}

void FeedForward::backward(const FeedForwardCache& cache, const Mat& dy,
                           Mat& dx) {
  Mat dh(cache.hidden.rows(), cache.hidden.cols());
  out.backward(cache.hidden, dy, &dh);
  for (size_t i = 0; i < dh.size(); ++i) {
    if (cache.hidden_pre.data()[i] <= 0) dh.data()[i] = 0;
  }
  in.backward(cache.x, dh, &dx);
}

void EncoderLayer::init(int d, int heads, int ff_dim, std::mt19937_64& rng) {
  ln1.init(d);
  ln2.init(d);
  att.init(d, heads, rng);
  ff.init(d, ff_dim, rng);
}

void DecoderLayer::init(int d, int heads, int ff_dim, std::mt19937_64& rng) {
  ln1.init(d);
  ln2.init(d);
  ln3.init(d);
  self_att.init(d, heads, rng);
  cross_att.init(d, heads, rng);
  ff.init(d, ff_dim, rng);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

Model::Model(const ModelConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
  cfg_.validate();
  input_proj_.init(cfg.input_bins, cfg.d_model, 1.0, rng);
  enc_pos_ = Mat(cfg.input_frames, cfg.d_model);
  fill_sinusoidal(enc_pos_);
  enc_layers_.resize(static_cast<size_t>(cfg.n_enc));
  for (auto& l : enc_layers_) l.init(cfg.d_model, cfg.n_heads, cfg.ff_dim, rng);
  enc_final_ln_.init(cfg.d_model);

  embedding_.init(cfg.vocab, cfg.d_model);
  for (size_t i = 0; i < embedding_.w.size(); ++i) {
    embedding_.w.data()[i] = 0.02 * gaussian(rng);
  }
  // Time tokens carry absolute positions on the same 0.1 s grid as the
  // encoder frames. Starting their embeddings at the matching sinusoidal
  // code gives cross-attention an alignment signal from step one; the rows
  // stay trainable. Both token sets place Time(k) at id kTimeBase + k.
  if (cfg.vocab >= TokenSet::kEventBase) {
    Mat time_codes(kNumTimeTokens, cfg.d_model);
    fill_sinusoidal(time_codes);
    for (int k = 0; k < kNumTimeTokens; ++k) {
      std::copy(time_codes.row(k), time_codes.row(k) + cfg.d_model,
                embedding_.w.row(TokenSet::kTimeBase + k));
    }
  }
  dec_pos_ = Mat(cfg.max_target_len, cfg.d_model);
  fill_sinusoidal(dec_pos_);
  dec_layers_.resize(static_cast<size_t>(cfg.n_dec));
  for (auto& l : dec_layers_) l.init(cfg.d_model, cfg.n_heads, cfg.ff_dim, rng);
  dec_final_ln_.init(cfg.d_model);
  out_proj_.init(cfg.d_model, cfg.vocab, 1.0, rng);

  frame_head_.init(cfg.d_model, kFrameVocab, 1.0, rng);
}

Mat Model::encoder_forward(const Spectrogram& spec, EncoderCache& cache,
                           const RunMode& mode) const {
  if (spec.frames != cfg_.input_frames || spec.bins != cfg_.input_bins) {
    throw std::invalid_argument(
        "spectrogram shape mismatch: got " + std::to_string(spec.frames) +
        "x" + std::to_string(spec.bins) + ", expected " +
        std::to_string(cfg_.input_frames) + "x" +
        std::to_string(cfg_.input_bins));
  }
  cache.input = Mat(spec.frames, spec.bins);
  std::copy(spec.values.begin(), spec.values.end(), cache.input.data());

  input_proj_.forward(cache.input, cache.x0);
  add_inplace(cache.x0, enc_pos_);
  apply_dropout(cache.x0, cache.drop_in, cfg_.dropout, mode);

  cache.layers.resize(enc_layers_.size());
  cache.stream.assign(enc_layers_.size() + 1, Mat());
  cache.stream[0] = cache.x0;

  for (size_t l = 0; l < enc_layers_.size(); ++l) {
    const auto& layer = enc_layers_[l];
    auto& lc = cache.layers[l];
    const Mat& x = cache.stream[l];

    Mat normed, att_out;
    layer.ln1.forward(x, normed, lc.ln1);
    layer.att.forward(normed, normed, /*causal=*/false, att_out, lc.att);
    apply_dropout(att_out, lc.drop1, cfg_.dropout, mode);
    lc.after_att = x;
    add_inplace(lc.after_att, att_out);

    Mat normed2, ff_out;
    layer.ln2.forward(lc.after_att, normed2, lc.ln2);
    layer.ff.forward(normed2, ff_out, lc.ff);
    apply_dropout(ff_out, lc.drop2, cfg_.dropout, mode);
    cache.stream[l + 1] = lc.after_att;
    add_inplace(cache.stream[l + 1], ff_out);
  }

  Mat states;
  enc_final_ln_.forward(cache.stream.back(), states, cache.final_ln);
  return states;
}

void Model::encoder_backward(const EncoderCache& cache, const Mat& d_states) {
  Mat dx(d_states.rows(), d_states.cols());
  enc_final_ln_.backward(cache.final_ln, d_states, dx);

  for (size_t l = enc_layers_.size(); l-- > 0;) {
    auto& layer = enc_layers_[l];
    const auto& lc = cache.layers[l];

    // out = after_att + drop2(ff(ln2(after_att)))
    Mat d_ff(dx.rows(), dx.cols());
    dropout_backward(lc.drop2, dx, d_ff);
    Mat d_normed2(dx.rows(), dx.cols());
    layer.ff.backward(lc.ff, d_ff, d_normed2);
    layer.ln2.backward(lc.ln2, d_normed2, dx);  // accumulates residual path

    // after_att = x + drop1(att(ln1(x)))
    Mat d_att(dx.rows(), dx.cols());
    dropout_backward(lc.drop1, dx, d_att);
    Mat d_normed(dx.rows(), dx.cols());
    layer.att.backward(lc.att, /*causal=*/false, d_att, d_normed, d_normed);
    layer.ln1.backward(lc.ln1, d_normed, dx);
  }

  Mat d_x0(dx.rows(), dx.cols());
  dropout_backward(cache.drop_in, dx, d_x0);
  input_proj_.backward(cache.input, d_x0, nullptr);
}

Mat Model::decoder_forward(std::span<const int> tokens, const Mat& enc_states,
                           DecoderCache& cache, const RunMode& mode) const {
  const int len = static_cast<int>(tokens.size());
  if (len == 0 || len > cfg_.max_target_len) {
    throw std::invalid_argument("decoder prefix length out of range");
  }
  for (int id : tokens) {
    if (id < 0 || id >= cfg_.vocab) {
      throw std::invalid_argument("token id out of vocabulary: " +
                                  std::to_string(id));
    }
  }
  cache.tokens.assign(tokens.begin(), tokens.end());
  cache.enc_states = &enc_states;

  cache.x0 = Mat(len, cfg_.d_model);
  for (int r = 0; r < len; ++r) {
    const double* emb = embedding_.w.row(tokens[static_cast<size_t>(r)]);
    const double* pos = dec_pos_.row(r);
    double* dst = cache.x0.row(r);
    for (int c = 0; c < cfg_.d_model; ++c) dst[c] = emb[c] + pos[c];
  }
  apply_dropout(cache.x0, cache.drop_in, cfg_.dropout, mode);

  cache.layers.resize(dec_layers_.size());
  cache.stream.assign(dec_layers_.size() + 1, Mat());
  cache.stream[0] = cache.x0;

  for (size_t l = 0; l < dec_layers_.size(); ++l) {
    const auto& layer = dec_layers_[l];
    auto& lc = cache.layers[l];
    const Mat& x = cache.stream[l];

    Mat normed, att_out;
    layer.ln1.forward(x, normed, lc.ln1);
    layer.self_att.forward(normed, normed, /*causal=*/true, att_out, lc.self_att);
    apply_dropout(att_out, lc.drop1, cfg_.dropout, mode);
    lc.after_self = x;
    add_inplace(lc.after_self, att_out);

    Mat normed2, cross_out;
    layer.ln2.forward(lc.after_self, normed2, lc.ln2);
    layer.cross_att.forward(normed2, enc_states, /*causal=*/false, cross_out,
                            lc.cross_att);
    apply_dropout(cross_out, lc.drop2, cfg_.dropout, mode);
    lc.after_cross = lc.after_self;
    add_inplace(lc.after_cross, cross_out);

    Mat normed3, ff_out;
    layer.ln3.forward(lc.after_cross, normed3, lc.ln3);
    layer.ff.forward(normed3, ff_out, lc.ff);
    apply_dropout(ff_out, lc.drop3, cfg_.dropout, mode);
    cache.stream[l + 1] = lc.after_cross;
    add_inplace(cache.stream[l + 1], ff_out);
  }

  dec_final_ln_.forward(cache.stream.back(), cache.final_out, cache.final_ln);
  Mat logits;
  out_proj_.forward(cache.final_out, logits);
  return logits;
}

void Model::decoder_backward(const DecoderCache& cache, const Mat& d_logits,
                             Mat& d_enc) {
  Mat d_final(cache.final_out.rows(), cache.final_out.cols());
  out_proj_.backward(cache.final_out, d_logits, &d_final);

  Mat dx(d_final.rows(), d_final.cols());
  dec_final_ln_.backward(cache.final_ln, d_final, dx);

  for (size_t l = dec_layers_.size(); l-- > 0;) {
    auto& layer = dec_layers_[l];
    const auto& lc = cache.layers[l];

    Mat d_ff(dx.rows(), dx.cols());
    dropout_backward(lc.drop3, dx, d_ff);
    Mat d_normed3(dx.rows(), dx.cols());
    layer.ff.backward(lc.ff, d_ff, d_normed3);
    layer.ln3.backward(lc.ln3, d_normed3, dx);

    Mat d_cross(dx.rows(), dx.cols());
    dropout_backward(lc.drop2, dx, d_cross);
    Mat d_normed2(dx.rows(), dx.cols());
    layer.cross_att.backward(lc.cross_att, /*causal=*/false, d_cross,
                             d_normed2, d_enc);
    layer.ln2.backward(lc.ln2, d_normed2, dx);

    Mat d_self(dx.rows(), dx.cols());
    dropout_backward(lc.drop1, dx, d_self);
    Mat d_normed(dx.rows(), dx.cols());
    layer.self_att.backward(lc.self_att, /*causal=*/true, d_self, d_normed,
                            d_normed);
    layer.ln1.backward(lc.ln1, d_normed, dx);
  }

  Mat d_x0(dx.rows(), dx.cols());
  dropout_backward(cache.drop_in, dx, d_x0);
  for (size_t r = 0; r < cache.tokens.size(); ++r) {
    double* grow = embedding_.g.row(cache.tokens[r]);
    const double* drow = d_x0.row(static_cast<int>(r));
    for (int c = 0; c < cfg_.d_model; ++c) grow[c] += drow[c];
  }
}

Mat Model::frame_forward(const Mat& enc_states) const {
  Mat logits;
  frame_head_.forward(enc_states, logits);
  return logits;
}

void Model::frame_backward(const Mat& enc_states, const Mat& d_logits,
                           Mat& d_enc) {
  frame_head_.backward(enc_states, d_logits, &d_enc);
}

Mat Model::forward_encoder(const Spectrogram& spec) const {
  EncoderCache cache;
  return encoder_forward(spec, cache, RunMode{});
}

Mat Model::forward_decoder(std::span<const int> prefix,
                           const Mat& enc_states) const {
  DecoderCache cache;
  return decoder_forward(prefix, enc_states, cache, RunMode{});
}

Mat Model::frame_classify(const Mat& enc_states) const {
  return frame_forward(enc_states);
}

std::vector<double> Model::pool_embedding(const Mat& states) {
  std::vector<double> out(static_cast<size_t>(states.cols()), 0.0);
  for (int r = 0; r < states.rows(); ++r) {
    const double* row = states.row(r);
    for (int c = 0; c < states.cols(); ++c) out[static_cast<size_t>(c)] += row[c];
  }
  for (auto& v : out) v /= std::max(1, states.rows());
  return out;
}

// ---------------------------------------------------------------------------
// Parameter registry
// ---------------------------------------------------------------------------

std::vector<Model::NamedParam> Model::encoder_parameters() {
  std::vector<NamedParam> out;
  out.push_back({"input_proj.w", &input_proj_.weight});
  out.push_back({"input_proj.b", &input_proj_.bias});
  for (size_t l = 0; l < enc_layers_.size(); ++l) {
    auto& el = enc_layers_[l];
    std::string p = "enc." + std::to_string(l) + ".";
    out.push_back({p + "ln1.g", &el.ln1.gamma});
    out.push_back({p + "ln1.b", &el.ln1.beta});
    out.push_back({p + "att.wq.w", &el.att.wq.weight});
    out.push_back({p + "att.wq.b", &el.att.wq.bias});
    out.push_back({p + "att.wk.w", &el.att.wk.weight});
    out.push_back({p + "att.wk.b", &el.att.wk.bias});
    out.push_back({p + "att.wv.w", &el.att.wv.weight});
    out.push_back({p + "att.wv.b", &el.att.wv.bias});
    out.push_back({p + "att.wo.w", &el.att.wo.weight});
    out.push_back({p + "att.wo.b", &el.att.wo.bias});
    out.push_back({p + "ln2.g", &el.ln2.gamma});
    out.push_back({p + "ln2.b", &el.ln2.beta});
    out.push_back({p + "ff.in.w", &el.ff.in.weight});
    out.push_back({p + "ff.in.b", &el.ff.in.bias});
    out.push_back({p + "ff.out.w", &el.ff.out.weight});
    out.push_back({p + "ff.out.b", &el.ff.out.bias});
  }
  out.push_back({"enc_final_ln.g", &enc_final_ln_.gamma});
  out.push_back({"enc_final_ln.b", &enc_final_ln_.beta});
  return out;
}

std::vector<Model::NamedParam> Model::decoder_parameters() {
  std::vector<NamedParam> out;
  out.push_back({"embedding", &embedding_});
  for (size_t l = 0; l < dec_layers_.size(); ++l) {
    auto& dl = dec_layers_[l];
    std::string p = "dec." + std::to_string(l) + ".";
    auto add_attn = [&](const std::string& name,
                        detail::MultiHeadAttention& att) {
      out.push_back({p + name + ".wq.w", &att.wq.weight});
      out.push_back({p + name + ".wq.b", &att.wq.bias});
      out.push_back({p + name + ".wk.w", &att.wk.weight});
      out.push_back({p + name + ".wk.b", &att.wk.bias});
      out.push_back({p + name + ".wv.w", &att.wv.weight});
      out.push_back({p + name + ".wv.b", &att.wv.bias});
      out.push_back({p + name + ".wo.w", &att.wo.weight});
      out.push_back({p + name + ".wo.b", &att.wo.bias});
    };
    out.push_back({p + "ln1.g", &dl.ln1.gamma});
    out.push_back({p + "ln1.b", &dl.ln1.beta});
    add_attn("self", dl.self_att);
    out.push_back({p + "ln2.g", &dl.ln2.gamma});
    out.push_back({p + "ln2.b", &dl.ln2.beta});
    add_attn("cross", dl.cross_att);
    out.push_back({p + "ln3.g", &dl.ln3.gamma});
    out.push_back({p + "ln3.b", &dl.ln3.beta});
    out.push_back({p + "ff.in.w", &dl.ff.in.weight});
    out.push_back({p + "ff.in.b", &dl.ff.in.bias});
    out.push_back({p + "ff.out.w", &dl.ff.out.weight});
    out.push_back({p + "ff.out.b", &dl.ff.out.bias});
  }
  out.push_back({"dec_final_ln.g", &dec_final_ln_.gamma});
  out.push_back({"dec_final_ln.b", &dec_final_ln_.beta});
  out.push_back({"out_proj.w", &out_proj_.weight});
  out.push_back({"out_proj.b", &out_proj_.bias});
  return out;
}

std::vector<Model::NamedParam> Model::frame_head_parameters() {
  return {{"frame_head.w", &frame_head_.weight},
          {"frame_head.b", &frame_head_.bias}};
}

std::vector<Model::NamedParam> Model::parameters() {
  auto out = encoder_parameters();
  auto dec = decoder_parameters();
  out.insert(out.end(), dec.begin(), dec.end());
  auto fh = frame_head_parameters();
  out.insert(out.end(), fh.begin(), fh.end());
  return out;
}

void Model::zero_grad() {
  for (auto& np : parameters()) np.param->g.zero();
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

constexpr char kCkptMagic[8] = {'A', 'C', 'R', 'C', 'K', 'P', 'T', '1'};

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"d_model", c.d_model},   {"n_heads", c.n_heads},
          {"n_enc", c.n_enc},       {"n_dec", c.n_dec},
          {"ff_dim", c.ff_dim},     {"dropout", c.dropout},
          {"vocab", c.vocab},       {"max_target_len", c.max_target_len},
          {"input_bins", c.input_bins}, {"input_frames", c.input_frames}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.d_model = j.at("d_model");
  c.n_heads = j.at("n_heads");
  c.n_enc = j.at("n_enc");
  c.n_dec = j.at("n_dec");
  c.ff_dim = j.at("ff_dim");
  c.dropout = j.at("dropout");
  c.vocab = j.at("vocab");
  c.max_target_len = j.at("max_target_len");
  c.input_bins = j.at("input_bins");
  c.input_frames = j.at("input_frames");
  return c;
}

void write_block(std::ostream& out, const Mat& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void read_block(std::istream& in, Mat& m) {
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(m.size() * sizeof(double)));
}

}  // namespace

void save_checkpoint(const std::string& path, Model& model,
                     const CheckpointMeta& meta, const Adam* optimizer) {
  auto params = model.parameters();
  nlohmann::json header;
  header["config"] = config_to_json(model.config());
  header["repr"] = std::string(repr_name(meta.repr));
  header["fingerprint"] = meta.tokenset_fingerprint;
  header["frame_task"] = meta.frame_task;
  header["has_optimizer"] = optimizer != nullptr;
  if (optimizer != nullptr) header["adam_step"] = optimizer->step_count();
  auto& plist = header["params"] = nlohmann::json::array();
  for (const auto& np : params) {
    plist.push_back({{"name", np.name},
                     {"rows", np.param->w.rows()},
                     {"cols", np.param->w.cols()}});
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(kCkptMagic, 8);
  std::string hs = header.dump();
  uint64_t len = hs.size();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& np : params) write_block(out, np.param->w);
  if (optimizer != nullptr) {
    for (size_t i = 0; i < params.size(); ++i) {
      write_block(out, optimizer->moment1(i));
      write_block(out, optimizer->moment2(i));
    }
  }
  if (!out) throw std::runtime_error("short checkpoint write: " + path);
}

LoadedModel load_checkpoint(const std::string& path,
                            uint64_t expected_fingerprint, Adam* optimizer) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCkptMagic, 8) != 0) {
    throw std::runtime_error("bad checkpoint magic: " + path);
  }
  uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 8);
  std::string hs(len, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("truncated checkpoint header: " + path);
  nlohmann::json header = nlohmann::json::parse(hs);

  LoadedModel out;
  out.meta.tokenset_fingerprint = header.at("fingerprint");
  out.meta.frame_task = header.value("frame_task", false);
  auto repr = repr_from_name(header.at("repr").get<std::string>());
  if (!repr) throw std::runtime_error("bad checkpoint repr: " + path);
  out.meta.repr = *repr;

  if (expected_fingerprint != 0 &&
      expected_fingerprint != out.meta.tokenset_fingerprint) {
    throw std::runtime_error(
        "checkpoint token set does not match the requested representation: " +
        path);
  }

  ModelConfig cfg = config_from_json(header.at("config"));
  std::mt19937_64 rng(0);  // immediately overwritten by the stored weights
  out.model = std::make_unique<Model>(cfg, rng);
  auto params = out.model->parameters();

  const auto& plist = header.at("params");
  if (plist.size() != params.size()) {
    throw std::runtime_error("checkpoint parameter table mismatch: " + path);
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& pj = plist[i];
    if (pj.at("name") != params[i].name ||
        pj.at("rows") != params[i].param->w.rows() ||
        pj.at("cols") != params[i].param->w.cols()) {
      throw std::runtime_error("checkpoint parameter mismatch at " +
                               params[i].name);
    }
  }
  for (auto& np : params) read_block(in, np.param->w);
  if (!in) throw std::runtime_error("truncated checkpoint blocks: " + path);

  if (optimizer != nullptr) {
    if (!header.value("has_optimizer", false)) {
      throw std::runtime_error("checkpoint holds no optimizer state: " + path);
    }
    optimizer->restore(header.at("adam_step").get<long>(), in, params.size());
  }
  return out;
}

void load_encoder_weights(const std::string& path, Model& model) {
  LoadedModel loaded = load_checkpoint(path);
  auto src = loaded.model->encoder_parameters();
  auto dst = model.encoder_parameters();
  if (src.size() != dst.size()) {
    throw std::runtime_error("encoder structure mismatch loading " + path);
  }
  for (size_t i = 0; i < src.size(); ++i) {
    if (src[i].name != dst[i].name ||
        src[i].param->w.rows() != dst[i].param->w.rows() ||
        src[i].param->w.cols() != dst[i].param->w.cols()) {
      throw std::runtime_error("encoder parameter mismatch at " + src[i].name);
    }
    dst[i].param->w = src[i].param->w;
  }
}

}  // namespace acr
