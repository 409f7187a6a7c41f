#include "acr/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>

#include "acr/decode.hpp"
#include "acr/rng.hpp"
#include "json.hpp"

namespace acr {

void TrainConfig::validate() const {
  if (batch_size <= 0) throw std::invalid_argument("batch_size must be > 0");
  if (initial_lr <= 0) throw std::invalid_argument("initial_lr must be > 0");
  if (lr_halving_patience <= 0 || early_stop_patience <= 0) {
    throw std::invalid_argument("patiences must be positive");
  }
  if (max_epochs <= 0) throw std::invalid_argument("max_epochs must be > 0");
  if (pitch_shift_range < 0 || pitch_shift_range > 5) {
    throw std::invalid_argument("pitch_shift_range must be in 0..5");
  }
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

Adam::Adam(std::vector<Model::NamedParam> params, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& np : params_) {
    m_.emplace_back(np.param->w.rows(), np.param->w.cols());
    v_.emplace_back(np.param->w.rows(), np.param->w.cols());
  }
}

void Adam::step(double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t p = 0; p < params_.size(); ++p) {
    double* w = params_[p].param->w.data();
    const double* g = params_[p].param->g.data();
    double* m = m_[p].data();
    double* v = v_[p].data();
    const size_t n = params_[p].param->w.size();
    for (size_t i = 0; i < n; ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (auto& np : params_) np.param->g.zero();
}

void Adam::restore(long step, std::istream& in, size_t n_params) {
  if (n_params != params_.size()) {
    throw std::runtime_error("optimizer state size mismatch");
  }
  t_ = step;
  for (size_t p = 0; p < params_.size(); ++p) {
    in.read(reinterpret_cast<char*>(m_[p].data()),
            static_cast<std::streamsize>(m_[p].size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(v_[p].data()),
            static_cast<std::streamsize>(v_[p].size() * sizeof(double)));
  }
  if (!in) throw std::runtime_error("truncated optimizer state");
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

namespace {

// Softmax cross-entropy over the given rows. Returns total loss and writes
// (softmax - onehot) into d_logits rows; rows with target < 0 are skipped.
double ce_rows(const Mat& logits, std::span<const int> targets, Mat& d_logits,
               long& valid_count) {
  double total = 0;
  for (int r = 0; r < logits.rows(); ++r) {
    int target = targets[static_cast<size_t>(r)];
    double* drow = d_logits.row(r);
    if (target < 0) {
      std::fill(drow, drow + logits.cols(), 0.0);
      continue;
    }
    const double* row = logits.row(r);
    double mx = row[0];
    for (int c = 1; c < logits.cols(); ++c) mx = std::max(mx, row[c]);
    double sum = 0;
    for (int c = 0; c < logits.cols(); ++c) {
      drow[c] = std::exp(row[c] - mx);
      sum += drow[c];
    }
    double inv = 1.0 / sum;
    for (int c = 0; c < logits.cols(); ++c) drow[c] *= inv;
    total -= std::log(std::max(drow[target], 1e-300));
    drow[target] -= 1.0;
    ++valid_count;
  }
  return total;
}

// Trims a padded token sequence to SOS..EOS and splits into decoder input
// and per-position targets (PAD positions get target -1).
struct TeacherForced {
  std::vector<int> input;
  std::vector<int> targets;
};

TeacherForced teacher_forced(const std::vector<int>& tokens, int max_len) {
  if (tokens.size() < 2 || tokens.front() != TokenSet::kSos) {
    throw std::invalid_argument("token sequence must start with SOS");
  }
  if (static_cast<int>(tokens.size()) > max_len) {
    throw std::invalid_argument("token sequence exceeds max_target_len");
  }
  size_t end = tokens.size();  // one past EOS
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == TokenSet::kEos) {
      end = i + 1;
      break;
    }
  }
  TeacherForced tf;
  tf.input.assign(tokens.begin(), tokens.begin() + (end - 1));
  tf.targets.assign(tokens.begin() + 1, tokens.begin() + end);
  return tf;
}

double run_sequence_batch(Model& model, std::span<const TokenBatchItem> batch,
                          std::mt19937_64* rng, bool with_grad) {
  RunMode mode{rng != nullptr, rng};
  double total = 0;
  long count = 0;

  struct SampleState {
    EncoderCache enc_cache;
    DecoderCache dec_cache;
    Mat enc_states;
    Mat logits;
    TeacherForced tf;
  };
  std::vector<SampleState> states(batch.size());

  for (size_t s = 0; s < batch.size(); ++s) {
    auto& st = states[s];
    st.tf = teacher_forced(batch[s].tokens, model.config().max_target_len);
    st.enc_states = model.encoder_forward(batch[s].spec, st.enc_cache, mode);
    st.logits = model.decoder_forward(st.tf.input, st.enc_states,
                                      st.dec_cache, mode);
  }

  // First pass fixes the PAD-excluded position count so every sample's
  // gradient carries the same 1/count scale.
  std::vector<Mat> dlogits(batch.size());
  for (size_t s = 0; s < batch.size(); ++s) {
    auto& st = states[s];
    dlogits[s] = Mat(st.logits.rows(), st.logits.cols());
    total += ce_rows(st.logits, st.tf.targets, dlogits[s], count);
  }
  if (count == 0) return 0;

  if (with_grad) {
    const double scale = 1.0 / static_cast<double>(count);
    for (size_t s = 0; s < batch.size(); ++s) {
      auto& st = states[s];
      for (size_t i = 0; i < dlogits[s].size(); ++i) {
        dlogits[s].data()[i] *= scale;
      }
      Mat d_enc(st.enc_states.rows(), st.enc_states.cols());
      model.decoder_backward(st.dec_cache, dlogits[s], d_enc);
      model.encoder_backward(st.enc_cache, d_enc);
    }
  }
  return total / static_cast<double>(count);
}

double run_frame_batch(Model& model, std::span<const FrameBatchItem> batch,
                       std::mt19937_64* rng, bool with_grad) {
  RunMode mode{rng != nullptr, rng};
  double total = 0;
  long count = 0;

  struct SampleState {
    EncoderCache enc_cache;
    Mat enc_states;
    Mat logits;
  };
  std::vector<SampleState> states(batch.size());
  std::vector<Mat> dlogits(batch.size());

  for (size_t s = 0; s < batch.size(); ++s) {
    auto& st = states[s];
    if (static_cast<int>(batch[s].targets.size()) !=
        model.config().input_frames) {
      throw std::invalid_argument("frame target count mismatch");
    }
    st.enc_states = model.encoder_forward(batch[s].spec, st.enc_cache, mode);
    st.logits = model.frame_forward(st.enc_states);
    dlogits[s] = Mat(st.logits.rows(), st.logits.cols());
    total += ce_rows(st.logits, batch[s].targets, dlogits[s], count);
  }
  if (count == 0) return 0;

  if (with_grad) {
    const double scale = 1.0 / static_cast<double>(count);
    for (size_t s = 0; s < batch.size(); ++s) {
      auto& st = states[s];
      for (size_t i = 0; i < dlogits[s].size(); ++i) {
        dlogits[s].data()[i] *= scale;
      }
      Mat d_enc(st.enc_states.rows(), st.enc_states.cols());
      model.frame_backward(st.enc_states, dlogits[s], d_enc);
      model.encoder_backward(st.enc_cache, d_enc);
    }
  }
  return total / static_cast<double>(count);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b,
              double& na, double& nb) {
  double dot = 0, sa = 0, sb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    sa += a[i] * a[i];
    sb += b[i] * b[i];
  }
  na = std::max(std::sqrt(sa), 1e-12);
  nb = std::max(std::sqrt(sb), 1e-12);
  return dot / (na * nb);
}

}  // namespace

double sequence_loss_and_grad(Model& model,
                              std::span<const TokenBatchItem> batch,
                              std::mt19937_64* rng) {
  return run_sequence_batch(model, batch, rng, /*with_grad=*/true);
}

double frame_loss_and_grad(Model& model, std::span<const FrameBatchItem> batch,
                           std::mt19937_64* rng) {
  return run_frame_batch(model, batch, rng, /*with_grad=*/true);
}

double sequence_loss(const Model& model,
                     std::span<const TokenBatchItem> batch) {
  return run_sequence_batch(const_cast<Model&>(model), batch, nullptr,
                            /*with_grad=*/false);
}

double frame_loss(const Model& model, std::span<const FrameBatchItem> batch) {
  return run_frame_batch(const_cast<Model&>(model), batch, nullptr,
                         /*with_grad=*/false);
}

double pretrain_loss_and_grad(Model& model,
                              std::span<const PretrainSample> batch,
                              std::span<const int> pairs, bool cosine_remap,
                              std::mt19937_64* rng) {
  if (batch.size() < 2) {
    throw std::invalid_argument("pre-training needs batch size >= 2");
  }
  RunMode mode{rng != nullptr, rng};

  std::vector<EncoderCache> caches(batch.size());
  std::vector<Mat> states(batch.size());
  std::vector<std::vector<double>> pooled(batch.size());
  for (size_t s = 0; s < batch.size(); ++s) {
    states[s] = model.encoder_forward(batch[s].spec, caches[s], mode);
    pooled[s] = Model::pool_embedding(states[s]);
  }

  const size_t d = pooled[0].size();
  std::vector<std::vector<double>> d_pooled(batch.size(),
                                            std::vector<double>(d, 0.0));

  struct Term {
    size_t i, j;
    double target;
  };
  std::vector<Term> terms;
  for (size_t i = 0; i < batch.size(); ++i) {
    int j = pairs[i];
    if (j < 0) continue;  // skipped pair
    WcsrResult sim = wcsr(Criterion::kMirex, batch[i].labels,
                          batch[static_cast<size_t>(j)].labels);
    if (!sim.defined()) continue;
    terms.push_back({i, static_cast<size_t>(j), sim.score()});
  }
  if (terms.empty()) return -1;

  double loss = 0;
  for (const auto& term : terms) {
    const auto& a = pooled[term.i];
    const auto& b = pooled[term.j];
    double na, nb;
    double c = cosine(a, b, na, nb);
    double sim = cosine_remap ? 0.5 * (c + 1.0) : c;
    double diff = sim - term.target;
    loss += diff * diff;

    double dsim = 2.0 * diff / static_cast<double>(terms.size());
    double dc = cosine_remap ? 0.5 * dsim : dsim;
    for (size_t k = 0; k < d; ++k) {
      d_pooled[term.i][k] += dc * (b[k] / (na * nb) - c * a[k] / (na * na));
      d_pooled[term.j][k] += dc * (a[k] / (na * nb) - c * b[k] / (nb * nb));
    }
  }

  for (size_t s = 0; s < batch.size(); ++s) {
    bool any = false;
    for (double v : d_pooled[s]) {
      if (v != 0) {
        any = true;
        break;
      }
    }
    if (!any) continue;
    // Mean pooling spreads the pooled gradient evenly over time steps.
    Mat d_states(states[s].rows(), states[s].cols());
    const double inv_t = 1.0 / states[s].rows();
    for (int r = 0; r < d_states.rows(); ++r) {
      double* row = d_states.row(r);
      for (int c = 0; c < d_states.cols(); ++c) {
        row[c] = d_pooled[s][static_cast<size_t>(c)] * inv_t;
      }
    }
    model.encoder_backward(caches[s], d_states);
  }
  return loss / static_cast<double>(terms.size());
}

// ---------------------------------------------------------------------------
// Steps
// ---------------------------------------------------------------------------

double train_step(Model& model, Adam& adam, double lr,
                  std::span<const TokenBatchItem> batch, std::mt19937_64& rng,
                  bool dropout) {
  model.zero_grad();
  double loss = sequence_loss_and_grad(model, batch, dropout ? &rng : nullptr);
  adam.step(lr);
  return loss;
}

double frame_train_step(Model& model, Adam& adam, double lr,
                        std::span<const FrameBatchItem> batch,
                        std::mt19937_64& rng, bool dropout) {
  model.zero_grad();
  double loss = frame_loss_and_grad(model, batch, dropout ? &rng : nullptr);
  adam.step(lr);
  return loss;
}

std::vector<int> draw_pretrain_pairs(size_t batch_size,
                                     std::span<const PretrainSample> batch,
                                     std::mt19937_64& rng) {
  std::vector<int> pairs(batch_size, -1);
  for (size_t i = 0; i < batch_size; ++i) {
    for (int attempt = 0; attempt < 2; ++attempt) {
      long j = uniform_int(rng, 0, static_cast<long>(batch_size) - 2);
      if (j >= static_cast<long>(i)) ++j;  // exclude the anchor
      WcsrResult sim = wcsr(Criterion::kMirex, batch[i].labels,
                            batch[static_cast<size_t>(j)].labels);
      if (sim.defined()) {
        pairs[i] = static_cast<int>(j);
        break;
      }
    }
  }
  return pairs;
}

double pretrain_step(Model& model, Adam& adam, double lr,
                     std::span<const PretrainSample> batch,
                     std::mt19937_64& rng, bool cosine_remap, bool dropout) {
  if (batch.size() < 2) {
    throw std::invalid_argument("pre-training needs batch size >= 2");
  }
  std::vector<int> pairs = draw_pretrain_pairs(batch.size(), batch, rng);
  model.zero_grad();
  double loss = pretrain_loss_and_grad(model, batch, pairs, cosine_remap,
                                       dropout ? &rng : nullptr);
  if (loss < 0) return 0;  // every pair skipped; nothing to update
  adam.step(lr);
  return loss;
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

Dataset Dataset::load(const std::vector<ManifestEntry>& manifest,
                      const CqtParams& params, const std::string& cache) {
  namespace fs = std::filesystem;
  Dataset data;
  data.cqt_params = params;
  data.songs.resize(manifest.size());
  if (!cache.empty()) fs::create_directories(cache);

  CqtTransform transform(params);
  // CQT is the expensive part; the transform itself parallelizes over
  // frames, so songs are processed in order (cheap, deterministic).
  for (size_t i = 0; i < manifest.size(); ++i) {
    const auto& entry = manifest[i];
    SongData& song = data.songs[i];
    song.id = entry.id;
    song.fold = entry.fold;
    song.labels = quantized(read_lab_file(entry.lab_path));

    bool cached = false;
    fs::path cache_path;
    if (!cache.empty()) {
      uint64_t h = hash_file(entry.audio_path);
      cache_path = fs::path(cache) / spectrogram_cache_name(h, params);
      if (fs::exists(cache_path)) {
        song.features = read_spectrogram(cache_path.string());
        cached = true;
      }
    }
    if (!cached) {
      Waveform audio = read_wav(entry.audio_path);
      song.features = transform.transform(audio);
      if (!cache.empty()) write_spectrogram(cache_path.string(), song.features);
    }
  }
  return data;
}

std::vector<int> Dataset::fold_songs(int fold, bool invert) const {
  std::vector<int> out;
  for (size_t i = 0; i < songs.size(); ++i) {
    if ((songs[i].fold == fold) != invert) out.push_back(static_cast<int>(i));
  }
  return out;
}

Spectrogram slice_frames(const Spectrogram& song, int start_frame,
                         int n_frames) {
  Spectrogram out;
  out.frames = n_frames;
  out.bins = song.bins;
  out.values.assign(static_cast<size_t>(n_frames) * song.bins, 0.0);
  for (int f = 0; f < n_frames; ++f) {
    int src = start_frame + f;
    if (src < 0 || src >= song.frames) continue;
    std::copy(song.row(src), song.row(src) + song.bins, out.row(f));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fit loop
// ---------------------------------------------------------------------------

namespace {

struct SegmentDraw {
  int song = 0;
  int start_frame = 0;
  int shift = 0;
};

std::vector<SegmentDraw> epoch_draws(const Dataset& data,
                                     std::span<const int> song_idx,
                                     const TrainConfig& config,
                                     bool augmented, std::mt19937_64& rng) {
  std::vector<SegmentDraw> draws;
  const int seg_frames = kFramesPerSegment;
  for (int idx : song_idx) {
    const auto& song = data.songs[static_cast<size_t>(idx)];
    int total = song.features.frames;
    int n_seg = std::max(1, (total + seg_frames - 1) / seg_frames);
    for (int s = 0; s < n_seg; ++s) {
      SegmentDraw d;
      d.song = idx;
      if (augmented && config.random_crop && total > seg_frames) {
        d.start_frame = static_cast<int>(uniform_int(rng, 0, total - seg_frames));
      } else {
        d.start_frame = s * seg_frames;
      }
      if (augmented && config.pitch_shift && config.pitch_shift_range > 0) {
        d.shift = static_cast<int>(uniform_int(rng, -config.pitch_shift_range,
                                               config.pitch_shift_range));
      }
      draws.push_back(d);
    }
  }
  if (augmented) {
    std::shuffle(draws.begin(), draws.end(), rng);
  }
  return draws;
}

Segment draw_labels(const Dataset& data, const SegmentDraw& d) {
  const auto& song = data.songs[static_cast<size_t>(d.song)];
  Segment seg = slice_segment(song.labels, d.start_frame * kGridSeconds,
                              kSegmentSeconds, song.id);
  if (d.shift != 0) seg = pitch_shifted(seg, d.shift);
  return seg;
}

Spectrogram draw_features(const Dataset& data, const SegmentDraw& d) {
  const auto& song = data.songs[static_cast<size_t>(d.song)];
  Spectrogram spec = slice_frames(song.features, d.start_frame,
                                  kFramesPerSegment);
  if (d.shift != 0) spec = pitch_shifted(spec, d.shift);
  return spec;
}

TokenBatchItem make_token_item(const Dataset& data, const SegmentDraw& d,
                               const TokenSet& ts) {
  TokenBatchItem item;
  item.spec = draw_features(data, d);
  item.tokens = encode(draw_labels(data, d), ts).ids;
  return item;
}

FrameBatchItem make_frame_item(const Dataset& data, const SegmentDraw& d) {
  FrameBatchItem item;
  item.spec = draw_features(data, d);
  auto frames = sample_frames(draw_labels(data, d).timeline, kGridSeconds);
  item.targets.reserve(frames.size());
  for (const auto& c : frames) item.targets.push_back(c.vocab_index());
  return item;
}

PretrainSample make_pretrain_sample(const Dataset& data, const SegmentDraw& d) {
  PretrainSample sample;
  sample.spec = draw_features(data, d);
  sample.labels = draw_labels(data, d).timeline;
  return sample;
}

void emit_history(std::ostream* log, const EpochRecord& rec) {
  if (log == nullptr) return;
  nlohmann::json j{{"epoch", rec.epoch},
                   {"train_loss", rec.train_loss},
                   {"val_loss", rec.val_loss},
                   {"lr", rec.lr},
                   {"seconds", rec.seconds}};
  (*log) << j.dump() << "\n" << std::flush;
}

using Snapshot = std::vector<Mat>;

Snapshot take_snapshot(Model& model) {
  Snapshot snap;
  for (auto& np : model.parameters()) snap.push_back(np.param->w);
  return snap;
}

void restore_snapshot(Model& model, const Snapshot& snap) {
  auto params = model.parameters();
  for (size_t i = 0; i < params.size(); ++i) params[i].param->w = snap[i];
}

// Shared epoch loop: LR halving on stagnation, early stopping, best-weights
// restoration. train_epoch(lr, rng) returns the mean train loss; val_loss()
// evaluates without augmentation or dropout.
template <typename TrainEpoch, typename ValLoss>
FitResult run_loop(Model& model, const TrainConfig& config,
                   TrainEpoch&& train_epoch, ValLoss&& val_loss,
                   std::ostream* log) {
  config.validate();
  auto rng = seeded_rng(config.seed, 1);

  FitResult result;
  StagnationSchedule schedule(config.initial_lr, config.lr_halving_patience,
                              config.early_stop_patience);
  Snapshot best = take_snapshot(model);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    double lr = schedule.lr();
    auto t0 = std::chrono::steady_clock::now();
    double train = train_epoch(lr, rng);
    double val = val_loss();
    if (!std::isfinite(train) || !std::isfinite(val)) {
      throw std::runtime_error("non-finite loss at epoch " +
                               std::to_string(epoch) +
                               " (train=" + std::to_string(train) +
                               ", val=" + std::to_string(val) + ")");
    }
    auto t1 = std::chrono::steady_clock::now();

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train;
    rec.val_loss = val;
    rec.lr = lr;
    rec.seconds = std::chrono::duration<double>(t1 - t0).count();
    result.history.push_back(rec);
    emit_history(log, rec);

    bool keep_going = schedule.observe(val);
    if (schedule.improved()) {
      best = take_snapshot(model);
      result.best_epoch = epoch;
    }
    if (!keep_going) break;
  }

  restore_snapshot(model, best);
  result.best_val_loss = schedule.best();
  return result;
}

}  // namespace

FitResult fit(Model& model, const Dataset& data,
              std::span<const int> train_songs, std::span<const int> val_songs,
              const TrainConfig& config, std::ostream* log) {
  TokenSet ts(config.repr);
  if (config.task == Task::kSeq2Seq && model.config().vocab != ts.size()) {
    throw std::invalid_argument("model vocab does not match representation");
  }

  auto params = model.encoder_parameters();
  auto tail = config.task == Task::kSeq2Seq ? model.decoder_parameters()
                                            : model.frame_head_parameters();
  params.insert(params.end(), tail.begin(), tail.end());
  Adam adam(std::move(params));

  // Validation tiles are fixed across epochs.
  auto fixed_rng = seeded_rng(config.seed, 2);
  std::vector<SegmentDraw> val_draws =
      epoch_draws(data, val_songs, config, /*augmented=*/false, fixed_rng);

  auto train_epoch = [&](double lr, std::mt19937_64& rng) {
    auto draws = epoch_draws(data, train_songs, config, true, rng);
    double total = 0;
    long count = 0;
    for (size_t off = 0; off < draws.size();
         off += static_cast<size_t>(config.batch_size)) {
      size_t hi = std::min(draws.size(),
                           off + static_cast<size_t>(config.batch_size));
      if (config.task == Task::kSeq2Seq) {
        std::vector<TokenBatchItem> batch;
        for (size_t i = off; i < hi; ++i) {
          batch.push_back(make_token_item(data, draws[i], ts));
        }
        total += train_step(model, adam, lr, batch, rng) *
                 static_cast<double>(hi - off);
      } else {
        std::vector<FrameBatchItem> batch;
        for (size_t i = off; i < hi; ++i) {
          batch.push_back(make_frame_item(data, draws[i]));
        }
        total += frame_train_step(model, adam, lr, batch, rng) *
                 static_cast<double>(hi - off);
      }
      count += static_cast<long>(hi - off);
    }
    return count > 0 ? total / static_cast<double>(count) : 0.0;
  };

  auto val_loss = [&]() {
    double total = 0;
    long count = 0;
    for (const auto& d : val_draws) {
      if (config.task == Task::kSeq2Seq) {
        TokenBatchItem item = make_token_item(data, d, ts);
        total += sequence_loss(model, std::span(&item, 1));
      } else {
        FrameBatchItem item = make_frame_item(data, d);
        total += frame_loss(model, std::span(&item, 1));
      }
      ++count;
    }
    return count > 0 ? total / static_cast<double>(count) : 0.0;
  };

  return run_loop(model, config, train_epoch, val_loss, log);
}

FitResult pretrain_fit(Model& model, const Dataset& data,
                       std::span<const int> train_songs,
                       std::span<const int> val_songs,
                       const TrainConfig& config, std::ostream* log) {
  TrainConfig cfg = config;
  cfg.max_epochs = config.pretrain_epochs;
  Adam adam(model.encoder_parameters());

  auto fixed_rng = seeded_rng(config.seed, 3);
  std::vector<SegmentDraw> val_draws =
      epoch_draws(data, val_songs, cfg, /*augmented=*/false, fixed_rng);
  // Fixed validation pairing: i -> next sample, cyclically.
  auto val_pairs = [&](size_t n) {
    std::vector<int> pairs(n);
    for (size_t i = 0; i < n; ++i) {
      pairs[i] = static_cast<int>((i + 1) % n);
    }
    return pairs;
  };

  auto train_epoch = [&](double lr, std::mt19937_64& rng) {
    auto draws = epoch_draws(data, train_songs, cfg, true, rng);
    double total = 0;
    long count = 0;
    for (size_t off = 0; off + 1 < draws.size();
         off += static_cast<size_t>(cfg.batch_size)) {
      size_t hi =
          std::min(draws.size(), off + static_cast<size_t>(cfg.batch_size));
      if (hi - off < 2) break;  // a trailing singleton cannot form a pair
      std::vector<PretrainSample> batch;
      for (size_t i = off; i < hi; ++i) {
        batch.push_back(make_pretrain_sample(data, draws[i]));
      }
      total += pretrain_step(model, adam, lr, batch, rng, cfg.cosine_remap) *
               static_cast<double>(hi - off);
      count += static_cast<long>(hi - off);
    }
    return count > 0 ? total / static_cast<double>(count) : 0.0;
  };

  auto val_loss = [&]() {
    if (val_draws.size() < 2) return 0.0;
    std::vector<PretrainSample> batch;
    for (const auto& d : val_draws) {
      batch.push_back(make_pretrain_sample(data, d));
    }
    Model& m = model;  // loss only; gradients are discarded below
    m.zero_grad();
    auto pairs = val_pairs(batch.size());
    double loss =
        pretrain_loss_and_grad(m, batch, pairs, cfg.cosine_remap, nullptr);
    m.zero_grad();
    return loss < 0 ? 0.0 : loss;
  };

  return run_loop(model, cfg, train_epoch, val_loss, log);
}

// ---------------------------------------------------------------------------
// Evaluation and folds
// ---------------------------------------------------------------------------

EvalReport evaluate_corpus(
    std::span<const std::tuple<std::string, Timeline, Timeline>> items) {
  EvalReport report;
  std::vector<std::pair<Timeline, Timeline>> pairs;
  for (const auto& [id, ref, est] : items) {
    EvalRow row;
    row.id = id;
    for (auto c : kAllCriteria) {
      WcsrResult r = wcsr(c, ref, est);
      row.wcsr[static_cast<size_t>(c)] =
          r.defined() ? r.score() : std::numeric_limits<double>::quiet_NaN();
    }
    row.seg = seg_scores(ref, est);
    report.songs.push_back(std::move(row));
    pairs.emplace_back(ref, est);
  }
  for (auto c : kAllCriteria) {
    report.corpus_wcsr[static_cast<size_t>(c)] = wcsr_corpus(c, pairs);
  }
  report.corpus_seg = seg_scores_corpus(pairs);
  return report;
}

EvalReport evaluate_songs(const Model& model, const Dataset& data,
                          std::span<const int> song_idx, Repr repr, Task task) {
  TokenSet ts(repr);
  std::vector<std::tuple<std::string, Timeline, Timeline>> items;
  for (int idx : song_idx) {
    const auto& song = data.songs[static_cast<size_t>(idx)];
    double duration = song.labels.duration();
    Timeline est =
        task == Task::kSeq2Seq
            ? predict_song(model, song.features, duration, ts)
            : predict_song_frames(model, song.features, duration);
    items.emplace_back(song.id, song.labels, est);
  }
  return evaluate_corpus(items);
}

FoldsResult run_folds(const Dataset& data, const TrainConfig& config,
                      const ModelConfig& model_config,
                      std::vector<int> folds_to_run,
                      const std::string& checkpoint_dir, std::ostream* log) {
  if (folds_to_run.empty()) {
    for (const auto& song : data.songs) {
      if (std::find(folds_to_run.begin(), folds_to_run.end(), song.fold) ==
          folds_to_run.end()) {
        folds_to_run.push_back(song.fold);
      }
    }
    std::sort(folds_to_run.begin(), folds_to_run.end());
  }

  FoldsResult result;
  for (int fold : folds_to_run) {
    auto train_songs = data.fold_songs(fold, /*invert=*/true);
    auto val_songs = data.fold_songs(fold);
    if (train_songs.empty() || val_songs.empty()) {
      throw std::runtime_error("fold " + std::to_string(fold) +
                               " leaves an empty train or validation set");
    }

    auto rng = seeded_rng(config.seed, 100 + static_cast<uint64_t>(fold));
    Model model(model_config, rng);
    if (!config.pretrained_encoder.empty()) {
      load_encoder_weights(config.pretrained_encoder, model);
    } else if (config.pretrain) {
      pretrain_fit(model, data, train_songs, val_songs, config, log);
    }
    fit(model, data, train_songs, val_songs, config, log);

    FoldResult fr;
    fr.fold = fold;
    fr.report =
        evaluate_songs(model, data, val_songs, config.repr, config.task);
    if (!checkpoint_dir.empty()) {
      std::filesystem::create_directories(checkpoint_dir);
      fr.checkpoint_path = (std::filesystem::path(checkpoint_dir) /
                            ("fold" + std::to_string(fold) + ".ckpt"))
                               .string();
      CheckpointMeta meta;
      meta.repr = config.repr;
      meta.tokenset_fingerprint = TokenSet(config.repr).fingerprint();
      meta.frame_task = config.task == Task::kFrame;
      save_checkpoint(fr.checkpoint_path, model, meta);
    }
    result.folds.push_back(std::move(fr));
  }

  // Unweighted mean over folds.
  const auto n = static_cast<double>(result.folds.size());
  for (const auto& fr : result.folds) {
    for (size_t c = 0; c < 7; ++c) {
      result.mean_wcsr[c] += fr.report.corpus_wcsr[c] / n;
    }
    result.mean_seg.under += fr.report.corpus_seg.under / n;
    result.mean_seg.over += fr.report.corpus_seg.over / n;
    result.mean_seg.mean += fr.report.corpus_seg.mean / n;
  }
  return result;
}

}  // namespace acr
