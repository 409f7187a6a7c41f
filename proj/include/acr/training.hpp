// Optimization: Adam, the cross-entropy and similarity pre-training losses
// with hand-derived gradients, the epoch loop with LR halving and early
// stopping, and k-fold orchestration.
#pragma once

#include <array>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "acr/metrics.hpp"
#include "acr/model.hpp"
#include "acr/synthdata.hpp"

namespace acr {

enum class Task { kSeq2Seq, kFrame };

struct TrainConfig {
  int batch_size = 32;
  double initial_lr = 1e-4;
  int lr_halving_patience = 3;   // epochs without val improvement -> lr/2
  int early_stop_patience = 10;  // epochs without val improvement -> stop
  int max_epochs = 100;
  bool pitch_shift = true;
  int pitch_shift_range = 5;  // semitones, uniform in [-range, range]
  bool random_crop = true;
  Repr repr = Repr::kSplit;
  Task task = Task::kSeq2Seq;
  std::string pretrained_encoder;  // checkpoint path; empty = random init
  bool pretrain = false;           // run similarity pre-training before fit
  int pretrain_epochs = 50;
  uint64_t seed = 1;
  bool cosine_remap = false;  // compare (cos+1)/2 instead of raw cosine

  void validate() const;
};

class Adam {
 public:
  explicit Adam(std::vector<Model::NamedParam> params, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void step(double lr);
  void zero_grad();
  long step_count() const { return t_; }

  const Mat& moment1(size_t i) const { return m_[i]; }
  const Mat& moment2(size_t i) const { return v_[i]; }
  void restore(long step, std::istream& in, size_t n_params);

 private:
  std::vector<Model::NamedParam> params_;
  std::vector<Mat> m_, v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

// ---------------------------------------------------------------------------
// Batches
// ---------------------------------------------------------------------------

struct TokenBatchItem {
  Spectrogram spec;        // segment, input_frames x input_bins
  std::vector<int> tokens;  // SOS .. EOS, optionally right-padded with PAD
};

struct FrameBatchItem {
  Spectrogram spec;
  std::vector<int> targets;  // chord vocab index per frame
};

struct PretrainSample {
  Spectrogram spec;
  Timeline labels;  // segment timeline, same duration for every sample
};

// Losses with gradient accumulation (no parameter update). Dropout is active
// only when rng is non-null. PAD targets are excluded from the mean.
double sequence_loss_and_grad(Model& model,
                              std::span<const TokenBatchItem> batch,
                              std::mt19937_64* rng = nullptr);
double frame_loss_and_grad(Model& model, std::span<const FrameBatchItem> batch,
                           std::mt19937_64* rng = nullptr);

// Similarity pre-training over explicit anchor->comparison pairs
// (pairs[i] = j). Gradients flow into encoder (+ pooling) parameters only.
// Pairs with zero-support similarity targets are skipped; returns the mean
// squared error over kept anchors, or -1 if every pair was skipped.
double pretrain_loss_and_grad(Model& model,
                              std::span<const PretrainSample> batch,
                              std::span<const int> pairs, bool cosine_remap,
                              std::mt19937_64* rng = nullptr);

// Forward-only (evaluation mode) variants.
double sequence_loss(const Model& model, std::span<const TokenBatchItem> batch);
double frame_loss(const Model& model, std::span<const FrameBatchItem> batch);

// One optimizer update. pretrain_step draws a comparison j != i uniformly for
// each anchor (re-drawing once on zero-support pairs) and touches only
// encoder parameters; adam must be built over Model::encoder_parameters().
double train_step(Model& model, Adam& adam, double lr,
                  std::span<const TokenBatchItem> batch, std::mt19937_64& rng,
                  bool dropout = true);
double frame_train_step(Model& model, Adam& adam, double lr,
                        std::span<const FrameBatchItem> batch,
                        std::mt19937_64& rng, bool dropout = true);
double pretrain_step(Model& model, Adam& adam, double lr,
                     std::span<const PretrainSample> batch,
                     std::mt19937_64& rng, bool cosine_remap = false,
                     bool dropout = true);

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

struct SongData {
  std::string id;
  int fold = 0;
  Timeline labels;       // quantized to the 0.1 s grid
  Spectrogram features;  // full-song CQT on the same frame grid
};

struct Dataset {
  std::vector<SongData> songs;
  CqtParams cqt_params;

  // Loads labels and computes (or reads cached) full-song spectrograms.
  static Dataset load(const std::vector<ManifestEntry>& manifest,
                      const CqtParams& params, const std::string& cache = {});

  std::vector<int> fold_songs(int fold, bool invert = false) const;
};

// 256-frame views of a song spectrogram; frames past the end are zero.
Spectrogram slice_frames(const Spectrogram& song, int start_frame,
                         int n_frames);

// ---------------------------------------------------------------------------
// Fit loop and fold orchestration
// ---------------------------------------------------------------------------

// Validation-driven learning-rate halving and early stopping. The halving
// counter resets after each halving; the stop counter only resets on
// improvement.
class StagnationSchedule {
 public:
  StagnationSchedule(double initial_lr, int halving_patience,
                     int stop_patience)
      : lr_(initial_lr), halving_patience_(halving_patience),
        stop_patience_(stop_patience) {}

  // Feed one epoch's validation loss; returns false once training should stop.
  bool observe(double val_loss) {
    if (val_loss < best_) {
      best_ = val_loss;
      improved_ = true;
      stagnant_halving_ = 0;
      stagnant_stop_ = 0;
      return true;
    }
    improved_ = false;
    if (++stagnant_halving_ >= halving_patience_) {
      lr_ *= 0.5;
      stagnant_halving_ = 0;
    }
    return ++stagnant_stop_ < stop_patience_;
  }

  double lr() const { return lr_; }
  double best() const { return best_; }
  bool improved() const { return improved_; }

 private:
  double lr_;
  int halving_patience_;
  int stop_patience_;
  double best_ = std::numeric_limits<double>::infinity();
  bool improved_ = false;
  int stagnant_halving_ = 0;
  int stagnant_stop_ = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;
  double val_loss = 0;
  double lr = 0;
  double seconds = 0;
};

struct FitResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_loss = 0;
};

// Trains on the given songs, tracking validation loss per epoch; the model
// holds the best-validation weights on return. log (optional) receives one
// JSON line per epoch.
FitResult fit(Model& model, const Dataset& data,
              std::span<const int> train_songs, std::span<const int> val_songs,
              const TrainConfig& config, std::ostream* log = nullptr);

// Same loop shape for encoder pre-training (MSE against chord similarity).
FitResult pretrain_fit(Model& model, const Dataset& data,
                       std::span<const int> train_songs,
                       std::span<const int> val_songs,
                       const TrainConfig& config, std::ostream* log = nullptr);

struct EvalRow {
  std::string id;
  std::array<double, 7> wcsr{};
  SegScores seg;
};

struct EvalReport {
  std::vector<EvalRow> songs;
  std::array<double, 7> corpus_wcsr{};
  SegScores corpus_seg;
};

EvalReport evaluate_corpus(
    std::span<const std::tuple<std::string, Timeline, Timeline>> items);

// Decodes every listed song and scores it against its reference labels.
EvalReport evaluate_songs(const Model& model, const Dataset& data,
                          std::span<const int> song_idx, Repr repr, Task task);

struct FoldResult {
  int fold = 0;
  EvalReport report;
  std::string checkpoint_path;
};

struct FoldsResult {
  std::vector<FoldResult> folds;
  std::array<double, 7> mean_wcsr{};  // unweighted mean over folds
  SegScores mean_seg;
};

// Per fold: optional pre-training, fit, evaluation on the held-out songs.
// folds_to_run empty means every fold present in the dataset.
FoldsResult run_folds(const Dataset& data, const TrainConfig& config,
                      const ModelConfig& model_config,
                      std::vector<int> folds_to_run = {},
                      const std::string& checkpoint_dir = {},
                      std::ostream* log = nullptr);

}  // namespace acr
