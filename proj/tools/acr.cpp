// Command-line surface for the chord recognition toolkit: corpus synthesis,
// feature extraction, tokenization, training, inference, and evaluation.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "acr/decode.hpp"
#include "acr/io.hpp"
#include "acr/kernels.hpp"
#include "acr/metrics.hpp"
#include "acr/rng.hpp"
#include "acr/synthdata.hpp"
#include "acr/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct AppConfig {
  acr::TrainConfig train;
  acr::ModelConfig model;
};

// Config files are "key = value" lines; '#' starts a comment. CLI flags
// override file values.
AppConfig load_config(const std::string& path) {
  AppConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);

  std::map<std::string, std::string> kv;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        throw std::runtime_error("config line " + std::to_string(line_no) +
                                 ": expected 'key = value'");
      }
      continue;
    }
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t\r");
      size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  auto geti = [&](const char* k, int& out) {
    if (auto it = kv.find(k); it != kv.end()) {
      out = std::stoi(it->second);
      kv.erase(it);
    }
  };
  auto getd = [&](const char* k, double& out) {
    if (auto it = kv.find(k); it != kv.end()) {
      out = std::stod(it->second);
      kv.erase(it);
    }
  };
  auto getb = [&](const char* k, bool& out) {
    if (auto it = kv.find(k); it != kv.end()) {
      out = it->second == "1" || it->second == "true" || it->second == "on";
      kv.erase(it);
    }
  };

  auto& t = cfg.train;
  geti("batch_size", t.batch_size);
  getd("initial_lr", t.initial_lr);
  geti("lr_halving_patience", t.lr_halving_patience);
  geti("early_stop_patience", t.early_stop_patience);
  geti("max_epochs", t.max_epochs);
  getb("pitch_shift", t.pitch_shift);
  geti("pitch_shift_range", t.pitch_shift_range);
  getb("random_crop", t.random_crop);
  getb("pretrain", t.pretrain);
  geti("pretrain_epochs", t.pretrain_epochs);
  getb("cosine_remap", t.cosine_remap);
  if (auto it = kv.find("seed"); it != kv.end()) {
    t.seed = std::stoull(it->second);
    kv.erase(it);
  }
  if (auto it = kv.find("repr"); it != kv.end()) {
    auto r = acr::repr_from_name(it->second);
    if (!r) throw std::runtime_error("config: unknown repr " + it->second);
    t.repr = *r;
    kv.erase(it);
  }
  if (auto it = kv.find("task"); it != kv.end()) {
    if (it->second == "seq2seq") {
      t.task = acr::Task::kSeq2Seq;
    } else if (it->second == "frame") {
      t.task = acr::Task::kFrame;
    } else {
      throw std::runtime_error("config: unknown task " + it->second);
    }
    kv.erase(it);
  }

  auto& m = cfg.model;
  geti("d_model", m.d_model);
  geti("n_heads", m.n_heads);
  geti("n_enc", m.n_enc);
  geti("n_dec", m.n_dec);
  geti("ff_dim", m.ff_dim);
  getd("dropout", m.dropout);
  geti("max_target_len", m.max_target_len);

  if (!kv.empty()) {
    throw std::runtime_error("config: unknown key '" + kv.begin()->first + "'");
  }
  return cfg;
}

acr::ReductionTable reduction_table(const std::string& path) {
  if (path.empty()) return acr::ReductionTable::builtin();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open reduction table: " + path);
  return acr::ReductionTable::load(in);
}

// Pairs reference and estimate labs: either two files, or two directories
// matched by filename stem.
std::vector<std::tuple<std::string, acr::Timeline, acr::Timeline>> load_pairs(
    const std::string& ref, const std::string& est,
    const acr::ReductionTable& table) {
  std::vector<std::tuple<std::string, acr::Timeline, acr::Timeline>> out;
  if (fs::is_directory(ref) != fs::is_directory(est)) {
    throw std::runtime_error("--ref and --est must both be files or both be directories");
  }
  if (!fs::is_directory(ref)) {
    out.emplace_back(fs::path(ref).stem().string(),
                     acr::read_lab_file(ref, table),
                     acr::read_lab_file(est, table));
    return out;
  }
  std::vector<fs::path> refs;
  for (const auto& e : fs::directory_iterator(ref)) {
    if (e.path().extension() == ".lab") refs.push_back(e.path());
  }
  std::sort(refs.begin(), refs.end());
  if (refs.empty()) throw std::runtime_error("no .lab files under " + ref);
  for (const auto& r : refs) {
    fs::path e = fs::path(est) / r.filename();
    if (!fs::exists(e)) {
      throw std::runtime_error("missing estimate for " + r.filename().string());
    }
    out.emplace_back(r.stem().string(), acr::read_lab_file(r.string(), table),
                     acr::read_lab_file(e.string(), table));
  }
  return out;
}

std::string fmt3(double v) {
  if (std::isnan(v)) return "   --";
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

void print_report(const acr::EvalReport& report) {
  std::printf("%-24s %6s %8s %7s %7s %9s %8s %6s   %6s %6s %6s\n", "song",
              "root", "maj-min", "thirds", "triads", "sevenths", "tetrads",
              "mirex", "under", "over", "mean");
  auto row = [](const std::string& id, const std::array<double, 7>& w,
                const acr::SegScores& s) {
    std::printf("%-24s %6s %8s %7s %7s %9s %8s %6s   %6s %6s %6s\n", id.c_str(),
                fmt3(w[0]).c_str(), fmt3(w[1]).c_str(), fmt3(w[2]).c_str(),
                fmt3(w[3]).c_str(), fmt3(w[4]).c_str(), fmt3(w[5]).c_str(),
                fmt3(w[6]).c_str(), fmt3(s.under).c_str(), fmt3(s.over).c_str(),
                fmt3(s.mean).c_str());
  };
  for (const auto& r : report.songs) row(r.id, r.wcsr, r.seg);
  row("corpus", report.corpus_wcsr, report.corpus_seg);
}

json report_to_json(const acr::EvalReport& report) {
  auto wcsr_json = [](const std::array<double, 7>& w) {
    json j;
    for (auto c : acr::kAllCriteria) {
      j[std::string(acr::criterion_name(c))] = w[static_cast<size_t>(c)];
    }
    return j;
  };
  auto seg_json = [](const acr::SegScores& s) {
    return json{{"under", s.under}, {"over", s.over}, {"mean", s.mean}};
  };
  json j;
  j["songs"] = json::array();
  for (const auto& r : report.songs) {
    j["songs"].push_back({{"id", r.id},
                          {"wcsr", wcsr_json(r.wcsr)},
                          {"seg", seg_json(r.seg)}});
  }
  j["corpus"] = {{"wcsr", wcsr_json(report.corpus_wcsr)},
                 {"seg", seg_json(report.corpus_seg)}};
  return j;
}

acr::Dataset load_dataset(const std::string& manifest_path,
                          const std::string& cache_flag) {
  auto entries = acr::read_manifest(manifest_path);
  return acr::Dataset::load(entries, acr::CqtParams{},
                            acr::cache_dir(cache_flag).string());
}

int run_train_like(bool pretrain_only, const std::string& manifest_path,
                   int fold, const std::string& config_path,
                   const std::string& out_path, const std::string& history_path,
                   const std::string& pretrained, const std::string& cache,
                   std::optional<uint64_t> seed_override) {
  AppConfig cfg = load_config(config_path);
  if (seed_override) cfg.train.seed = *seed_override;
  if (!pretrained.empty()) cfg.train.pretrained_encoder = pretrained;
  cfg.model.vocab = static_cast<int>(acr::TokenSet(cfg.train.repr).size());

  acr::Dataset data = load_dataset(manifest_path, cache);
  auto train_songs = data.fold_songs(fold, /*invert=*/true);
  auto val_songs = data.fold_songs(fold);
  if (train_songs.empty() || val_songs.empty()) {
    throw std::runtime_error("fold " + std::to_string(fold) +
                             " leaves an empty train or validation set");
  }

  auto rng = acr::seeded_rng(cfg.train.seed, 100 + static_cast<uint64_t>(fold));
  acr::Model model(cfg.model, rng);
  if (!cfg.train.pretrained_encoder.empty()) {
    acr::load_encoder_weights(cfg.train.pretrained_encoder, model);
  }

  std::ofstream history;
  std::ostream* log = nullptr;
  if (!history_path.empty()) {
    history.open(history_path);
    if (!history) throw std::runtime_error("cannot open " + history_path);
    log = &history;
  }

  acr::FitResult result;
  if (pretrain_only) {
    result = acr::pretrain_fit(model, data, train_songs, val_songs, cfg.train,
                               log);
  } else {
    result = acr::fit(model, data, train_songs, val_songs, cfg.train, log);
  }

  acr::CheckpointMeta meta;
  meta.repr = cfg.train.repr;
  meta.tokenset_fingerprint = acr::TokenSet(cfg.train.repr).fingerprint();
  meta.frame_task = cfg.train.task == acr::Task::kFrame;
  acr::save_checkpoint(out_path, model, meta);

  std::printf("best epoch %d, val loss %.6f, checkpoint %s\n",
              result.best_epoch, result.best_val_loss, out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seq2seq automatic chord recognition toolkit"};
  app.require_subcommand(1);

  // Applied as soon as the flag parses, ahead of any subcommand callback.
  // Default 1; outputs do not depend on the thread count.
  acr::kernels::set_num_threads(1);
  app.add_option_function<int>(
      "--threads",
      [](int n) { acr::kernels::set_num_threads(n); },
      "worker threads (results do not depend on this)");

  // ---- synth -------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a synthetic chord corpus");
  std::string synth_out;
  acr::SynthSpec synth_spec;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_spec.seed, "corpus seed");
  synth->add_option("--songs", synth_spec.n_songs, "number of songs");
  synth->add_option("--duration", synth_spec.song_duration, "song length (s)");
  synth->add_option("--folds", synth_spec.folds, "cross-validation folds");
  synth->add_option("--noise", synth_spec.noise_level, "white noise level");
  synth->add_option("--min-chord", synth_spec.min_chord_seconds,
                    "shortest chord (s)");
  synth->add_option("--max-chord", synth_spec.max_chord_seconds,
                    "longest chord (s)");
  synth->add_option("--no-chord-rate", synth_spec.no_chord_rate,
                    "probability of drawing no-chord");
  synth->callback([&] {
    auto entries = acr::write_corpus(synth_spec, synth_out);
    std::printf("wrote %zu songs under %s\n", entries.size(),
                synth_out.c_str());
  });

  // ---- features ----------------------------------------------------------
  auto* features = app.add_subcommand(
      "features", "compute CQT spectrograms into the cache");
  std::string feat_manifest, feat_cache, feat_audio, feat_out;
  features->add_option("--manifest", feat_manifest, "dataset manifest");
  features->add_option("--audio", feat_audio, "single WAV file");
  features->add_option("--out", feat_out, "output .spec for --audio mode");
  features->add_option("--cache", feat_cache, "cache directory");
  features->callback([&] {
    acr::CqtParams params;
    acr::CqtTransform transform(params);
    if (!feat_audio.empty()) {
      if (feat_out.empty()) throw CLI::ValidationError("--audio needs --out");
      acr::write_spectrogram(feat_out,
                             transform.transform(acr::read_wav(feat_audio)));
      std::printf("%s\n", feat_out.c_str());
      return;
    }
    if (feat_manifest.empty()) {
      throw CLI::ValidationError("need --manifest or --audio");
    }
    auto dir = acr::cache_dir(feat_cache);
    fs::create_directories(dir);
    for (const auto& e : acr::read_manifest(feat_manifest)) {
      auto name = acr::spectrogram_cache_name(acr::hash_file(e.audio_path),
                                              params);
      fs::path path = dir / name;
      if (!fs::exists(path)) {
        acr::write_spectrogram(path.string(),
                               transform.transform(acr::read_wav(e.audio_path)));
      }
      std::printf("%s %s\n", e.id.c_str(), path.c_str());
    }
  });

  // ---- tokenize / detokenize ----------------------------------------------
  auto* tokenize = app.add_subcommand(
      "tokenize", "encode a .lab file into per-segment token lines");
  std::string tok_repr = "split", tok_lab, tok_out, tok_table;
  bool tok_ids = false;
  tokenize->add_option("--repr", tok_repr, "merge|split")
      ->check(CLI::IsMember({"merge", "split"}));
  tokenize->add_option("--lab", tok_lab, "input .lab")->required();
  tokenize->add_option("--out", tok_out, "output file (default stdout)");
  tokenize->add_option("--reduction-table", tok_table,
                       "override chord reduction table");
  tokenize->add_flag("--ids", tok_ids, "emit numeric token ids");
  tokenize->callback([&] {
    acr::TokenSet ts(*acr::repr_from_name(tok_repr));
    auto table = reduction_table(tok_table);
    acr::Timeline song = acr::quantized(acr::read_lab_file(tok_lab, table));
    std::ostringstream out;
    for (double start = 0; start < song.duration() - acr::kTimeEps;
         start += acr::kSegmentSeconds) {
      auto seq = acr::encode(acr::slice_segment(song, start), ts);
      for (size_t i = 0; i < seq.ids.size(); ++i) {
        if (i) out << ' ';
        if (tok_ids) {
          out << seq.ids[i];
        } else {
          out << ts.token_name(seq.ids[i]);
        }
      }
      out << '\n';
    }
    if (tok_out.empty()) {
      std::fputs(out.str().c_str(), stdout);
    } else {
      std::ofstream f(tok_out);
      f << out.str();
      if (!f) throw std::runtime_error("cannot write " + tok_out);
    }
  });

  auto* detok = app.add_subcommand(
      "detokenize", "decode per-segment token lines back into a .lab file");
  std::string detok_repr = "split", detok_tokens, detok_out;
  double detok_duration = -1;
  detok->add_option("--repr", detok_repr, "merge|split")
      ->check(CLI::IsMember({"merge", "split"}));
  detok->add_option("--tokens", detok_tokens, "token line file")->required();
  detok->add_option("--out", detok_out, "output .lab")->required();
  detok->add_option("--duration", detok_duration,
                    "truncate the song to this length (s)");
  detok->callback([&] {
    acr::TokenSet ts(*acr::repr_from_name(detok_repr));
    std::ifstream in(detok_tokens);
    if (!in) throw std::runtime_error("cannot open " + detok_tokens);
    std::vector<acr::ChordSpan> spans;
    std::string line;
    int segment = 0;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      acr::TokenSequence seq;
      seq.repr = ts.repr();
      std::istringstream ls(line);
      std::string word;
      while (ls >> word) {
        std::optional<int> id;
        if (!word.empty() && (std::isdigit(word[0]) != 0)) {
          id = std::stoi(word);
        } else {
          id = ts.token_from_name(word);
        }
        if (!id || *id < 0 || *id >= ts.size()) {
          throw std::runtime_error("bad token '" + word + "' in segment " +
                                   std::to_string(segment));
        }
        seq.ids.push_back(*id);
      }
      acr::Timeline t = acr::decode(seq, ts);
      double base = segment * acr::kSegmentSeconds;
      for (const auto& s : t.spans()) {
        spans.push_back({base + s.onset, base + s.offset, s.chord});
      }
      ++segment;
    }
    double duration = segment * acr::kSegmentSeconds;
    if (detok_duration > 0) duration = std::min(duration, detok_duration);
    std::erase_if(spans, [&](const acr::ChordSpan& s) {
      return s.onset >= duration - acr::kTimeEps;
    });
    for (auto& s : spans) s.offset = std::min(s.offset, duration);
    acr::write_lab_file(detok_out,
                        acr::Timeline::from_spans(std::move(spans), duration));
  });

  // ---- pretrain / train ----------------------------------------------------
  std::string tr_manifest, tr_config, tr_out, tr_history, tr_cache, tr_pre;
  int tr_fold = 0;
  std::optional<uint64_t> tr_seed;
  auto add_train_opts = [&](CLI::App* cmd, bool with_pretrained) {
    cmd->add_option("--manifest", tr_manifest, "dataset manifest")->required();
    cmd->add_option("--fold", tr_fold, "validation fold")->required();
    cmd->add_option("--config", tr_config, "key = value config file");
    cmd->add_option("--out", tr_out, "output checkpoint")->required();
    cmd->add_option("--history", tr_history, "epoch history JSONL");
    cmd->add_option("--cache", tr_cache, "spectrogram cache directory");
    cmd->add_option("--seed", tr_seed, "override config seed");
    if (with_pretrained) {
      cmd->add_option("--pretrained", tr_pre, "pre-trained encoder checkpoint");
    }
  };
  auto* pretrain = app.add_subcommand(
      "pretrain", "pre-train the encoder on chord-similarity targets");
  add_train_opts(pretrain, false);
  pretrain->callback([&] {
    run_train_like(true, tr_manifest, tr_fold, tr_config, tr_out, tr_history,
                   "", tr_cache, tr_seed);
  });
  auto* train = app.add_subcommand("train", "train the full model");
  add_train_opts(train, true);
  train->callback([&] {
    run_train_like(false, tr_manifest, tr_fold, tr_config, tr_out, tr_history,
                   tr_pre, tr_cache, tr_seed);
  });

  // ---- infer ---------------------------------------------------------------
  auto* infer = app.add_subcommand("infer", "predict .lab files for audio");
  std::string inf_model, inf_manifest, inf_outdir;
  std::vector<std::string> inf_audio;
  infer->add_option("--model", inf_model, "checkpoint")->required();
  infer->add_option("--audio", inf_audio, "WAV files");
  infer->add_option("--manifest", inf_manifest, "dataset manifest");
  infer->add_option("--out-dir", inf_outdir, "output directory")->required();
  infer->callback([&] {
    auto loaded = acr::load_checkpoint(inf_model);
    acr::TokenSet ts(loaded.meta.repr);
    if (!loaded.meta.frame_task &&
        loaded.model->config().vocab != ts.size()) {
      throw std::runtime_error("checkpoint vocab/token-set mismatch");
    }
    std::vector<std::pair<std::string, std::string>> inputs;  // id, path
    for (const auto& a : inf_audio) {
      inputs.emplace_back(fs::path(a).stem().string(), a);
    }
    if (!inf_manifest.empty()) {
      for (const auto& e : acr::read_manifest(inf_manifest)) {
        inputs.emplace_back(e.id, e.audio_path);
      }
    }
    if (inputs.empty()) {
      throw CLI::ValidationError("need --audio or --manifest");
    }
    fs::create_directories(inf_outdir);
    for (const auto& [id, path] : inputs) {
      acr::Waveform audio = acr::read_wav(path);
      acr::Timeline est =
          loaded.meta.frame_task
              ? acr::predict_song_frames(*loaded.model, audio)
              : acr::predict_song(*loaded.model, audio, ts);
      auto out = fs::path(inf_outdir) / (id + ".lab");
      acr::write_lab_file(out.string(), est);
      std::printf("%s\n", out.c_str());
    }
  });

  // ---- eval ------------------------------------------------------------------
  auto* eval = app.add_subcommand(
      "eval", "score estimates against references (WCSR + segmentation)");
  std::string ev_ref, ev_est, ev_table;
  bool ev_json = false;
  eval->add_option("--ref", ev_ref, "reference .lab file or directory")
      ->required();
  eval->add_option("--est", ev_est, "estimate .lab file or directory")
      ->required();
  eval->add_option("--reduction-table", ev_table, "chord reduction table");
  eval->add_flag("--json", ev_json, "machine-readable output");
  eval->callback([&] {
    auto pairs = load_pairs(ev_ref, ev_est, reduction_table(ev_table));
    acr::EvalReport report = acr::evaluate_corpus(pairs);
    if (ev_json) {
      std::printf("%s\n", report_to_json(report).dump(2).c_str());
    } else {
      print_report(report);
    }
  });

  // ---- confusion ---------------------------------------------------------
  auto* confusion = app.add_subcommand(
      "confusion", "root-matched quality confusion matrix");
  std::string cf_ref, cf_est, cf_table;
  bool cf_json = false;
  confusion->add_option("--ref", cf_ref, "reference .lab file or directory")
      ->required();
  confusion->add_option("--est", cf_est, "estimate .lab file or directory")
      ->required();
  confusion->add_option("--reduction-table", cf_table, "chord reduction table");
  confusion->add_flag("--json", cf_json, "machine-readable output");
  confusion->callback([&] {
    auto items = load_pairs(cf_ref, cf_est, reduction_table(cf_table));
    std::vector<std::pair<acr::Timeline, acr::Timeline>> pairs;
    for (auto& [id, ref, est] : items) pairs.emplace_back(ref, est);
    acr::QualityConfusion qc = acr::quality_confusion(pairs);
    if (cf_json) {
      json j;
      for (int r = 0; r < 16; ++r) {
        json row = json::array();
        for (int c = 0; c < 16; ++c) row.push_back(qc.ratio[r][c]);
        j[std::string(acr::confusion_row_name(r))] = row;
      }
      std::printf("%s\n", j.dump(2).c_str());
    } else {
      std::printf("%-8s", "");
      for (int c = 0; c < 16; ++c) {
        std::printf(" %7s", std::string(acr::confusion_row_name(c)).c_str());
      }
      std::printf("\n");
      for (int r = 0; r < 16; ++r) {
        std::printf("%-8s", std::string(acr::confusion_row_name(r)).c_str());
        for (int c = 0; c < 16; ++c) {
          std::printf(" %7s",
                      qc.populated(r) ? fmt3(qc.ratio[r][c]).c_str() : "--");
        }
        std::printf("\n");
      }
    }
  });

  // ---- export-embeddings ---------------------------------------------------
  auto* emb = app.add_subcommand(
      "export-embeddings",
      "pooled encoder vectors with chord labels, one JSON object per segment");
  std::string em_model, em_manifest, em_out, em_cache;
  emb->add_option("--model", em_model, "checkpoint")->required();
  emb->add_option("--manifest", em_manifest, "dataset manifest")->required();
  emb->add_option("--out", em_out, "output JSONL")->required();
  emb->add_option("--cache", em_cache, "spectrogram cache directory");
  emb->callback([&] {
    auto loaded = acr::load_checkpoint(em_model);
    acr::Dataset data = load_dataset(em_manifest, em_cache);
    std::ofstream out(em_out);
    if (!out) throw std::runtime_error("cannot write " + em_out);
    for (const auto& song : data.songs) {
      for (int start = 0; start * acr::kGridSeconds <
                          song.labels.duration() - acr::kTimeEps;
           start += acr::kFramesPerSegment) {
        auto window = acr::slice_frames(song.features, start,
                                        acr::kFramesPerSegment);
        auto pooled =
            acr::Model::pool_embedding(loaded.model->forward_encoder(window));
        // Label: the chord occupying most of the segment.
        auto seg = acr::slice_segment(song.labels,
                                      start * acr::kGridSeconds);
        std::map<int, double> occupancy;
        for (const auto& s : seg.timeline.spans()) {
          occupancy[s.chord.vocab_index()] += s.length();
        }
        auto best = std::max_element(
            occupancy.begin(), occupancy.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
        json j{{"song", song.id},
               {"start", start * acr::kGridSeconds},
               {"label",
                acr::Chord::from_vocab_index(best->first).to_string()},
               {"embedding", pooled}};
        out << j.dump() << '\n';
      }
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
