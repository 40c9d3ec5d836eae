// Copyright 2026 The adlrec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ADL_PIPELINE_HPP_
#define ADL_PIPELINE_HPP_

#include <algorithm>
#include <array>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "adl/cnn.hpp"
#include "adl/config.hpp"
#include "adl/dataset.hpp"
#include "adl/embedding.hpp"
#include "adl/eval.hpp"
#include "adl/frontend.hpp"
#include "adl/ontology.hpp"
#include "adl/oversample.hpp"
#include "adl/records.hpp"
#include "adl/segment.hpp"
#include "adl/wav.hpp"

namespace adl {

inline LabelMap load_label_map(const PipelineConfig& cfg) {
  return cfg.label_map.empty() ? LabelMap::builtin() : LabelMap::from_csv(cfg.label_map);
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

struct ExtractSummary {
  std::size_t files_ok = 0;
  std::size_t files_failed = 0;
  std::size_t clips = 0;
  std::size_t vectors = 0;
};

namespace detail {

struct WavJob {
  std::filesystem::path path;
  std::set<std::string> labels;
};

// A single file takes the configured labels. A directory contributes its
// immediate *.wav files (unlabeled) and one level of subdirectories whose
// names become the raw label of the files inside. Paths are sorted so output
// records are reproducible.
inline std::vector<WavJob> collect_wav_jobs(const std::filesystem::path& input,
                                            const PipelineConfig& cfg) {
  std::vector<WavJob> jobs;
  auto is_wav = [](const std::filesystem::path& p) {
    return p.extension() == ".wav" || p.extension() == ".WAV";
  };
  if (std::filesystem::is_regular_file(input)) {
    WavJob job{input, {}};
    for (const auto& l : cfg.labels) job.labels.insert(l);
    jobs.push_back(std::move(job));
    return jobs;
  }
  if (!std::filesystem::is_directory(input)) {
    throw input_error("extract: input not found: " + input.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(input)) {
    if (entry.is_regular_file() && is_wav(entry.path())) {
      jobs.push_back(WavJob{entry.path(), {}});
    } else if (entry.is_directory()) {
      const std::string label = entry.path().filename().string();
      for (const auto& sub : std::filesystem::directory_iterator(entry.path())) {
        if (sub.is_regular_file() && is_wav(sub.path())) {
          jobs.push_back(WavJob{sub.path(), {label}});
        }
      }
    }
  }
  std::sort(jobs.begin(), jobs.end(),
            [](const WavJob& a, const WavJob& b) { return a.path.string() < b.path.string(); });
  return jobs;
}

}  // namespace detail

// WAV -> log-mel patches -> raw embeddings -> PCA/quantization -> .adle.
// Undecodable files are skipped with a logged reason; it is an input error
// when nothing could be processed. PCA parameters are loaded from
// cfg.pca_records when set, otherwise fit on this run's raw embeddings.
inline ExtractSummary run_extract(const std::filesystem::path& input,
                                  const std::filesystem::path& out_records,
                                  const PipelineConfig& cfg, std::ostream& log = std::cerr) {
  const auto jobs = detail::collect_wav_jobs(input, cfg);
  if (jobs.empty()) throw input_error("extract: no .wav inputs under " + input.string());

  const StandinExtractor extractor(cfg.extractor_seed);
  const FrontendConfig fc;

  struct PendingClip {
    std::string clip_id;
    std::set<std::string> labels;
    std::vector<RawEmbedding> raws;
  };
  std::vector<PendingClip> pending;
  ExtractSummary summary;

  for (const auto& job : jobs) {
    try {
      const PcmSignal wav = load_wav(job.path);
      const PcmSignal mono = resample_mono(wav);
      const auto frames = log_mel_spectrogram(mono, fc);
      if (!cfg.dump_mel_dir.empty()) {
        write_mel_csv(std::filesystem::path(cfg.dump_mel_dir) /
                          (job.path.stem().string() + "_mel.csv"),
                      frames);
      }
      const auto patches = frame_examples(frames, fc);
      PendingClip clip;
      clip.clip_id = job.path.stem().string();
      clip.labels = job.labels;
      clip.raws.reserve(patches.size());
      for (const auto& patch : patches) clip.raws.push_back(extract(patch, extractor));
      if (clip.raws.empty()) {
        log << "extract: skipping " << job.path.string() << ": shorter than one 0.96 s patch\n";
        ++summary.files_failed;
        continue;
      }
      pending.push_back(std::move(clip));
      ++summary.files_ok;
    } catch (const Error& e) {
      log << "extract: skipping " << job.path.string() << ": " << e.what() << "\n";
      ++summary.files_failed;
    }
  }
  if (pending.empty()) {
    throw input_error("extract: no usable audio among " + std::to_string(jobs.size()) + " files");
  }

  PcaParams pca;
  if (!cfg.pca_records.empty()) {
    pca = read_records(cfg.pca_records).pca;
  } else {
    std::vector<RawEmbedding> all;
    for (const auto& c : pending) all.insert(all.end(), c.raws.begin(), c.raws.end());
    pca = all.size() >= 2 ? fit_pca(all) : PcaParams::identity();
  }

  std::vector<EmbeddingClip> clips;
  clips.reserve(pending.size());
  for (const auto& p : pending) {
    EmbeddingClip clip;
    clip.clip_id = p.clip_id;
    clip.raw_labels = p.labels;
    clip.subject_id = cfg.subject;
    clip.vectors.reserve(p.raws.size());
    for (const auto& raw : p.raws) clip.vectors.push_back(postprocess(raw, pca));
    summary.vectors += clip.vectors.size();
    clips.push_back(std::move(clip));
  }
  summary.clips = clips.size();
  write_records(clips, out_records, pca);
  if (cfg.export_csv) {
    export_embeddings_csv(RecordFile{pca, clips}, out_records.string() + ".csv");
  }
  return summary;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

// Flattens labeled clips into one per-vector dataset (dequantized floats),
// tagging every row with its source clip for provenance-aware consumers.
inline LabeledDataset clips_to_dataset(const std::vector<LabeledClip>& clips,
                                       const PcaParams& pca) {
  LabeledDataset ds(kEmbeddingDim);
  std::size_t total = 0;
  for (const auto& lc : clips) total += lc.clip.vectors.size();
  ds.reserve(total);
  for (const auto& lc : clips) {
    const std::uint32_t src = ds.add_source(lc.clip.clip_id, lc.clip.subject_id);
    for (const auto& v : lc.clip.vectors) {
      const auto deq = dequantize(v, pca);
      ds.push(std::span<const double>(deq.data(), deq.size()), lc.class_id, src);
    }
  }
  return ds;
}

struct TrainSummary {
  std::size_t clips_used = 0;
  std::size_t clips_dropped = 0;
  std::size_t train_instances = 0;
  std::size_t val_instances = 0;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
  std::vector<EpochStats> history;
};

// records -> co-occurrence filter -> 90/10 split -> oversample the training
// side -> window/average -> min-max scale -> train. Saves the checkpoint,
// a scaler sidecar (<model>.scaler), and <model>.history.csv.
inline TrainSummary run_train(const PipelineConfig& cfg, std::ostream& log = std::cerr) {
  if (cfg.records.empty()) throw input_error("train: no records path configured");
  if (cfg.model.empty()) throw input_error("train: no model path configured");

  const RecordFile file = read_records(cfg.records);
  const LabelMap map = load_label_map(cfg);
  const auto labeled = filter_cooccurrence(file.clips, map);

  TrainSummary summary;
  summary.clips_used = labeled.size();
  summary.clips_dropped = file.clips.size() - labeled.size();

  std::set<int> classes_present;
  for (const auto& lc : labeled) classes_present.insert(lc.class_id);
  if (classes_present.size() < 2) {
    throw input_error("train: need at least 2 activity classes after label filtering, got " +
                      std::to_string(classes_present.size()));
  }

  const LabeledDataset per_vector = clips_to_dataset(labeled, file.pca);
  log << "train: " << per_vector.size() << " embedding vectors from " << labeled.size()
      << " clips (" << summary.clips_dropped << " dropped by co-occurrence filter)\n";

  SplitResult split = split_train_val(per_vector, cfg.split_ratio, cfg.split_seed);

  std::vector<SmoteLogEntry> smote_entries;
  LabeledDataset balanced = apply_resample(
      split.train, cfg.resample, cfg.smote_log.empty() ? nullptr : &smote_entries);
  if (!cfg.smote_log.empty() && cfg.resample.method == ResampleMethod::smote) {
    write_smote_log_csv(cfg.smote_log, smote_entries);
  }

  LabeledDataset train_seg = segment_labeled_dataset(balanced, cfg.window);
  LabeledDataset val_seg = segment_labeled_dataset(split.val, cfg.window);
  if (train_seg.empty() || val_seg.empty()) {
    throw input_error("train: window " + std::to_string(cfg.window) +
                      " leaves no instances; lower --window or add data");
  }

  const ScalerParams scaler = fit_scaler(train_seg);
  apply_scaler(train_seg, scaler);
  apply_scaler(val_seg, scaler);
  summary.train_instances = train_seg.size();
  summary.val_instances = val_seg.size();
  log << "train: " << train_seg.size() << " training / " << val_seg.size()
      << " validation instances at window " << cfg.window << "\n";

  const CnnSpec spec;  // deployed shape: 128 x 1 -> 19/20/30 -> 500 -> 15
  TrainResult result = train(train_seg, val_seg, spec, cfg.train);
  summary.best_epoch = result.best_epoch;
  summary.best_val_accuracy = result.best_val_accuracy;
  summary.history = result.history;

  save_model(result.model, cfg.model);
  save_scaler(scaler, cfg.model + ".scaler");
  {
    auto out = open_output(cfg.model + ".history.csv", /*binary=*/false);
    out << "epoch,train_loss,val_accuracy\n";
    for (const auto& e : result.history) {
      out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.val_accuracy)
          << '\n';
    }
  }
  log << "train: best validation accuracy " << format_double(result.best_val_accuracy)
      << " at epoch " << result.best_epoch << "\n";
  return summary;
}

// ---------------------------------------------------------------------------
// eval / sweep
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<int> topk_from_probs(const std::vector<double>& probs, int k) {
  std::vector<int> order(probs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (probs[static_cast<std::size_t>(a)] != probs[static_cast<std::size_t>(b)]) {
      return probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(b)];
    }
    return a < b;
  });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

}  // namespace detail

// Evaluates a checkpoint over labeled records at one window size: clips are
// windowed individually (windows never span clips), averaged, scaled with
// the frozen training scaler, and classified.
inline EvalReport evaluate_records(const CnnModel& model, const ScalerParams& scaler,
                                   const RecordFile& file, const LabelMap& map, int window,
                                   const std::string& subject_override,
                                   const std::vector<int>& ks = {1, 3}) {
  const CnnSpec& spec = model.spec();
  if (spec.input_len != kEmbeddingDim) {
    throw format_error("eval: checkpoint input length " + std::to_string(spec.input_len) +
                       " does not match embedding dim " + std::to_string(kEmbeddingDim));
  }
  if (scaler.dim() != static_cast<std::size_t>(spec.input_len)) {
    throw format_error("eval: scaler dim " + std::to_string(scaler.dim()) +
                       " does not match model input " + std::to_string(spec.input_len));
  }
  const auto labeled = filter_cooccurrence(file.clips, map);
  if (labeled.empty()) throw input_error("eval: no labeled clips after co-occurrence filtering");

  for (const auto& lc : labeled) {
    if (lc.class_id >= spec.num_classes) {
      throw format_error("eval: class id " + std::to_string(lc.class_id) +
                         " out of range for a " + std::to_string(spec.num_classes) +
                         "-class checkpoint");
    }
  }

  int max_k = 3;
  for (const int k : ks) {
    if (k < 1 || k > spec.num_classes) {
      throw input_error("eval: k must be in [1, " + std::to_string(spec.num_classes) + "], got " +
                        std::to_string(k));
    }
    max_k = std::max(max_k, k);
  }
  const int k = std::min(spec.num_classes, max_k);
  Workspace ws(spec);
  std::vector<EvalInstance> instances;
  for (const auto& lc : labeled) {
    std::vector<std::vector<double>> vectors;
    vectors.reserve(lc.clip.vectors.size());
    for (const auto& v : lc.clip.vectors) {
      const auto deq = dequantize(v, file.pca);
      vectors.emplace_back(deq.begin(), deq.end());
    }
    const auto averaged = segment_average(vectors, window);
    for (const auto& features : averaged) {
      const auto scaled = apply_scaler(features, scaler);
      forward_into(model, scaled, ws);
      EvalInstance inst;
      inst.subject = !subject_override.empty()
                         ? subject_override
                         : (lc.clip.subject_id.empty() ? "anon" : lc.clip.subject_id);
      inst.truth = lc.class_id;
      inst.topk = detail::topk_from_probs(ws.probs, k);
      instances.push_back(std::move(inst));
    }
  }
  if (instances.empty()) {
    throw input_error("eval: window " + std::to_string(window) +
                      " leaves no instances; clips may be too short");
  }
  return build_report(instances, ks);
}

inline EvalReport run_eval(const PipelineConfig& cfg, std::ostream& log = std::cerr) {
  if (cfg.records.empty()) throw input_error("eval: no records path configured");
  if (cfg.model.empty()) throw input_error("eval: no model path configured");
  const CnnModel model = load_model(cfg.model);
  const ScalerParams scaler = load_scaler(cfg.model + ".scaler");
  const RecordFile file = read_records(cfg.records);
  const LabelMap map = load_label_map(cfg);

  const EvalReport report =
      evaluate_records(model, scaler, file, map, cfg.window, cfg.subject_override, cfg.eval_ks);
  write_report(report, cfg.reports);
  log << "eval: weighted top-1 " << format_double(report.top1_weighted_mean) << ", top-3 "
      << format_double(report.top3_weighted_mean) << ", F-score "
      << format_double(report.overall_f1) << " -> " << cfg.reports << "\n";
  return report;
}

struct SweepPoint {
  int window;
  double top1_weighted_mean;
  double top3_weighted_mean;
  double overall_f1;
};

// Re-segments the evaluation data at each window size and writes one report
// directory per window plus a sweep_summary.csv.
inline std::vector<SweepPoint> run_sweep(const PipelineConfig& cfg, std::ostream& log = std::cerr) {
  if (cfg.records.empty()) throw input_error("sweep: no records path configured");
  if (cfg.model.empty()) throw input_error("sweep: no model path configured");
  const CnnModel model = load_model(cfg.model);
  const ScalerParams scaler = load_scaler(cfg.model + ".scaler");
  const RecordFile file = read_records(cfg.records);
  const LabelMap map = load_label_map(cfg);

  std::vector<SweepPoint> points;
  for (const int w : cfg.sweep_windows) {
    const EvalReport report =
        evaluate_records(model, scaler, file, map, w, cfg.subject_override, cfg.eval_ks);
    const auto dir = std::filesystem::path(cfg.reports) / ("sweep_w" + std::to_string(w));
    write_report(report, dir);
    points.push_back(SweepPoint{w, report.top1_weighted_mean, report.top3_weighted_mean,
                                report.overall_f1});
    log << "sweep: window " << w << " -> F-score " << format_double(report.overall_f1) << "\n";
  }
  auto out = open_output(std::filesystem::path(cfg.reports) / "sweep_summary.csv",
                         /*binary=*/false);
  out << "window,top1_weighted_mean,top3_weighted_mean,overall_f1\n";
  for (const auto& p : points) {
    out << p.window << ',' << format_double(p.top1_weighted_mean) << ','
        << format_double(p.top3_weighted_mean) << ',' << format_double(p.overall_f1) << '\n';
  }
  return points;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictRow {
  double start_time;  // seconds into the recording
  std::array<std::pair<int, double>, 3> top3;  // (class id, probability)
};

// Classifies one recording segment by segment. PCA parameters must come from
// the same records the model was trained on (cfg.pca_records); without them
// an identity transform is used and a warning logged.
inline std::vector<PredictRow> run_predict(const std::filesystem::path& wav_path,
                                           const PipelineConfig& cfg,
                                           std::ostream& log = std::cerr) {
  if (cfg.model.empty()) throw input_error("predict: no model path configured");
  const CnnModel model = load_model(cfg.model);
  const ScalerParams scaler = load_scaler(cfg.model + ".scaler");

  PcaParams pca;
  if (!cfg.pca_records.empty()) {
    pca = read_records(cfg.pca_records).pca;
  } else {
    pca = PcaParams::identity();
    log << "predict: no --pca-records given; using identity PCA, which matches training only "
           "if extraction also used it\n";
  }

  const FrontendConfig fc;
  const PcmSignal mono = resample_mono(load_wav(wav_path));
  const auto patches = frame_examples(log_mel_spectrogram(mono, fc), fc);
  const double segment_seconds =
      static_cast<double>(cfg.window) * fc.patch_frames * fc.hop_samples / fc.sample_rate;
  if (static_cast<int>(patches.size()) < cfg.window) {
    throw input_error("predict: audio too short: need at least " +
                      format_double(segment_seconds) + " s (" + std::to_string(cfg.window) +
                      " embedding vectors), got " + std::to_string(patches.size()));
  }

  const StandinExtractor extractor(cfg.extractor_seed);
  std::vector<std::vector<double>> vectors;
  vectors.reserve(patches.size());
  for (const auto& patch : patches) {
    const auto deq = dequantize(postprocess(extract(patch, extractor), pca), pca);
    vectors.emplace_back(deq.begin(), deq.end());
  }
  const auto averaged = segment_average(vectors, cfg.window);

  Workspace ws(model.spec());
  std::vector<PredictRow> rows;
  rows.reserve(averaged.size());
  for (std::size_t i = 0; i < averaged.size(); ++i) {
    const auto scaled = apply_scaler(averaged[i], scaler);
    forward_into(model, scaled, ws);
    const auto top = detail::topk_from_probs(ws.probs, std::min(3, model.spec().num_classes));
    PredictRow row;
    row.start_time = static_cast<double>(i) * segment_seconds;
    for (std::size_t j = 0; j < 3; ++j) {
      if (j < top.size()) {
        row.top3[j] = {top[j], ws.probs[static_cast<std::size_t>(top[j])]};
      } else {
        row.top3[j] = {-1, 0.0};
      }
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace adl

#endif  // ADL_PIPELINE_HPP_
