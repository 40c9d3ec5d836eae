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

// adlrec: end-to-end driver for the ambient-audio activity recognition
// pipeline. Subcommands: extract, train, eval, predict, sweep.
//
// Exit codes: 0 success, 2 input error, 3 format error, 4 numeric error.

#include <cstdlib>
#include <sstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adl/adl.hpp"

namespace {

struct CliState {
  adl::PipelineConfig cfg;
  std::string config_path;
  bool seed_set = false;
  std::uint64_t seed = 0;
};

void finalize_config(CliState& state) {
  // Precedence: defaults < config file < individual flags (CLI11 has already
  // written flag values into cfg) < --seed, which overrides every seed field.
  if (state.seed_set) state.cfg.set_all_seeds(state.seed);
  if (const char* dir = std::getenv("ADL_REPORT_DIR"); dir != nullptr && *dir != '\0') {
    state.cfg.reports = dir;
  }
}

void add_common_flags(CLI::App* cmd, CliState& state) {
  cmd->add_option("--config", state.config_path, "key = value configuration file")
      ->check(CLI::ExistingFile);
  cmd->add_option_function<std::uint64_t>(
         "--seed",
         [&state](const std::uint64_t& v) {
           state.seed = v;
           state.seed_set = true;
         },
         "override every seed field at once");
  cmd->add_option("--label-map", state.cfg.label_map,
                  "label association CSV (default: built-in map)");
}

int run(int argc, char** argv) {
  CliState state;
  adl::PipelineConfig& cfg = state.cfg;

  CLI::App app{"adlrec: recognize 15 home activities from ambient audio"};
  app.require_subcommand(1);

  std::string input_path;
  std::string out_records;
  std::string wav_path;
  std::string labels_csv;

  auto* extract = app.add_subcommand("extract", "WAV audio -> .adle embedding records");
  add_common_flags(extract, state);
  extract->add_option("input", input_path, "WAV file, or directory (subdirectory name = label)")
      ->required();
  extract->add_option("output", out_records, ".adle output path")->required();
  extract->add_option("--subject", cfg.subject, "subject id stored in the records");
  extract->add_option("--label", labels_csv, "comma-separated raw labels for a single file");
  extract->add_option("--extractor-seed", cfg.extractor_seed, "stand-in extractor seed");
  extract->add_option("--pca-records", cfg.pca_records,
                      "reuse PCA parameters from this .adle file");
  extract->add_flag("--export-csv", cfg.export_csv, "also write <output>.csv");
  extract->add_option("--dump-mel", cfg.dump_mel_dir, "directory for log-mel frame CSV dumps");

  auto* train = app.add_subcommand("train", "train the classifier from records");
  add_common_flags(train, state);
  train->add_option("records", cfg.records, ".adle training records")->required();
  train->add_option("model", cfg.model, "checkpoint output path")->required();
  train->add_option("--resample", [&cfg](const std::vector<std::string>& vals) {
    cfg.resample.method = adl::parse_resample_method(vals.at(0));
    return true;
  }, "oversampling method: none|random|smote")->expected(1);
  train->add_option("--k-neighbors", cfg.resample.k_neighbors, "SMOTE neighbor count");
  train->add_option("--window", cfg.window, "segmentation window in embedding vectors");
  train->add_option("--split-ratio", cfg.split_ratio, "training fraction of the split");
  train->add_option("--learning-rate", cfg.train.learning_rate, "SGD learning rate");
  train->add_option("--decay", cfg.train.decay, "learning-rate decay per update");
  train->add_option("--momentum", cfg.train.momentum, "Nesterov momentum");
  train->add_option("--batch-size", cfg.train.batch_size, "minibatch size");
  train->add_option("--max-epochs", cfg.train.max_epochs, "epoch budget");
  train->add_option("--patience", cfg.train.patience, "early-stopping patience in epochs");
  train->add_option("--smote-log", cfg.smote_log, "CSV log of SMOTE synthetics");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on labeled records");
  add_common_flags(eval, state);
  eval->add_option("model", cfg.model, "checkpoint path")->required();
  eval->add_option("records", cfg.records, ".adle records with labels")->required();
  eval->add_option("--window", cfg.window, "segmentation window in embedding vectors");
  eval->add_option("--k", [&cfg](const std::vector<std::string>& vals) {
    cfg.eval_ks = adl::parse_int_list(vals.at(0));
    return true;
  }, "comma-separated top-k list (reports cover k=1,3)")->expected(1);
  eval->add_option("--reports", cfg.reports, "report output directory");
  eval->add_option("--subject", cfg.subject_override, "force all instances onto one subject");

  auto* predict = app.add_subcommand("predict", "per-segment top-3 labels for one recording");
  add_common_flags(predict, state);
  predict->add_option("model", cfg.model, "checkpoint path")->required();
  predict->add_option("wav", wav_path, "16-bit PCM WAV recording")->required();
  predict->add_option("--window", cfg.window, "segmentation window in embedding vectors");
  predict->add_option("--extractor-seed", cfg.extractor_seed, "stand-in extractor seed");
  predict->add_option("--pca-records", cfg.pca_records,
                      "records file whose PCA parameters match the model");

  auto* sweep = app.add_subcommand("sweep", "evaluate across segmentation window sizes");
  add_common_flags(sweep, state);
  sweep->add_option("model", cfg.model, "checkpoint path")->required();
  sweep->add_option("records", cfg.records, ".adle records with labels")->required();
  sweep->add_option("--windows", [&cfg](const std::vector<std::string>& vals) {
    cfg.sweep_windows = adl::parse_int_list(vals.at(0));
    return true;
  }, "comma-separated window sizes (default 1,3,5,10,15)")->expected(1);
  sweep->add_option("--reports", cfg.reports, "report output directory");
  sweep->add_option("--subject", cfg.subject_override, "force all instances onto one subject");

  // Parse twice so the config file loads before flags override it.
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (!state.config_path.empty()) {
    adl::load_config_file(cfg, state.config_path);
    try {
      app.clear();
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      return app.exit(e);
    }
  }
  finalize_config(state);
  if (!labels_csv.empty()) {
    std::stringstream ss(labels_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) cfg.labels.push_back(item);
    }
  }

  if (extract->parsed()) {
    const auto summary = adl::run_extract(input_path, out_records, cfg);
    std::cout << "extracted " << summary.vectors << " embedding vectors from " << summary.clips
              << " clips (" << summary.files_failed << " files skipped) -> " << out_records
              << "\n";
    if (summary.files_ok == 0) return 2;
  } else if (train->parsed()) {
    const auto summary = adl::run_train(cfg);
    std::cout << "trained on " << summary.train_instances << " instances; best val accuracy "
              << adl::format_double(summary.best_val_accuracy) << " at epoch "
              << summary.best_epoch << " -> " << cfg.model << "\n";
  } else if (eval->parsed()) {
    const auto report = adl::run_eval(cfg);
    std::cout << "weighted top-1 " << adl::format_double(report.top1_weighted_mean)
              << ", weighted top-3 " << adl::format_double(report.top3_weighted_mean)
              << ", overall F-score " << adl::format_double(report.overall_f1) << " -> "
              << cfg.reports << "\n";
  } else if (predict->parsed()) {
    const auto rows = adl::run_predict(wav_path, cfg);
    std::cout << "start_sec";
    for (int j = 1; j <= 3; ++j) std::cout << ",label" << j << ",p" << j;
    std::cout << "\n";
    for (const auto& row : rows) {
      std::cout << adl::format_double(row.start_time);
      for (const auto& [cls, p] : row.top3) {
        std::cout << ',' << (cls >= 0 ? adl::class_name(cls) : "-") << ','
                  << adl::format_double(p);
      }
      std::cout << "\n";
    }
  } else if (sweep->parsed()) {
    const auto points = adl::run_sweep(cfg);
    for (const auto& p : points) {
      std::cout << "window " << p.window << ": F-score " << adl::format_double(p.overall_f1)
                << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const adl::Error& e) {
    std::cerr << "adlrec: " << e.what() << "\n";
    return adl::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "adlrec: " << e.what() << "\n";
    return 1;
  }
}
