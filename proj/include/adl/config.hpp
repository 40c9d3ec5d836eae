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

#ifndef ADL_CONFIG_HPP_
#define ADL_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "adl/cnn.hpp"
#include "adl/error.hpp"
#include "adl/io.hpp"
#include "adl/oversample.hpp"

namespace adl {

// Everything a pipeline run needs. Defaults reproduce the deployed setting:
// window 10, random oversampling, 90/10 split, all seeds 0, and the training
// regime lr 0.001 / decay 1e-6 / Nesterov 0.9 / batch 100 / <= 20 epochs.
struct PipelineConfig {
  // [paths]
  std::string records;
  std::string model;
  std::string reports = "reports";
  std::string label_map;    // empty -> builtin Table of 15 activities
  std::string pca_records;  // reuse PCA parameters from this record file

  // [extract]
  std::uint64_t extractor_seed = 0;
  std::string subject = "anon";
  std::vector<std::string> labels;  // raw labels for single-file extraction
  bool export_csv = false;
  std::string dump_mel_dir;

  // [resample]
  ResampleConfig resample;
  std::string smote_log;  // optional CSV of (class, x, n, lambda)

  // [segment]
  int window = 10;

  // [split]
  double split_ratio = 0.9;
  std::uint64_t split_seed = 0;

  // [train]
  TrainConfig train;

  // [eval]
  std::vector<int> eval_ks = {1, 3};
  std::vector<int> sweep_windows = {1, 3, 5, 10, 15};
  std::string subject_override;  // force all instances onto one subject

  // Sets every seed field at once ("--seed" behavior).
  void set_all_seeds(std::uint64_t seed) {
    extractor_seed = seed;
    resample.seed = seed;
    split_seed = seed;
    train.seed = seed;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = detail::trim(item);
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

// Line-based "key = value" file with [section] headers and '#' comments.
// Keys are returned as "section.key"; keys before any section are bare.
inline std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path) {
  auto in = open_input(path, /*binary=*/false);
  std::map<std::string, std::string> values;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw format_error(path.string() + ":" + std::to_string(line_no) + ": unterminated section");
      }
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw format_error(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) {
      throw format_error(path.string() + ":" + std::to_string(line_no) + ": empty key");
    }
    values[section.empty() ? key : section + "." + key] = value;
  }
  return values;
}

// Applies file values onto defaults. CLI flags are applied afterwards, so a
// flag with the same name always wins.
inline void apply_config_values(PipelineConfig& cfg,
                                const std::map<std::string, std::string>& values) {
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second;
  };
  try {
    if (const auto* v = get("paths.records")) cfg.records = *v;
    if (const auto* v = get("paths.model")) cfg.model = *v;
    if (const auto* v = get("paths.reports")) cfg.reports = *v;
    if (const auto* v = get("paths.label_map")) cfg.label_map = *v;
    if (const auto* v = get("paths.pca_records")) cfg.pca_records = *v;

    if (const auto* v = get("extract.extractor_seed")) cfg.extractor_seed = std::stoull(*v);
    if (const auto* v = get("extract.subject")) cfg.subject = *v;

    if (const auto* v = get("resample.method")) cfg.resample.method = parse_resample_method(*v);
    if (const auto* v = get("resample.k_neighbors")) cfg.resample.k_neighbors = std::stoi(*v);
    if (const auto* v = get("resample.seed")) cfg.resample.seed = std::stoull(*v);
    if (const auto* v = get("resample.smote_log")) cfg.smote_log = *v;

    if (const auto* v = get("segment.window")) cfg.window = std::stoi(*v);

    if (const auto* v = get("split.ratio")) cfg.split_ratio = std::stod(*v);
    if (const auto* v = get("split.seed")) cfg.split_seed = std::stoull(*v);

    if (const auto* v = get("train.learning_rate")) cfg.train.learning_rate = std::stod(*v);
    if (const auto* v = get("train.decay")) cfg.train.decay = std::stod(*v);
    if (const auto* v = get("train.momentum")) cfg.train.momentum = std::stod(*v);
    if (const auto* v = get("train.batch_size")) cfg.train.batch_size = std::stoi(*v);
    if (const auto* v = get("train.max_epochs")) cfg.train.max_epochs = std::stoi(*v);
    if (const auto* v = get("train.patience")) cfg.train.patience = std::stoi(*v);
    if (const auto* v = get("train.seed")) cfg.train.seed = std::stoull(*v);

    if (const auto* v = get("eval.k")) cfg.eval_ks = parse_int_list(*v);
    if (const auto* v = get("eval.sweep_windows")) cfg.sweep_windows = parse_int_list(*v);
    if (const auto* v = get("eval.subject")) cfg.subject_override = *v;
  } catch (const std::invalid_argument&) {
    throw format_error("config: malformed numeric value");
  } catch (const std::out_of_range&) {
    throw format_error("config: numeric value out of range");
  }
}

inline void load_config_file(PipelineConfig& cfg, const std::filesystem::path& path) {
  apply_config_values(cfg, parse_config_file(path));
}

}  // namespace adl

#endif  // ADL_CONFIG_HPP_
