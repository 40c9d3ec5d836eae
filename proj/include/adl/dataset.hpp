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

#ifndef ADL_DATASET_HPP_
#define ADL_DATASET_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adl/error.hpp"
#include "adl/ontology.hpp"
#include "adl/rng.hpp"

namespace adl {

// Feature rows are stored flat (size * dim floats) so the oversampled
// millions-of-rows case stays one allocation instead of one per instance.
// Provenance (clip/subject) is optional; synthetic fixtures skip it.
class LabeledDataset {
 public:
  static constexpr std::uint32_t kNoSource = 0xFFFFFFFFu;

  struct SourceRef {
    std::string clip_id;
    std::string subject_id;
  };

  explicit LabeledDataset(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  void reserve(std::size_t n) {
    features_.reserve(n * dim_);
    labels_.reserve(n);
  }

  std::uint32_t add_source(std::string clip_id, std::string subject_id) {
    sources_.push_back(SourceRef{std::move(clip_id), std::move(subject_id)});
    return static_cast<std::uint32_t>(sources_.size() - 1);
  }

  void push(std::span<const float> feature, int label, std::uint32_t source = kNoSource) {
    check_push(feature.size(), label);
    features_.insert(features_.end(), feature.begin(), feature.end());
    labels_.push_back(static_cast<std::uint8_t>(label));
    push_source(source);
  }

  void push(std::span<const double> feature, int label, std::uint32_t source = kNoSource) {
    check_push(feature.size(), label);
    for (double v : feature) features_.push_back(static_cast<float>(v));
    labels_.push_back(static_cast<std::uint8_t>(label));
    push_source(source);
  }

  std::span<const float> feature(std::size_t i) const {
    return {features_.data() + i * dim_, dim_};
  }
  float* feature_data(std::size_t i) { return features_.data() + i * dim_; }
  int label(std::size_t i) const { return labels_[i]; }

  std::uint32_t source_index(std::size_t i) const {
    return source_index_.empty() ? kNoSource : source_index_[i];
  }
  const SourceRef* source(std::size_t i) const {
    const std::uint32_t s = source_index(i);
    return s == kNoSource ? nullptr : &sources_[s];
  }
  const std::vector<SourceRef>& sources() const { return sources_; }

  // Copies row i of `other` (dims must match).
  void push_row_of(const LabeledDataset& other, std::size_t i) {
    push(other.feature(i), other.label(i), kNoSource);
  }

 private:
  void check_push(std::size_t got, int label) {
    if (got != dim_) {
      throw input_error("LabeledDataset: feature length " + std::to_string(got) +
                        " != dim " + std::to_string(dim_));
    }
    if (label < 0 || label >= kNumClasses) {
      throw input_error("LabeledDataset: class id out of range: " + std::to_string(label));
    }
  }

  // The index column is materialized only once a real source shows up.
  void push_source(std::uint32_t source) {
    if (source == kNoSource && source_index_.empty()) return;
    if (source_index_.size() + 1 < labels_.size()) {
      source_index_.resize(labels_.size() - 1, kNoSource);
    }
    source_index_.push_back(source);
  }

  std::size_t dim_;
  std::vector<float> features_;
  std::vector<std::uint8_t> labels_;
  std::vector<std::uint32_t> source_index_;
  std::vector<SourceRef> sources_;
};

inline std::array<std::int64_t, kNumClasses> class_histogram(const LabeledDataset& ds) {
  std::array<std::int64_t, kNumClasses> counts{};
  for (std::size_t i = 0; i < ds.size(); ++i) counts[static_cast<std::size_t>(ds.label(i))]++;
  return counts;
}

struct SplitResult {
  LabeledDataset train;
  LabeledDataset val;
};

// Seeded-shuffle partition: round(ratio * N) instances go to train, the rest
// to validation. Instance order within each side follows the shuffle.
inline SplitResult split_train_val(const LabeledDataset& ds, double ratio = 0.9,
                                   std::uint64_t seed = 0) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw input_error("split_train_val: ratio must be in (0, 1)");
  }
  if (ds.size() < 2) {
    throw input_error("split_train_val: need at least 2 instances, got " +
                      std::to_string(ds.size()));
  }
  std::vector<std::uint64_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const std::size_t train_n =
      static_cast<std::size_t>(std::llround(ratio * static_cast<double>(ds.size())));

  SplitResult out{LabeledDataset(ds.dim()), LabeledDataset(ds.dim())};
  out.train.reserve(train_n);
  out.val.reserve(ds.size() - train_n);

  // Source table is copied wholesale; indices stay valid on both sides.
  for (const auto& s : ds.sources()) {
    out.train.add_source(s.clip_id, s.subject_id);
    out.val.add_source(s.clip_id, s.subject_id);
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t src = static_cast<std::size_t>(order[i]);
    LabeledDataset& side = i < train_n ? out.train : out.val;
    side.push(ds.feature(src), ds.label(src), ds.source_index(src));
  }
  return out;
}

}  // namespace adl

#endif  // ADL_DATASET_HPP_
