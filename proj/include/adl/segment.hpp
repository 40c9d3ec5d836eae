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

#ifndef ADL_SEGMENT_HPP_
#define ADL_SEGMENT_HPP_

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "adl/dataset.hpp"
#include "adl/error.hpp"
#include "adl/io.hpp"

namespace adl {

// One classifier input: an averaged, min-max scaled feature vector plus its
// label and provenance. class_id is -1 for inference-time instances.
struct SegmentInstance {
  std::vector<double> features;
  int class_id = -1;
  std::string clip_id;
  std::string subject_id;
};

// Per-dimension training extrema used for min-max scaling.
struct ScalerParams {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t dim() const { return min.size(); }
};

// Non-overlapping windows of `window` consecutive vectors, arithmetic mean
// per window. Yields floor(len / window) outputs; the trailing remainder is
// discarded. Callers segment one clip at a time, so windows never span clips.
inline std::vector<std::vector<double>> segment_average(
    const std::vector<std::vector<double>>& vectors, int window) {
  if (window < 1) throw input_error("segment_average: window must be >= 1");
  std::vector<std::vector<double>> out;
  if (vectors.empty()) return out;
  const std::size_t dim = vectors[0].size();
  const std::size_t w = static_cast<std::size_t>(window);
  const std::size_t n = vectors.size() / w;
  out.reserve(n);
  for (std::size_t g = 0; g < n; ++g) {
    std::vector<double> mean(dim, 0.0);
    for (std::size_t i = 0; i < w; ++i) {
      const auto& v = vectors[g * w + i];
      for (std::size_t d = 0; d < dim; ++d) mean[d] += v[d];
    }
    for (std::size_t d = 0; d < dim; ++d) mean[d] /= static_cast<double>(w);
    out.push_back(std::move(mean));
  }
  return out;
}

// Exact per-dimension min/max over the training features.
inline ScalerParams fit_scaler(const LabeledDataset& train) {
  if (train.empty()) throw input_error("fit_scaler: empty training set");
  const std::size_t dim = train.dim();
  ScalerParams p;
  p.min.assign(dim, 0.0);
  p.max.assign(dim, 0.0);
  for (std::size_t d = 0; d < dim; ++d) {
    p.min[d] = p.max[d] = static_cast<double>(train.feature(0)[d]);
  }
  for (std::size_t i = 1; i < train.size(); ++i) {
    const auto row = train.feature(i);
    for (std::size_t d = 0; d < dim; ++d) {
      const double v = static_cast<double>(row[d]);
      p.min[d] = std::min(p.min[d], v);
      p.max[d] = std::max(p.max[d], v);
    }
  }
  return p;
}

// x' = (x - min) / (max - min), clamped to [0, 1] so unseen test values stay
// inside the training envelope. Degenerate dimensions (max == min) map to 0.
inline double scale_value(double x, double lo, double hi) {
  if (hi == lo) return 0.0;
  const double v = (x - lo) / (hi - lo);
  return std::clamp(v, 0.0, 1.0);
}

inline std::vector<double> apply_scaler(const std::vector<double>& features,
                                        const ScalerParams& params) {
  if (features.size() != params.dim()) {
    throw input_error("apply_scaler: feature length " + std::to_string(features.size()) +
                      " != scaler dim " + std::to_string(params.dim()));
  }
  std::vector<double> out(features.size());
  for (std::size_t d = 0; d < features.size(); ++d) {
    out[d] = scale_value(features[d], params.min[d], params.max[d]);
  }
  return out;
}

// In-place dataset variant.
inline void apply_scaler(LabeledDataset& ds, const ScalerParams& params) {
  if (ds.dim() != params.dim()) {
    throw input_error("apply_scaler: dataset dim " + std::to_string(ds.dim()) +
                      " != scaler dim " + std::to_string(params.dim()));
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    float* row = ds.feature_data(i);
    for (std::size_t d = 0; d < ds.dim(); ++d) {
      row[d] = static_cast<float>(scale_value(static_cast<double>(row[d]), params.min[d], params.max[d]));
    }
  }
}

// Scaler sidecar file: "ADLS" | u16 version | u32 dim | min f64s | max f64s.
inline void save_scaler(const ScalerParams& p, const std::filesystem::path& path) {
  auto out = open_output(path);
  BinaryWriter w(out);
  w.bytes("ADLS", 4);
  w.u16(1);
  w.u32(static_cast<std::uint32_t>(p.dim()));
  for (double v : p.min) w.f64(v);
  for (double v : p.max) w.f64(v);
}

inline ScalerParams load_scaler(const std::filesystem::path& path) {
  auto in = open_input(path);
  BinaryReader r(in, path.string());
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "ADLS", 4) != 0) {
    throw format_error(path.string() + ": bad magic, not a scaler file");
  }
  const std::uint16_t version = r.u16();
  if (version != 1) {
    throw format_error(path.string() + ": unsupported scaler version " + std::to_string(version));
  }
  const std::uint32_t dim = r.u32();
  ScalerParams p;
  p.min.resize(dim);
  p.max.resize(dim);
  for (double& v : p.min) v = r.f64();
  for (double& v : p.max) v = r.f64();
  return p;
}

// Windows a labeled per-vector dataset for training: instances of each class
// are taken in dataset order and averaged in groups of `window`. Provenance
// is dropped (oversampled rows no longer map to a single clip).
inline LabeledDataset segment_labeled_dataset(const LabeledDataset& ds, int window) {
  if (window < 1) throw input_error("segment_labeled_dataset: window must be >= 1");
  const std::size_t dim = ds.dim();
  LabeledDataset out(dim);
  const std::size_t w = static_cast<std::size_t>(window);
  out.reserve(ds.size() / w + kNumClasses);

  std::array<std::vector<std::uint32_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.label(i))].push_back(static_cast<std::uint32_t>(i));
  }
  std::vector<double> mean(dim);
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& members = by_class[static_cast<std::size_t>(c)];
    const std::size_t groups = members.size() / w;
    for (std::size_t g = 0; g < groups; ++g) {
      std::fill(mean.begin(), mean.end(), 0.0);
      for (std::size_t i = 0; i < w; ++i) {
        const auto row = ds.feature(members[g * w + i]);
        for (std::size_t d = 0; d < dim; ++d) mean[d] += static_cast<double>(row[d]);
      }
      for (std::size_t d = 0; d < dim; ++d) mean[d] /= static_cast<double>(w);
      out.push(std::span<const double>(mean.data(), dim), c);
    }
  }
  return out;
}

}  // namespace adl

#endif  // ADL_SEGMENT_HPP_
