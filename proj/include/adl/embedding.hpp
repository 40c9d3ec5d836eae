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

#ifndef ADL_EMBEDDING_HPP_
#define ADL_EMBEDDING_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "adl/error.hpp"
#include "adl/frontend.hpp"
#include "adl/rng.hpp"

namespace adl {

inline constexpr int kEmbeddingDim = 128;

// Extractor output before postprocessing.
struct RawEmbedding {
  std::array<double, kEmbeddingDim> values{};
};

// Final 8-bit quantized embedding, one per 0.96 s of audio.
struct EmbeddingVector {
  std::array<std::uint8_t, kEmbeddingDim> values{};

  bool operator==(const EmbeddingVector&) const = default;
};

// An audio clip's worth of embeddings plus its source metadata. raw_labels
// hold ontology display-name strings; subject_id is empty when unknown.
struct EmbeddingClip {
  std::string clip_id;
  std::set<std::string> raw_labels;
  std::string subject_id;
  std::vector<EmbeddingVector> vectors;

  bool operator==(const EmbeddingClip&) const = default;
};

// PCA projection (rows are principal directions), mean, and the clip range
// used for quantization. fit_pca produces an orthonormal rotation; parameters
// loaded from elsewhere may fold whitening scales into the rows.
struct PcaParams {
  std::array<double, kEmbeddingDim> mean{};
  std::vector<double> projection;  // kEmbeddingDim x kEmbeddingDim, row-major
  double clip_min = -2.0;
  double clip_max = 2.0;

  static PcaParams identity() {
    PcaParams p;
    p.projection.assign(static_cast<std::size_t>(kEmbeddingDim) * kEmbeddingDim, 0.0);
    for (int i = 0; i < kEmbeddingDim; ++i) {
      p.projection[static_cast<std::size_t>(i) * kEmbeddingDim + i] = 1.0;
    }
    return p;
  }

  bool operator==(const PcaParams&) const = default;
};

// Contract for the feature-extraction network seam. Implementations must be
// deterministic for a fixed instance.
class EmbeddingExtractor {
 public:
  virtual ~EmbeddingExtractor() = default;
  virtual RawEmbedding extract_raw(const MelPatch& patch) const = 0;
  virtual std::string name() const = 0;
};

// Deterministic stand-in for a trained extractor: a fixed seeded random
// projection of the flattened patch followed by tanh. Shape-correct and
// cheap, but NOT acoustically meaningful -- it exists so the pipeline can
// run end to end without the released network weights.
//
// Weight generation rule (tests re-derive it independently): with Rng(seed),
// w[i][j] for i in [0, rows*cols), j in [0, 128) are drawn in i-major order
// as uniform(-1, 1) / sqrt(rows*cols). Output j = tanh(sum_i x[i] * w[i][j])
// over the row-major flattened patch.
class StandinExtractor final : public EmbeddingExtractor {
 public:
  explicit StandinExtractor(std::uint64_t seed = 0, int patch_rows = 96, int patch_cols = 64)
      : seed_(seed), rows_(patch_rows), cols_(patch_cols) {
    const std::size_t n = static_cast<std::size_t>(rows_) * cols_;
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    weights_.resize(n * kEmbeddingDim);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
      for (int j = 0; j < kEmbeddingDim; ++j) {
        weights_[i * kEmbeddingDim + j] = rng.uniform(-1.0, 1.0) * scale;
      }
    }
  }

  RawEmbedding extract_raw(const MelPatch& patch) const override {
    if (patch.rows != rows_ || patch.cols != cols_) {
      throw input_error("StandinExtractor: patch is " + std::to_string(patch.rows) + "x" +
                        std::to_string(patch.cols) + ", expected " + std::to_string(rows_) + "x" +
                        std::to_string(cols_));
    }
    RawEmbedding out;
    std::array<double, kEmbeddingDim> acc{};
    const std::size_t n = patch.values.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double x = patch.values[i];
      if (x == 0.0) continue;
      const double* wrow = &weights_[i * kEmbeddingDim];
      for (int j = 0; j < kEmbeddingDim; ++j) acc[static_cast<std::size_t>(j)] += x * wrow[j];
    }
    for (int j = 0; j < kEmbeddingDim; ++j) {
      out.values[static_cast<std::size_t>(j)] = std::tanh(acc[static_cast<std::size_t>(j)]);
    }
    return out;
  }

  std::string name() const override { return "standin(seed=" + std::to_string(seed_) + ")"; }

 private:
  std::uint64_t seed_;
  int rows_, cols_;
  std::vector<double> weights_;
};

// Extraction seam: runs the extractor and tags any failure with the patch
// identity so batch callers can report which input broke.
inline RawEmbedding extract(const MelPatch& patch, const EmbeddingExtractor& extractor) {
  try {
    return extractor.extract_raw(patch);
  } catch (const Error& e) {
    throw Error(e.code(), "extract(" + extractor.name() + ", patch at " +
                              format_double(patch.start_time) + "s): " + e.what());
  } catch (const std::exception& e) {
    throw input_error("extract(" + extractor.name() + ", patch at " +
                      format_double(patch.start_time) + "s): " + e.what());
  }
}

// PCA transform, clip to [clip_min, clip_max], then quantize to 8 bits with
// round-half-up.
inline EmbeddingVector postprocess(const RawEmbedding& raw, const PcaParams& pca) {
  if (pca.clip_max <= pca.clip_min) {
    throw input_error("postprocess: clip_max must exceed clip_min");
  }
  if (pca.projection.size() != static_cast<std::size_t>(kEmbeddingDim) * kEmbeddingDim) {
    throw input_error("postprocess: projection must be 128x128");
  }
  EmbeddingVector out;
  const double range = pca.clip_max - pca.clip_min;
  std::array<double, kEmbeddingDim> centered;
  for (int i = 0; i < kEmbeddingDim; ++i) {
    centered[static_cast<std::size_t>(i)] =
        raw.values[static_cast<std::size_t>(i)] - pca.mean[static_cast<std::size_t>(i)];
  }
  for (int r = 0; r < kEmbeddingDim; ++r) {
    const double* row = &pca.projection[static_cast<std::size_t>(r) * kEmbeddingDim];
    double y = 0.0;
    for (int i = 0; i < kEmbeddingDim; ++i) y += row[i] * centered[static_cast<std::size_t>(i)];
    if (y < pca.clip_min) y = pca.clip_min;
    if (y > pca.clip_max) y = pca.clip_max;
    const double q = std::floor((y - pca.clip_min) / range * 255.0 + 0.5);
    out.values[static_cast<std::size_t>(r)] = static_cast<std::uint8_t>(q);
  }
  return out;
}

// Inverse of the quantization step: byte 0 -> clip_min, byte 255 -> clip_max.
inline std::array<double, kEmbeddingDim> dequantize(const EmbeddingVector& v,
                                                    const PcaParams& pca) {
  std::array<double, kEmbeddingDim> out;
  const double range = pca.clip_max - pca.clip_min;
  for (int i = 0; i < kEmbeddingDim; ++i) {
    out[static_cast<std::size_t>(i)] =
        pca.clip_min + static_cast<double>(v.values[static_cast<std::size_t>(i)]) / 255.0 * range;
  }
  return out;
}

namespace detail {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Rows of `vectors`
// end up holding the eigenvectors. Sizes here are 128x128, where this
// converges in a handful of sweeps.
inline void jacobi_eigen(std::vector<double>& a, int n, std::vector<double>& eigenvalues,
                         std::vector<double>& vectors) {
  vectors.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) vectors[static_cast<std::size_t>(i) * n + i] = 1.0;
  auto at = [&](int r, int c) -> double& { return a[static_cast<std::size_t>(r) * n + c]; };
  auto vt = [&](int r, int c) -> double& { return vectors[static_cast<std::size_t>(r) * n + c]; };

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += at(p, q) * at(p, q);
    if (off < 1e-22) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vpk = vt(p, k), vqk = vt(q, k);
          vt(p, k) = c * vpk - s * vqk;
          vt(q, k) = s * vpk + c * vqk;
        }
      }
    }
  }
  eigenvalues.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) eigenvalues[static_cast<std::size_t>(i)] = at(i, i);
}

}  // namespace detail

// Fits PCA from raw embeddings: sample mean plus eigenvectors of the sample
// covariance, sorted by descending eigenvalue. The projection is a pure
// rotation (orthonormal rows); no whitening scale is applied, and the clip
// range is taken as given.
inline PcaParams fit_pca(const std::vector<RawEmbedding>& samples, double clip_min = -2.0,
                         double clip_max = 2.0) {
  if (samples.empty()) throw input_error("fit_pca: no samples");
  if (clip_max <= clip_min) throw input_error("fit_pca: clip_max must exceed clip_min");
  const int d = kEmbeddingDim;
  PcaParams p;
  p.clip_min = clip_min;
  p.clip_max = clip_max;

  const double inv_n = 1.0 / static_cast<double>(samples.size());
  for (const auto& s : samples)
    for (int i = 0; i < d; ++i) p.mean[static_cast<std::size_t>(i)] += s.values[static_cast<std::size_t>(i)];
  for (int i = 0; i < d; ++i) p.mean[static_cast<std::size_t>(i)] *= inv_n;

  std::vector<double> cov(static_cast<std::size_t>(d) * d, 0.0);
  std::vector<double> centered(static_cast<std::size_t>(d));
  for (const auto& s : samples) {
    for (int i = 0; i < d; ++i)
      centered[static_cast<std::size_t>(i)] =
          s.values[static_cast<std::size_t>(i)] - p.mean[static_cast<std::size_t>(i)];
    for (int i = 0; i < d; ++i) {
      const double ci = centered[static_cast<std::size_t>(i)];
      if (ci == 0.0) continue;
      double* row = &cov[static_cast<std::size_t>(i) * d];
      for (int j = i; j < d; ++j) row[j] += ci * centered[static_cast<std::size_t>(j)];
    }
  }
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      const double v = cov[static_cast<std::size_t>(i) * d + j] * inv_n;
      cov[static_cast<std::size_t>(i) * d + j] = v;
      cov[static_cast<std::size_t>(j) * d + i] = v;
    }

  std::vector<double> eigenvalues, vectors;
  detail::jacobi_eigen(cov, d, eigenvalues, vectors);

  std::vector<int> order(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return eigenvalues[static_cast<std::size_t>(a)] > eigenvalues[static_cast<std::size_t>(b)];
  });

  p.projection.resize(static_cast<std::size_t>(d) * d);
  for (int r = 0; r < d; ++r) {
    const int src = order[static_cast<std::size_t>(r)];
    // jacobi_eigen accumulates eigenvectors in rows of `vectors` already.
    for (int c = 0; c < d; ++c) {
      p.projection[static_cast<std::size_t>(r) * d + c] =
          vectors[static_cast<std::size_t>(src) * d + c];
    }
    // Fix a deterministic sign: first nonzero entry positive.
    for (int c = 0; c < d; ++c) {
      const double v = p.projection[static_cast<std::size_t>(r) * d + c];
      if (v != 0.0) {
        if (v < 0.0)
          for (int k = 0; k < d; ++k) p.projection[static_cast<std::size_t>(r) * d + k] *= -1.0;
        break;
      }
    }
  }
  return p;
}

}  // namespace adl

#endif  // ADL_EMBEDDING_HPP_
