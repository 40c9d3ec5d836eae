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

#ifndef ADL_OVERSAMPLE_HPP_
#define ADL_OVERSAMPLE_HPP_

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#endif

#include "adl/dataset.hpp"
#include "adl/error.hpp"
#include "adl/io.hpp"
#include "adl/rng.hpp"

namespace adl {

enum class ResampleMethod { none, random, smote };

inline const char* resample_method_name(ResampleMethod m) {
  switch (m) {
    case ResampleMethod::none: return "none";
    case ResampleMethod::random: return "random";
    case ResampleMethod::smote: return "smote";
  }
  return "?";
}

inline ResampleMethod parse_resample_method(const std::string& s) {
  if (s == "none") return ResampleMethod::none;
  if (s == "random") return ResampleMethod::random;
  if (s == "smote") return ResampleMethod::smote;
  throw input_error("unknown resample method '" + s + "' (expected none|random|smote)");
}

struct ResampleConfig {
  ResampleMethod method = ResampleMethod::random;
  int k_neighbors = 5;
  std::uint64_t seed = 0;
};

// One SMOTE synthetic's provenance: dataset indices of the base point x and
// chosen neighbor n, plus the interpolation factor.
struct SmoteLogEntry {
  int class_id;
  std::uint32_t x_index;
  std::uint32_t n_index;
  double lambda;
};

namespace detail {

struct ClassMembers {
  std::array<std::vector<std::uint32_t>, kNumClasses> by_class;
  std::int64_t majority = 0;

  explicit ClassMembers(const LabeledDataset& ds) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      by_class[static_cast<std::size_t>(ds.label(i))].push_back(static_cast<std::uint32_t>(i));
    }
    for (const auto& m : by_class) {
      majority = std::max(majority, static_cast<std::int64_t>(m.size()));
    }
  }
};

inline float dist2_generic(const float* x, const float* y, std::size_t dim) {
  float acc[8] = {};
  std::size_t d = 0;
  for (; d + 8 <= dim; d += 8) {
    for (int l = 0; l < 8; ++l) {
      const float dd = x[d + static_cast<std::size_t>(l)] - y[d + static_cast<std::size_t>(l)];
      acc[l] += dd * dd;
    }
  }
  for (; d < dim; ++d) {
    const float dd = x[d] - y[d];
    acc[0] += dd * dd;
  }
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

#if defined(__AVX2__) && defined(__FMA__)
inline __m128 hsum4(__m256 a0, __m256 a1, __m256 a2, __m256 a3) {
  const __m256 h01 = _mm256_hadd_ps(a0, a1);
  const __m256 h23 = _mm256_hadd_ps(a2, a3);
  const __m256 h = _mm256_hadd_ps(h01, h23);
  return _mm_add_ps(_mm256_castps256_ps128(h), _mm256_extractf128_ps(h, 1));
}

// Four query rows against one member row in a single pass; dim must be a
// multiple of 8. Returns the four dot products.
inline void dot4_fma(const float* const* xs, const float* y, std::size_t dim, float* out) {
  __m256 a0 = _mm256_setzero_ps(), a1 = a0, a2 = a0, a3 = a0;
  for (std::size_t d = 0; d < dim; d += 8) {
    const __m256 yv = _mm256_loadu_ps(y + d);
    a0 = _mm256_fmadd_ps(_mm256_loadu_ps(xs[0] + d), yv, a0);
    a1 = _mm256_fmadd_ps(_mm256_loadu_ps(xs[1] + d), yv, a1);
    a2 = _mm256_fmadd_ps(_mm256_loadu_ps(xs[2] + d), yv, a2);
    a3 = _mm256_fmadd_ps(_mm256_loadu_ps(xs[3] + d), yv, a3);
  }
  _mm_storeu_ps(out, hsum4(a0, a1, a2, a3));
}

// 4 query rows x 2 member rows register tile: six loads feed eight FMAs per
// 8-float step, which keeps the FMA ports busy instead of the load ports.
// The DIM template fixes the trip count of the hot loop (128 in production)
// so it unrolls fully; DIM == 0 selects the runtime-length fallback.
template <std::size_t DIM>
inline void dot4x2_fma(const float* const* xs, const float* y0, const float* y1, std::size_t dim,
                       float* out) {
  __m256 a00 = _mm256_setzero_ps(), a10 = a00, a20 = a00, a30 = a00;
  __m256 a01 = a00, a11 = a00, a21 = a00, a31 = a00;
  const std::size_t n = DIM == 0 ? dim : DIM;
  for (std::size_t d = 0; d < n; d += 8) {
    const __m256 m0 = _mm256_loadu_ps(y0 + d);
    const __m256 m1 = _mm256_loadu_ps(y1 + d);
    const __m256 q0 = _mm256_loadu_ps(xs[0] + d);
    a00 = _mm256_fmadd_ps(q0, m0, a00);
    a01 = _mm256_fmadd_ps(q0, m1, a01);
    const __m256 q1 = _mm256_loadu_ps(xs[1] + d);
    a10 = _mm256_fmadd_ps(q1, m0, a10);
    a11 = _mm256_fmadd_ps(q1, m1, a11);
    const __m256 q2 = _mm256_loadu_ps(xs[2] + d);
    a20 = _mm256_fmadd_ps(q2, m0, a20);
    a21 = _mm256_fmadd_ps(q2, m1, a21);
    const __m256 q3 = _mm256_loadu_ps(xs[3] + d);
    a30 = _mm256_fmadd_ps(q3, m0, a30);
    a31 = _mm256_fmadd_ps(q3, m1, a31);
  }
  _mm_storeu_ps(out, hsum4(a00, a10, a20, a30));
  _mm_storeu_ps(out + 4, hsum4(a01, a11, a21, a31));
}
#endif

// Exact k-nearest-neighbor lists (excluding self) for the given query
// positions within one class. Brute force; squared distances are computed in
// single precision, and ties break toward the lower member position.
//
// The SIMD path splits the work in two: query rows against non-query member
// rows (each pair offered to one candidate list) and query rows against each
// other (each pair computed once and offered to both sides). Work items are
// distributed over threads that fill thread-local candidate lists, merged by
// a final sort, so results are identical for any thread count. The portable
// fallback is a plain full scan.
inline void knn_for_queries(const LabeledDataset& ds, const std::vector<std::uint32_t>& members,
                            const std::vector<std::uint32_t>& query_positions, int k,
                            std::vector<std::uint32_t>& out) {
  const std::size_t dim = ds.dim();
  const std::size_t m = members.size();
  const std::size_t q = query_positions.size();
  const std::size_t ks = static_cast<std::size_t>(k);
  out.assign(q * ks, 0);
  const std::pair<float, std::uint32_t> kFar{std::numeric_limits<float>::infinity(), 0xFFFFFFFFu};

#if defined(__AVX2__) && defined(__FMA__)
  if (dim % 8 == 0 && dim > 0) {
    std::vector<float> norms(m);
    for (std::size_t mi = 0; mi < m; ++mi) {
      const float* y = ds.feature(members[mi]).data();
      float s = 0.f;
      for (std::size_t d = 0; d < dim; ++d) s += y[d] * y[d];
      norms[mi] = s;
    }

    // Member positions that are not themselves queries.
    std::vector<std::uint8_t> is_query(m, 0);
    for (const std::uint32_t qp : query_positions) is_query[qp] = 1;
    std::vector<std::uint32_t> rect;
    rect.reserve(m - std::min(m, q));
    for (std::uint32_t mi = 0; mi < m; ++mi) {
      if (!is_query[mi]) rect.push_back(mi);
    }

    const std::size_t qblock = 256;
    const std::size_t n_qblocks = (q + qblock - 1) / qblock;

    // Work items: one rectangular pass per query block, then every ordered
    // pair of query blocks for the symmetric part.
    struct Task {
      std::uint32_t bi, bj;  // bj == 0xFFFFFFFF marks a rectangular pass
    };
    std::vector<Task> tasks;
    for (std::uint32_t b = 0; b < n_qblocks; ++b) tasks.push_back({b, 0xFFFFFFFFu});
    for (std::uint32_t bi = 0; bi < n_qblocks; ++bi) {
      for (std::uint32_t bj = bi; bj < n_qblocks; ++bj) tasks.push_back({bi, bj});
    }

    const unsigned n_threads = std::max<unsigned>(
        1, std::min<unsigned>(std::thread::hardware_concurrency(),
                              static_cast<unsigned>(tasks.size())));

    // Thread-local candidate lists, merged after the parallel phase.
    std::vector<std::vector<std::pair<float, std::uint32_t>>> local_best(
        n_threads, std::vector<std::pair<float, std::uint32_t>>(q * ks, kFar));
    std::vector<std::vector<float>> local_worst(
        n_threads, std::vector<float>(q, std::numeric_limits<float>::infinity()));

    auto run_thread = [&](unsigned tid) {
      auto& best = local_best[tid];
      auto& worst = local_worst[tid];

      auto offer = [&](std::size_t qi, float dist, std::uint32_t mi) {
        auto* h = &best[qi * ks];
        std::size_t w = 0;
        for (std::size_t j = 1; j < ks; ++j) {
          if (h[j] > h[w]) w = j;
        }
        if (std::pair<float, std::uint32_t>{dist, mi} < h[w]) {
          h[w] = {dist, mi};
          w = 0;
          for (std::size_t j = 1; j < ks; ++j) {
            if (h[j] > h[w]) w = j;
          }
          worst[qi] = h[w].first;
        }
      };

      const __m256 minus_two = _mm256_set1_ps(-2.0f);
      std::vector<const float*> qrow(qblock), mrow(qblock);

      // 4 query rows against a stretch of candidate member rows, two at a
      // time; one vector compare against the current worsts filters the
      // common case. `sym_base` is set when the candidates are themselves
      // queries, so each distance is offered to both sides.
      auto tile_pass = [&](std::size_t qi0, std::size_t qn, const float* const* qptr,
                           const float* qn4_src, const std::uint32_t* qpos,
                           const std::uint32_t* cand, const float* const* crow, std::size_t nc,
                           const std::uint32_t* sym_base) {
        for (std::size_t g = 0; g + 4 <= qn; g += 4) {
          const float* xs[4] = {qptr[g], qptr[g + 1], qptr[g + 2], qptr[g + 3]};
          float warr[4] = {worst[qi0 + g], worst[qi0 + g + 1], worst[qi0 + g + 2],
                           worst[qi0 + g + 3]};
          const __m256 qn4 =
              _mm256_setr_ps(qn4_src[g], qn4_src[g + 1], qn4_src[g + 2], qn4_src[g + 3],
                             qn4_src[g], qn4_src[g + 1], qn4_src[g + 2], qn4_src[g + 3]);
          std::size_t c = 0;
          for (; c + 2 <= nc; c += 2) {
            alignas(32) float dots[8];
            if (dim == 128) {
              dot4x2_fma<128>(xs, crow[c], crow[c + 1], dim, dots);
            } else {
              dot4x2_fma<0>(xs, crow[c], crow[c + 1], dim, dots);
            }
            const float yn0 = norms[cand[c]];
            const float yn1 = norms[cand[c + 1]];
            const __m256 ynv = _mm256_setr_ps(yn0, yn0, yn0, yn0, yn1, yn1, yn1, yn1);
            const __m256 d2v =
                _mm256_fmadd_ps(minus_two, _mm256_load_ps(dots), _mm256_add_ps(qn4, ynv));
            alignas(32) float d2s[8];
            _mm256_store_ps(d2s, d2v);

            if (sym_base != nullptr) {
              // Offer to the candidate side unconditionally; its worst
              // thresholds are not in the vector compare.
              for (std::size_t l = 0; l < 8; ++l) {
                const std::size_t cq = sym_base[c + (l >> 2)];
                const float d2 = std::max(d2s[l], 0.0f);
                if (d2 < worst[cq]) offer(cq, d2, qpos[g + (l & 3)]);
              }
            }
            const __m128 w4 = _mm_loadu_ps(warr);
            int mask = _mm256_movemask_ps(_mm256_cmp_ps(d2v, _mm256_set_m128(w4, w4), _CMP_LT_OQ));
            while (mask != 0) {
              const int bit = __builtin_ctz(static_cast<unsigned>(mask));
              mask &= mask - 1;
              const std::size_t l = static_cast<std::size_t>(bit) & 3;
              const std::uint32_t mpos = cand[c + (static_cast<std::size_t>(bit) >> 2)];
              if (qpos[g + l] != mpos) {
                offer(qi0 + g + l, std::max(d2s[static_cast<std::size_t>(bit)], 0.0f), mpos);
                warr[l] = worst[qi0 + g + l];
              }
            }
          }
          for (; c < nc; ++c) {
            float dots[4];
            dot4_fma(xs, crow[c], dim, dots);
            for (std::size_t l = 0; l < 4; ++l) {
              const float d2 = std::max(qn4_src[g + l] + norms[cand[c]] - 2.0f * dots[l], 0.0f);
              if (sym_base != nullptr && d2 < worst[sym_base[c]]) {
                offer(sym_base[c], d2, qpos[g + l]);
              }
              if (qpos[g + l] != cand[c] && d2 < warr[l]) {
                offer(qi0 + g + l, d2, cand[c]);
                warr[l] = worst[qi0 + g + l];
              }
            }
          }
        }
        // Remainder queries of the group (fewer than 4).
        for (std::size_t g = qn - qn % 4; g < qn; ++g) {
          const float* x = qptr[g];
          for (std::size_t c = 0; c < nc; ++c) {
            const float* y = crow[c];
            float dot = 0.f;
            for (std::size_t d = 0; d < dim; ++d) dot += x[d] * y[d];
            const float d2 = std::max(qn4_src[g] + norms[cand[c]] - 2.0f * dot, 0.0f);
            if (sym_base != nullptr && d2 < worst[sym_base[c]]) {
              offer(sym_base[c], d2, qpos[g]);
            }
            if (qpos[g] != cand[c] && d2 < worst[qi0 + g]) offer(qi0 + g, d2, cand[c]);
          }
        }
      };

      std::vector<float> qn_arr(qblock);
      std::vector<std::uint32_t> sym_idx(qblock);
      for (std::size_t t = tid; t < tasks.size(); t += n_threads) {
        const Task task = tasks[t];
        const std::size_t qi0 = static_cast<std::size_t>(task.bi) * qblock;
        const std::size_t qn = std::min(qblock, q - qi0);
        for (std::size_t g = 0; g < qn; ++g) {
          qrow[g] = ds.feature(members[query_positions[qi0 + g]]).data();
          qn_arr[g] = norms[query_positions[qi0 + g]];
        }
        if (task.bj == 0xFFFFFFFFu) {
          // Rectangular pass over the non-query members, in L2-sized chunks.
          const std::size_t chunk = 256;
          for (std::size_t c0 = 0; c0 < rect.size(); c0 += chunk) {
            const std::size_t nc = std::min(chunk, rect.size() - c0);
            for (std::size_t c = 0; c < nc; ++c) {
              mrow[c] = ds.feature(members[rect[c0 + c]]).data();
            }
            tile_pass(qi0, qn, qrow.data(), qn_arr.data(), &query_positions[qi0], &rect[c0],
                      mrow.data(), nc, nullptr);
          }
        } else if (task.bi == task.bj) {
          // In-block symmetric part: strict upper triangle, pair by pair.
          for (std::size_t a = 0; a < qn; ++a) {
            const float* x = qrow[a];
            for (std::size_t b = a + 1; b < qn; ++b) {
              const float* y = qrow[b];
              float dot = 0.f;
              for (std::size_t d = 0; d < dim; ++d) dot += x[d] * y[d];
              const float d2 = std::max(qn_arr[a] + qn_arr[b] - 2.0f * dot, 0.0f);
              if (d2 < worst[qi0 + a]) offer(qi0 + a, d2, query_positions[qi0 + b]);
              if (d2 < worst[qi0 + b]) offer(qi0 + b, d2, query_positions[qi0 + a]);
            }
          }
        } else {
          // Cross-block symmetric part: block bi queries vs block bj queries.
          const std::size_t cj0 = static_cast<std::size_t>(task.bj) * qblock;
          const std::size_t ncj = std::min(qblock, q - cj0);
          for (std::size_t c = 0; c < ncj; ++c) {
            mrow[c] = ds.feature(members[query_positions[cj0 + c]]).data();
            sym_idx[c] = static_cast<std::uint32_t>(cj0 + c);
          }
          tile_pass(qi0, qn, qrow.data(), qn_arr.data(), &query_positions[qi0],
                    &query_positions[cj0], mrow.data(), ncj, sym_idx.data());
        }
      }
    };

    if (n_threads <= 1) {
      run_thread(0);
    } else {
      std::vector<std::thread> workers;
      workers.reserve(n_threads);
      for (unsigned tid = 0; tid < n_threads; ++tid) workers.emplace_back(run_thread, tid);
      for (auto& w : workers) w.join();
    }

    // Merge thread-local candidates; a full sort keeps the tie rule intact
    // no matter which thread saw which pair.
    std::vector<std::pair<float, std::uint32_t>> merged;
    merged.reserve(n_threads * ks);
    for (std::size_t qi = 0; qi < q; ++qi) {
      merged.clear();
      for (unsigned tid = 0; tid < n_threads; ++tid) {
        const auto* h = &local_best[tid][qi * ks];
        merged.insert(merged.end(), h, h + ks);
      }
      std::sort(merged.begin(), merged.end());
      for (std::size_t j = 0; j < ks; ++j) out[qi * ks + j] = merged[j].second;
    }
    return;
  }
#endif

  // Portable reference path: plain blocked full scan.
  const std::size_t block = 256;
  const std::size_t n_blocks = (q + block - 1) / block;
  auto run_block = [&](std::size_t b) {
    const std::size_t q0 = b * block;
    const std::size_t q1 = std::min(q0 + block, q);
    const std::size_t nq = q1 - q0;
    std::vector<std::pair<float, std::uint32_t>> best(nq * ks, kFar);
    std::vector<std::pair<float, std::uint32_t>> worst(nq, kFar);
    std::vector<const float*> qrow(nq);
    for (std::size_t qi = 0; qi < nq; ++qi) {
      qrow[qi] = ds.feature(members[query_positions[q0 + qi]]).data();
    }
    for (std::size_t mi = 0; mi < m; ++mi) {
      const float* yrow = ds.feature(members[mi]).data();
      for (std::size_t qi = 0; qi < nq; ++qi) {
        if (query_positions[q0 + qi] == mi) continue;  // exclude self
        const std::pair<float, std::uint32_t> cand{dist2_generic(qrow[qi], yrow, dim),
                                                   static_cast<std::uint32_t>(mi)};
        if (!(cand < worst[qi])) continue;
        auto* h = &best[qi * ks];
        std::size_t w = 0;
        for (std::size_t j = 1; j < ks; ++j) {
          if (h[j] > h[w]) w = j;
        }
        h[w] = cand;
        w = 0;
        for (std::size_t j = 1; j < ks; ++j) {
          if (h[j] > h[w]) w = j;
        }
        worst[qi] = h[w];
      }
    }
    for (std::size_t qi = 0; qi < nq; ++qi) {
      auto* h = &best[qi * ks];
      std::sort(h, h + ks);
      for (std::size_t j = 0; j < ks; ++j) out[(q0 + qi) * ks + j] = h[j].second;
    }
  };

  unsigned n_threads = std::min<unsigned>(std::thread::hardware_concurrency(),
                                          static_cast<unsigned>(n_blocks));
  if (n_threads <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(n_threads);
  for (unsigned t = 0; t < n_threads; ++t) {
    workers.emplace_back([&, t]() {
      for (std::size_t b = t; b < n_blocks; b += n_threads) run_block(b);
    });
  }
  for (auto& w : workers) w.join();
}

}  // namespace detail

// Balances every present class up to the majority count by duplicating
// uniformly drawn existing members. Output keeps the input rows in order,
// followed by the copies grouped by ascending class id; each class draws
// from its own stream seeded with seed + class id, so results do not depend
// on scheduling.
inline LabeledDataset random_oversample(const LabeledDataset& ds, std::uint64_t seed) {
  if (ds.empty()) throw input_error("random_oversample: empty dataset, cannot balance");
  detail::ClassMembers cm(ds);

  std::int64_t total = static_cast<std::int64_t>(ds.size());
  for (const auto& members : cm.by_class) {
    if (!members.empty()) total += cm.majority - static_cast<std::int64_t>(members.size());
  }

  LabeledDataset out(ds.dim());
  out.reserve(static_cast<std::size_t>(total));
  for (std::size_t i = 0; i < ds.size(); ++i) out.push_row_of(ds, i);

  for (int c = 0; c < kNumClasses; ++c) {
    const auto& members = cm.by_class[static_cast<std::size_t>(c)];
    if (members.empty()) continue;
    const std::int64_t needed = cm.majority - static_cast<std::int64_t>(members.size());
    Rng rng(seed + static_cast<std::uint64_t>(c));
    for (std::int64_t j = 0; j < needed; ++j) {
      const std::uint32_t pick = members[rng.below(members.size())];
      out.push_row_of(ds, pick);
    }
  }
  return out;
}

// SMOTE: balances minority classes with synthetic points x + lambda*(n - x),
// where x is a seeded-uniform class member, n one of its k nearest same-class
// neighbors (exact Euclidean), and lambda uniform in [0, 1). Classes are
// processed in ascending id order with per-class seeds. When `log` is given,
// one entry per synthetic records (class, x, n, lambda) with dataset indices.
inline LabeledDataset smote(const LabeledDataset& ds, int k, std::uint64_t seed,
                            std::vector<SmoteLogEntry>* log = nullptr) {
  if (ds.empty()) throw input_error("smote: empty dataset, cannot balance");
  if (k < 1) throw input_error("smote: k_neighbors must be >= 1");
  detail::ClassMembers cm(ds);

  std::int64_t total = static_cast<std::int64_t>(ds.size());
  for (const auto& members : cm.by_class) {
    if (!members.empty()) total += cm.majority - static_cast<std::int64_t>(members.size());
  }

  LabeledDataset out(ds.dim());
  out.reserve(static_cast<std::size_t>(total));
  for (std::size_t i = 0; i < ds.size(); ++i) out.push_row_of(ds, i);

  const std::size_t dim = ds.dim();
  std::vector<float> synth(dim);

  for (int c = 0; c < kNumClasses; ++c) {
    const auto& members = cm.by_class[static_cast<std::size_t>(c)];
    if (members.empty()) continue;
    const std::int64_t needed = cm.majority - static_cast<std::int64_t>(members.size());
    if (needed == 0) continue;
    if (static_cast<std::int64_t>(members.size()) <= k) {
      throw input_error("smote: class '" + std::string(class_name(c)) + "' has " +
                        std::to_string(members.size()) + " members, needs more than k=" +
                        std::to_string(k) + " to synthesize neighbors");
    }

    // Draw everything first so the random stream is independent of how the
    // neighbor search is scheduled.
    Rng rng(seed + static_cast<std::uint64_t>(c));
    std::vector<std::uint32_t> x_pos(static_cast<std::size_t>(needed));
    std::vector<std::uint32_t> n_choice(static_cast<std::size_t>(needed));
    std::vector<double> lambda(static_cast<std::size_t>(needed));
    for (std::int64_t j = 0; j < needed; ++j) {
      x_pos[static_cast<std::size_t>(j)] = static_cast<std::uint32_t>(rng.below(members.size()));
      n_choice[static_cast<std::size_t>(j)] =
          static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(k)));
      lambda[static_cast<std::size_t>(j)] = rng.uniform();
    }

    // Neighbor lists for the distinct base points actually drawn.
    std::vector<std::uint32_t> distinct;
    std::vector<std::uint32_t> query_slot(members.size(), 0xFFFFFFFFu);
    for (const std::uint32_t xp : x_pos) {
      if (query_slot[xp] == 0xFFFFFFFFu) {
        query_slot[xp] = static_cast<std::uint32_t>(distinct.size());
        distinct.push_back(xp);
      }
    }
    std::vector<std::uint32_t> neighbors;
    detail::knn_for_queries(ds, members, distinct, k, neighbors);

    for (std::int64_t j = 0; j < needed; ++j) {
      const std::uint32_t xp = x_pos[static_cast<std::size_t>(j)];
      const std::uint32_t slot = query_slot[xp];
      const std::uint32_t np =
          neighbors[static_cast<std::size_t>(slot) * static_cast<std::size_t>(k) +
                    n_choice[static_cast<std::size_t>(j)]];
      const std::uint32_t xi = members[xp];
      const std::uint32_t ni = members[np];
      const double lam = lambda[static_cast<std::size_t>(j)];
      const float* x = ds.feature(xi).data();
      const float* n = ds.feature(ni).data();
      for (std::size_t d = 0; d < dim; ++d) {
        synth[d] = static_cast<float>(static_cast<double>(x[d]) +
                                      lam * (static_cast<double>(n[d]) - static_cast<double>(x[d])));
      }
      out.push(std::span<const float>(synth.data(), dim), c);
      if (log != nullptr) log->push_back(SmoteLogEntry{c, xi, ni, lam});
    }
  }
  return out;
}

inline LabeledDataset apply_resample(const LabeledDataset& ds, const ResampleConfig& cfg,
                                     std::vector<SmoteLogEntry>* log = nullptr) {
  switch (cfg.method) {
    case ResampleMethod::none: {
      LabeledDataset out(ds.dim());
      out.reserve(ds.size());
      for (std::size_t i = 0; i < ds.size(); ++i) out.push_row_of(ds, i);
      return out;
    }
    case ResampleMethod::random: return random_oversample(ds, cfg.seed);
    case ResampleMethod::smote: return smote(ds, cfg.k_neighbors, cfg.seed, log);
  }
  throw input_error("apply_resample: bad method");
}

// Debug log columns: class,x_index,n_index,lambda.
inline void write_smote_log_csv(const std::filesystem::path& path,
                                const std::vector<SmoteLogEntry>& entries) {
  auto out = open_output(path, /*binary=*/false);
  out << "class,x_index,n_index,lambda\n";
  for (const auto& e : entries) {
    out << e.class_id << ',' << e.x_index << ',' << e.n_index << ',' << format_double(e.lambda)
        << '\n';
  }
}

}  // namespace adl

#endif  // ADL_OVERSAMPLE_HPP_
