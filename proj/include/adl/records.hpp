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

#ifndef ADL_RECORDS_HPP_
#define ADL_RECORDS_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "adl/embedding.hpp"
#include "adl/error.hpp"
#include "adl/io.hpp"

namespace adl {

// ".adle" embedding record file, little-endian throughout:
//
//   magic "ADLE" | version u16
//   pca: mean 128 f64 | projection 128*128 f64 | clip_min f64 | clip_max f64
//   clip_count u32
//   per clip: clip_id (u32 len + bytes)
//             label_count u32, then each label (u32 len + bytes)
//             subject_id (u32 len + bytes; empty when unknown)
//             vector_count u32, then vector_count * 128 raw bytes
//
// The quantization range travels in the header, so readers honor whatever
// range the writer used.
struct RecordFile {
  PcaParams pca;
  std::vector<EmbeddingClip> clips;

  bool operator==(const RecordFile&) const = default;
};

inline constexpr char kRecordMagic[4] = {'A', 'D', 'L', 'E'};
inline constexpr std::uint16_t kRecordVersion = 1;

inline void write_records(const std::vector<EmbeddingClip>& clips,
                          const std::filesystem::path& path,
                          const PcaParams& pca = PcaParams::identity()) {
  auto out = open_output(path);
  BinaryWriter w(out);
  w.bytes(kRecordMagic, 4);
  w.u16(kRecordVersion);
  for (double m : pca.mean) w.f64(m);
  if (pca.projection.size() != static_cast<std::size_t>(kEmbeddingDim) * kEmbeddingDim) {
    throw input_error("write_records: projection must be 128x128");
  }
  for (double v : pca.projection) w.f64(v);
  w.f64(pca.clip_min);
  w.f64(pca.clip_max);
  w.u32(static_cast<std::uint32_t>(clips.size()));
  for (const auto& clip : clips) {
    w.string(clip.clip_id);
    w.u32(static_cast<std::uint32_t>(clip.raw_labels.size()));
    for (const auto& label : clip.raw_labels) w.string(label);
    w.string(clip.subject_id);
    w.u32(static_cast<std::uint32_t>(clip.vectors.size()));
    for (const auto& v : clip.vectors) w.bytes(v.values.data(), v.values.size());
  }
  out.flush();
  if (!out) throw input_error("write_records: write failed for " + path.string());
}

inline RecordFile read_records(const std::filesystem::path& path) {
  auto in = open_input(path);
  BinaryReader r(in, path.string());

  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kRecordMagic, 4) != 0) {
    throw format_error(path.string() + ": bad magic, not an .adle record file");
  }
  const std::uint16_t version = r.u16();
  if (version != kRecordVersion) {
    throw format_error(path.string() + ": unsupported record version " + std::to_string(version));
  }

  RecordFile file;
  for (double& m : file.pca.mean) m = r.f64();
  file.pca.projection.resize(static_cast<std::size_t>(kEmbeddingDim) * kEmbeddingDim);
  for (double& v : file.pca.projection) v = r.f64();
  file.pca.clip_min = r.f64();
  file.pca.clip_max = r.f64();
  if (!(file.pca.clip_max > file.pca.clip_min)) {
    throw format_error(path.string() + ": invalid clip range in header");
  }

  const std::uint32_t clip_count = r.u32();
  file.clips.reserve(clip_count);
  for (std::uint32_t c = 0; c < clip_count; ++c) {
    EmbeddingClip clip;
    clip.clip_id = r.string();
    const std::uint32_t labels = r.u32();
    for (std::uint32_t l = 0; l < labels; ++l) clip.raw_labels.insert(r.string());
    clip.subject_id = r.string();
    const std::uint32_t vectors = r.u32();
    clip.vectors.resize(vectors);
    for (std::uint32_t v = 0; v < vectors; ++v) {
      r.bytes(clip.vectors[v].values.data(), clip.vectors[v].values.size());
    }
    file.clips.push_back(std::move(clip));
  }
  return file;
}

// Optional CSV view: clip_id,label,vector_index,v0..v127. Multiple raw labels
// are joined with '|'.
inline void export_embeddings_csv(const RecordFile& file, const std::filesystem::path& path) {
  auto out = open_output(path, /*binary=*/false);
  out << "clip_id,label,vector_index";
  for (int i = 0; i < kEmbeddingDim; ++i) out << ",v" << i;
  out << '\n';
  for (const auto& clip : file.clips) {
    std::string joined;
    for (const auto& l : clip.raw_labels) {
      if (!joined.empty()) joined += '|';
      joined += l;
    }
    for (std::size_t v = 0; v < clip.vectors.size(); ++v) {
      out << csv_field(clip.clip_id) << ',' << csv_field(joined) << ',' << v;
      for (int i = 0; i < kEmbeddingDim; ++i) {
        out << ',' << static_cast<int>(clip.vectors[v].values[static_cast<std::size_t>(i)]);
      }
      out << '\n';
    }
  }
}

}  // namespace adl

#endif  // ADL_RECORDS_HPP_
