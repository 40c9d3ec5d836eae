#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <random>

#include "adl/embedding.hpp"
#include "adl/records.hpp"
#include "helpers.hpp"

using namespace adl;

namespace {

MelPatch make_patch(std::uint64_t seed) {
  MelPatch p;
  p.rows = 96;
  p.cols = 64;
  p.values.resize(96 * 64);
  Rng rng(seed);
  for (double& v : p.values) v = rng.uniform(-4.6, 2.0);
  return p;
}

// Independent re-derivation of the stand-in extractor from its documented
// rule: weights drawn i-major from the seeded generator as
// uniform(-1,1)/sqrt(rows*cols), output j = tanh(sum_i x[i] w[i][j]).
// Accumulation runs per output column here, unlike the library's
// per-input-row loop.
std::array<double, 128> standin_oracle(const MelPatch& patch, std::uint64_t seed) {
  const std::size_t n = patch.values.size();
  std::vector<double> w(n * 128);
  std::mt19937_64 gen(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < 128; ++j) {
      const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;  // [0,1)
      w[i * 128 + static_cast<std::size_t>(j)] = (-1.0 + 2.0 * u) * scale;
    }
  }
  std::array<double, 128> out{};
  for (int j = 0; j < 128; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += patch.values[i] * w[i * 128 + static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(j)] = std::tanh(acc);
  }
  return out;
}

EmbeddingClip random_clip(Rng& rng, int id) {
  EmbeddingClip clip;
  clip.clip_id = "clip_" + std::to_string(id);
  const int n_labels = 1 + static_cast<int>(rng.below(3));
  for (int l = 0; l < n_labels; ++l) {
    clip.raw_labels.insert("label_" + std::to_string(rng.below(20)));
  }
  if (rng.below(2) == 0) clip.subject_id = "s" + std::to_string(rng.below(5));
  const int n_vectors = 1 + static_cast<int>(rng.below(12));
  clip.vectors.resize(static_cast<std::size_t>(n_vectors));
  for (auto& v : clip.vectors) {
    for (auto& b : v.values) b = static_cast<std::uint8_t>(rng.below(256));
  }
  return clip;
}

}  // namespace

TEST_CASE("stand-in extractor is deterministic and input-sensitive") {
  const StandinExtractor ex(0);
  const MelPatch patch = make_patch(42);
  const RawEmbedding a = extract(patch, ex);
  const RawEmbedding b = extract(patch, ex);
  CHECK(a.values == b.values);

  MelPatch zero = patch;
  std::fill(zero.values.begin(), zero.values.end(), 0.0);
  MelPatch onehot = zero;
  onehot.values[123] = 1.0;
  const RawEmbedding z = extract(zero, ex);
  const RawEmbedding o = extract(onehot, ex);
  CHECK(z.values != o.values);
}

TEST_CASE("stand-in extractor matches the seeded random-projection oracle") {
  for (const std::uint64_t seed : {0ull, 7ull}) {
    const StandinExtractor ex(seed);
    const MelPatch patch = make_patch(5 + seed);
    const RawEmbedding got = extract(patch, ex);
    const auto want = standin_oracle(patch, seed);
    for (int j = 0; j < 128; ++j) {
      CHECK(got.values[static_cast<std::size_t>(j)] ==
            doctest::Approx(want[static_cast<std::size_t>(j)]).epsilon(1e-12));
    }
  }
}

TEST_CASE("extract rejects wrongly shaped patches with patch identity attached") {
  const StandinExtractor ex(0);
  MelPatch bad;
  bad.rows = 10;
  bad.cols = 64;
  bad.values.assign(640, 0.0);
  bad.start_time = 3.84;
  try {
    extract(bad, ex);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("3.84") != std::string::npos);
  }
}

TEST_CASE("postprocess quantization endpoints and midpoint rounding") {
  PcaParams pca = PcaParams::identity();  // zero mean, clip [-2, 2]
  RawEmbedding raw;
  raw.values.fill(0.0);
  raw.values[0] = -2.0;   // clip_min -> 0
  raw.values[1] = 2.0;    // clip_max -> 255
  raw.values[2] = -5.0;   // clips to clip_min
  raw.values[3] = 9.0;    // clips to clip_max
  // y = 0 -> (0 + 2)/4 * 255 = 127.5 -> round-half-up 128
  const EmbeddingVector q = postprocess(raw, pca);
  CHECK(q.values[0] == 0);
  CHECK(q.values[1] == 255);
  CHECK(q.values[2] == 0);
  CHECK(q.values[3] == 255);
  CHECK(q.values[4] == 128);
}

TEST_CASE("postprocess rejects an inverted clip range") {
  PcaParams pca = PcaParams::identity();
  pca.clip_min = 1.0;
  pca.clip_max = 1.0;
  RawEmbedding raw;
  CHECK_THROWS_AS(postprocess(raw, pca), Error);
}

TEST_CASE("dequantize maps byte endpoints onto the clip range") {
  PcaParams pca = PcaParams::identity();
  pca.clip_min = -3.0;
  pca.clip_max = 5.0;
  EmbeddingVector v;
  v.values.fill(0);
  v.values[1] = 255;
  const auto x = dequantize(v, pca);
  CHECK(x[0] == -3.0);
  CHECK(x[1] == 5.0);
}

TEST_CASE("quantize-dequantize stays within half a quantization step") {
  const PcaParams pca = PcaParams::identity();
  const double step = (pca.clip_max - pca.clip_min) / 255.0;
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    RawEmbedding raw;
    for (double& v : raw.values) v = rng.uniform(pca.clip_min, pca.clip_max);
    const auto back = dequantize(postprocess(raw, pca), pca);
    for (int i = 0; i < kEmbeddingDim; ++i) {
      CHECK(std::abs(back[static_cast<std::size_t>(i)] - raw.values[static_cast<std::size_t>(i)]) <=
            step / 2.0 + 1e-12);
    }
  }
}

TEST_CASE("requantizing a dequantized vector returns the same codes") {
  const PcaParams pca = PcaParams::identity();
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    EmbeddingVector v;
    for (auto& b : v.values) b = static_cast<std::uint8_t>(rng.below(256));
    RawEmbedding raw;
    const auto x = dequantize(v, pca);
    std::copy(x.begin(), x.end(), raw.values.begin());
    const EmbeddingVector again = postprocess(raw, pca);
    CHECK(again.values == v.values);
  }
}

TEST_CASE("fit_pca produces orthonormal rows sorted by explained variance") {
  Rng rng(17);
  std::vector<RawEmbedding> samples(300);
  for (auto& s : samples) {
    // Anisotropic data so eigenvalues are distinct.
    for (int i = 0; i < kEmbeddingDim; ++i) {
      s.values[static_cast<std::size_t>(i)] =
          rng.normal() * (1.0 + 3.0 / (1.0 + i)) + (i % 2 == 0 ? 0.5 : -0.25);
    }
  }
  const PcaParams pca = fit_pca(samples);

  const int d = kEmbeddingDim;
  for (int r = 0; r < d; ++r) {
    for (int c = r; c < d; ++c) {
      double dot = 0.0;
      for (int i = 0; i < d; ++i) {
        dot += pca.projection[static_cast<std::size_t>(r) * d + i] *
               pca.projection[static_cast<std::size_t>(c) * d + i];
      }
      CHECK(std::abs(dot - (r == c ? 1.0 : 0.0)) < 1e-6);
    }
  }

  // Projected variances must be non-increasing across rows.
  std::vector<double> var(static_cast<std::size_t>(d), 0.0);
  for (const auto& s : samples) {
    for (int r = 0; r < d; ++r) {
      double y = 0.0;
      for (int i = 0; i < d; ++i) {
        y += pca.projection[static_cast<std::size_t>(r) * d + i] *
             (s.values[static_cast<std::size_t>(i)] - pca.mean[static_cast<std::size_t>(i)]);
      }
      var[static_cast<std::size_t>(r)] += y * y;
    }
  }
  for (int r = 1; r < d; ++r) {
    CHECK(var[static_cast<std::size_t>(r)] <=
          var[static_cast<std::size_t>(r) - 1] * (1.0 + 1e-9) + 1e-9);
  }
}

TEST_CASE("postprocess composition bound against clipped PCA output") {
  Rng rng(23);
  std::vector<RawEmbedding> samples(200);
  for (auto& s : samples) {
    for (double& v : s.values) v = rng.normal() * 0.8;
  }
  const PcaParams pca = fit_pca(samples);
  const double step = (pca.clip_max - pca.clip_min) / 255.0;

  const int d = kEmbeddingDim;
  for (int trial = 0; trial < 20; ++trial) {
    const RawEmbedding& raw = samples[static_cast<std::size_t>(trial) * 7 % samples.size()];
    const auto back = dequantize(postprocess(raw, pca), pca);
    for (int r = 0; r < d; ++r) {
      double y = 0.0;
      for (int i = 0; i < d; ++i) {
        y += pca.projection[static_cast<std::size_t>(r) * d + i] *
             (raw.values[static_cast<std::size_t>(i)] - pca.mean[static_cast<std::size_t>(i)]);
      }
      y = std::clamp(y, pca.clip_min, pca.clip_max);
      CHECK(std::abs(back[static_cast<std::size_t>(r)] - y) <= step / 2.0 + 1e-12);
    }
  }
}

TEST_CASE("record files round-trip bit-exactly") {
  testutil::TempDir dir("rec");
  Rng rng(1);

  SUBCASE("empty clip list") {
    write_records({}, dir / "empty.adle");
    const RecordFile file = read_records(dir / "empty.adle");
    CHECK(file.clips.empty());
    CHECK(file.pca == PcaParams::identity());
  }

  SUBCASE("one clip with ten vectors") {
    EmbeddingClip clip = random_clip(rng, 0);
    clip.vectors.resize(10);
    write_records({clip}, dir / "one.adle");
    const RecordFile file = read_records(dir / "one.adle");
    REQUIRE(file.clips.size() == 1);
    CHECK(file.clips[0] == clip);
  }

  SUBCASE("random clip sets, structure and bytes") {
    for (int trial = 0; trial < 25; ++trial) {
      std::vector<EmbeddingClip> clips(rng.below(6));
      for (std::size_t i = 0; i < clips.size(); ++i) clips[i] = random_clip(rng, static_cast<int>(i));
      PcaParams pca = PcaParams::identity();
      pca.clip_min = -1.0 - rng.uniform();
      pca.clip_max = 1.0 + rng.uniform();
      for (double& m : pca.mean) m = rng.normal() * 0.1;

      const auto path = dir / ("t" + std::to_string(trial) + ".adle");
      write_records(clips, path, pca);
      const RecordFile file = read_records(path);
      CHECK(file.pca == pca);
      CHECK(file.clips == clips);

      // Re-serialization is byte-identical.
      const auto path2 = dir / ("t" + std::to_string(trial) + "_again.adle");
      write_records(file.clips, path2, file.pca);
      CHECK(testutil::read_file_bytes(path) == testutil::read_file_bytes(path2));
    }
  }
}

TEST_CASE("record reader rejects a flipped magic byte without partial results") {
  testutil::TempDir dir("rec");
  Rng rng(2);
  write_records({random_clip(rng, 1)}, dir / "ok.adle");
  auto bytes = testutil::read_file_bytes(dir / "ok.adle");
  bytes[0] ^= 0x40;
  std::ofstream(dir / "bad.adle", std::ios::binary)
      .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  try {
    read_records(dir / "bad.adle");
    FAIL("expected format error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::format);
  }
}

TEST_CASE("record reader reports truncation with a byte offset") {
  testutil::TempDir dir("rec");
  Rng rng(3);
  write_records({random_clip(rng, 1), random_clip(rng, 2)}, dir / "ok.adle");
  auto bytes = testutil::read_file_bytes(dir / "ok.adle");
  bytes.resize(bytes.size() - 37);
  std::ofstream(dir / "cut.adle", std::ios::binary)
      .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  try {
    read_records(dir / "cut.adle");
    FAIL("expected corruption error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::corruption);
    CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
  }
}

TEST_CASE("embedding CSV export produces one row per vector") {
  testutil::TempDir dir("rec");
  Rng rng(4);
  RecordFile file;
  file.pca = PcaParams::identity();
  file.clips = {random_clip(rng, 0), random_clip(rng, 1)};
  export_embeddings_csv(file, dir / "emb.csv");

  std::ifstream in(dir / "emb.csv");
  std::string line;
  std::getline(in, line);
  CHECK(adl::csv_split(line).size() == 3 + 128);
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == file.clips[0].vectors.size() + file.clips[1].vectors.size());
}
