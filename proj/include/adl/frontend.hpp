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

#ifndef ADL_FRONTEND_HPP_
#define ADL_FRONTEND_HPP_

#include <cmath>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "adl/error.hpp"
#include "adl/io.hpp"
#include "adl/wav.hpp"

namespace adl {

// STFT / mel constants. These mirror the released embedding extractor's
// front end: 25 ms Hann window, 10 ms hop, 64 mel bands over 125-7500 Hz,
// log offset 0.01, 96 frames (0.96 s) per patch.
struct FrontendConfig {
  int sample_rate = 16000;
  int window_samples = 400;
  int hop_samples = 160;
  int mel_bands = 64;
  double mel_low_hz = 125.0;
  double mel_high_hz = 7500.0;
  double log_offset = 0.01;
  int patch_frames = 96;
};

// One extractor input: patch_frames x mel_bands log-mel energies, row-major,
// plus the offset of the first frame in the source audio.
struct MelPatch {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // rows * cols, row-major
  double start_time = 0.0;

  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

namespace detail {

// In-place iterative radix-2 FFT. n must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * 3.141592653589793238462643383279502884 / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline double hz_to_mel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }

// Triangular mel filterbank over FFT bin center frequencies, bands spaced
// uniformly on the mel scale. Returns weights[bin][band]. The DC bin gets
// zero weight.
inline std::vector<double> mel_weights(int fft_bins, double bin_hz, const FrontendConfig& cfg) {
  const int bands = cfg.mel_bands;
  std::vector<double> w(static_cast<std::size_t>(fft_bins) * bands, 0.0);
  std::vector<double> edges(static_cast<std::size_t>(bands) + 2);
  const double mel_lo = hz_to_mel(cfg.mel_low_hz);
  const double mel_hi = hz_to_mel(cfg.mel_high_hz);
  for (int i = 0; i < bands + 2; ++i) {
    edges[static_cast<std::size_t>(i)] = mel_lo + (mel_hi - mel_lo) * i / (bands + 1);
  }
  for (int k = 1; k < fft_bins; ++k) {
    const double mel_k = hz_to_mel(k * bin_hz);
    for (int b = 0; b < bands; ++b) {
      const double lower = edges[static_cast<std::size_t>(b)];
      const double center = edges[static_cast<std::size_t>(b) + 1];
      const double upper = edges[static_cast<std::size_t>(b) + 2];
      const double up = (mel_k - lower) / (center - lower);
      const double down = (upper - mel_k) / (upper - center);
      const double v = std::min(up, down);
      if (v > 0.0) w[static_cast<std::size_t>(k) * bands + b] = v;
    }
  }
  return w;
}

}  // namespace detail

// Downmixes to mono (arithmetic channel mean) and linearly resamples to
// 16 kHz. Linear interpolation trades stop-band quality for having no
// dependencies; adequate at the scales this toolkit targets.
inline PcmSignal resample_mono(const PcmSignal& signal) {
  if (signal.samples.empty()) throw input_error("resample_mono: empty signal");
  if (signal.sample_rate <= 0) throw input_error("resample_mono: invalid sample rate");
  if (signal.channels <= 0) throw input_error("resample_mono: invalid channel count");

  const int target_rate = 16000;
  std::vector<double> mono;
  const std::size_t frames = signal.frame_count();
  mono.resize(frames);
  if (signal.channels == 1) {
    mono = signal.samples;
  } else {
    const int ch = signal.channels;
    for (std::size_t i = 0; i < frames; ++i) {
      double acc = 0.0;
      for (int c = 0; c < ch; ++c) acc += signal.samples[i * ch + c];
      mono[i] = acc / ch;
    }
  }

  PcmSignal out;
  out.sample_rate = target_rate;
  out.channels = 1;
  if (signal.sample_rate == target_rate) {
    out.samples = std::move(mono);
    return out;
  }

  const std::size_t in_len = mono.size();
  const std::size_t out_len = static_cast<std::size_t>(
      (static_cast<std::uint64_t>(in_len) * target_rate + signal.sample_rate / 2) /
      static_cast<std::uint64_t>(signal.sample_rate));
  out.samples.resize(out_len);
  const double step = static_cast<double>(signal.sample_rate) / target_rate;
  for (std::size_t i = 0; i < out_len; ++i) {
    const double pos = static_cast<double>(i) * step;
    std::size_t j = static_cast<std::size_t>(pos);
    if (j >= in_len - 1) {
      out.samples[i] = mono[in_len - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(j);
    out.samples[i] = mono[j] * (1.0 - frac) + mono[j + 1] * frac;
  }
  return out;
}

// Log-mel frames of a 16 kHz mono signal. Hann-windowed magnitude STFT
// mapped through the mel filterbank, then log(mel + offset). Produces
// 1 + floor((len - window) / hop) frames; shorter inputs yield none.
inline std::vector<std::vector<double>> log_mel_spectrogram(const PcmSignal& signal,
                                                            const FrontendConfig& cfg = {}) {
  if (signal.channels != 1 || signal.sample_rate != cfg.sample_rate) {
    throw input_error("log_mel_spectrogram: expected " + std::to_string(cfg.sample_rate) +
                      " Hz mono input (run resample_mono first)");
  }
  const std::size_t len = signal.samples.size();
  const std::size_t win = static_cast<std::size_t>(cfg.window_samples);
  const std::size_t hop = static_cast<std::size_t>(cfg.hop_samples);
  std::vector<std::vector<double>> frames;
  if (len < win) return frames;

  const std::size_t n_frames = 1 + (len - win) / hop;
  frames.reserve(n_frames);

  const std::size_t fft_size = detail::next_pow2(win);
  const std::size_t fft_bins = fft_size / 2 + 1;
  const double bin_hz = static_cast<double>(cfg.sample_rate) / static_cast<double>(fft_size);
  const std::vector<double> mel_w = detail::mel_weights(static_cast<int>(fft_bins), bin_hz, cfg);

  // Periodic Hann window.
  std::vector<double> hann(win);
  for (std::size_t i = 0; i < win; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * 3.141592653589793238462643383279502884 *
                                   static_cast<double>(i) / static_cast<double>(win));
  }

  std::vector<std::complex<double>> buf(fft_size);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::size_t off = f * hop;
    for (std::size_t i = 0; i < win; ++i) buf[i] = signal.samples[off + i] * hann[i];
    for (std::size_t i = win; i < fft_size; ++i) buf[i] = 0.0;
    detail::fft_radix2(buf);

    std::vector<double> mel(static_cast<std::size_t>(cfg.mel_bands), 0.0);
    for (std::size_t k = 0; k < fft_bins; ++k) {
      const double mag = std::abs(buf[k]);
      const double* wrow = &mel_w[k * static_cast<std::size_t>(cfg.mel_bands)];
      for (int b = 0; b < cfg.mel_bands; ++b) mel[static_cast<std::size_t>(b)] += mag * wrow[b];
    }
    for (int b = 0; b < cfg.mel_bands; ++b) {
      mel[static_cast<std::size_t>(b)] = std::log(mel[static_cast<std::size_t>(b)] + cfg.log_offset);
    }
    frames.push_back(std::move(mel));
  }
  return frames;
}

// Groups consecutive frames into non-overlapping patches of patch_frames.
// A trailing remainder shorter than one patch is discarded, so every patch
// is backed by exactly patch_frames * hop of real audio.
inline std::vector<MelPatch> frame_examples(const std::vector<std::vector<double>>& frames,
                                            const FrontendConfig& cfg = {}) {
  std::vector<MelPatch> patches;
  const std::size_t pf = static_cast<std::size_t>(cfg.patch_frames);
  if (pf == 0) throw input_error("frame_examples: patch_frames must be positive");
  const std::size_t n = frames.size() / pf;
  const double frame_seconds = static_cast<double>(cfg.hop_samples) / cfg.sample_rate;
  patches.reserve(n);
  for (std::size_t p = 0; p < n; ++p) {
    MelPatch patch;
    patch.rows = cfg.patch_frames;
    patch.cols = cfg.mel_bands;
    patch.start_time = static_cast<double>(p * pf) * frame_seconds;
    patch.values.reserve(pf * static_cast<std::size_t>(cfg.mel_bands));
    for (std::size_t f = 0; f < pf; ++f) {
      const auto& row = frames[p * pf + f];
      patch.values.insert(patch.values.end(), row.begin(), row.end());
    }
    patches.push_back(std::move(patch));
  }
  return patches;
}

// One frame per row, 64 columns. For cross-checking against external stacks.
inline void write_mel_csv(const std::filesystem::path& path,
                          const std::vector<std::vector<double>>& frames) {
  auto out = open_output(path, /*binary=*/false);
  for (const auto& row : frames) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out << ',';
      out << format_double(row[i]);
    }
    out << '\n';
  }
}

}  // namespace adl

#endif  // ADL_FRONTEND_HPP_
