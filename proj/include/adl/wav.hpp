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

#ifndef ADL_WAV_HPP_
#define ADL_WAV_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "adl/error.hpp"
#include "adl/io.hpp"

namespace adl {

// Time-domain audio. Samples are interleaved when channels > 1 and always
// lie in [-1, 1].
struct PcmSignal {
  std::vector<double> samples;
  int sample_rate = 0;
  int channels = 1;

  std::size_t frame_count() const {
    return channels > 0 ? samples.size() / static_cast<std::size_t>(channels) : 0;
  }
};

namespace detail {

inline std::uint32_t rd_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t rd_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace detail

// Reads a RIFF/WAVE file containing 16-bit integer PCM. Integer samples are
// divided by 32768, so -32768 maps to exactly -1.0. Multichannel data is kept
// interleaved; resample_mono performs the downmix.
//
// Other encodings (float, 8/24/32-bit, compressed) are rejected with an
// unsupported-format error; convert such files externally.
inline PcmSignal load_wav(const std::filesystem::path& path) {
  auto in = open_input(path);
  in.seekg(0, std::ios::end);
  const std::int64_t file_size = in.tellg();
  in.seekg(0, std::ios::beg);

  std::vector<unsigned char> buf(static_cast<std::size_t>(std::max<std::int64_t>(file_size, 0)));
  in.read(reinterpret_cast<char*>(buf.data()), file_size);

  const std::string name = path.string();
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw format_error(name + ": not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format_tag = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const unsigned char* hdr = buf.data() + pos;
    const std::uint32_t chunk_size = detail::rd_u32(hdr + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > buf.size()) {
      throw format_error(name + ": chunk extends past end of file");
    }
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw format_error(name + ": fmt chunk too short");
      const unsigned char* f = buf.data() + body;
      format_tag = detail::rd_u16(f);
      channels = detail::rd_u16(f + 2);
      rate = detail::rd_u32(f + 4);
      bits = detail::rd_u16(f + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt) throw format_error(name + ": data chunk precedes fmt chunk");
      data = buf.data() + body;
      data_size = chunk_size;
      break;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!have_fmt) throw format_error(name + ": missing fmt chunk");
  if (data == nullptr) throw format_error(name + ": missing data chunk");
  if (channels == 0 || rate == 0) throw format_error(name + ": invalid fmt fields");
  if (format_tag != 1) {
    throw unsupported_format_error(name + ": only integer PCM is supported (format tag " +
                                   std::to_string(format_tag) + "); convert externally");
  }
  if (bits != 16) {
    throw unsupported_format_error(name + ": only 16-bit samples are supported (" +
                                   std::to_string(bits) + "-bit); convert externally");
  }

  PcmSignal sig;
  sig.sample_rate = static_cast<int>(rate);
  sig.channels = static_cast<int>(channels);
  const std::size_t n = data_size / 2;
  sig.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int16_t v =
        static_cast<std::int16_t>(data[2 * i] | (data[2 * i + 1] << 8));
    sig.samples[i] = static_cast<double>(v) / 32768.0;
  }
  return sig;
}

// Writes 16-bit PCM. Handy for fixtures and for round-tripping demos.
inline void write_wav(const std::filesystem::path& path, const PcmSignal& sig) {
  auto out = open_output(path);
  BinaryWriter w(out);
  const std::uint32_t n = static_cast<std::uint32_t>(sig.samples.size());
  const std::uint32_t data_bytes = n * 2;
  const std::uint16_t channels = static_cast<std::uint16_t>(sig.channels);
  const std::uint32_t rate = static_cast<std::uint32_t>(sig.sample_rate);

  w.bytes("RIFF", 4);
  w.u32(36 + data_bytes);
  w.bytes("WAVE", 4);
  w.bytes("fmt ", 4);
  w.u32(16);
  w.u16(1);  // PCM
  w.u16(channels);
  w.u32(rate);
  w.u32(rate * channels * 2);
  w.u16(static_cast<std::uint16_t>(channels * 2));
  w.u16(16);
  w.bytes("data", 4);
  w.u32(data_bytes);
  for (std::size_t i = 0; i < sig.samples.size(); ++i) {
    double v = std::clamp(sig.samples[i], -1.0, 1.0) * 32767.0;
    const std::int16_t s = static_cast<std::int16_t>(std::lround(v));
    w.u16(static_cast<std::uint16_t>(s));
  }
}

}  // namespace adl

#endif  // ADL_WAV_HPP_
