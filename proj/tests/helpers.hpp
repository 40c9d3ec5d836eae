// Shared fixtures for the test suites: temp directories, synthetic audio,
// Gaussian-blob datasets, and a Goertzel tone probe used as a spectral
// oracle.
#ifndef ADL_TESTS_HELPERS_HPP_
#define ADL_TESTS_HELPERS_HPP_

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "adl/dataset.hpp"
#include "adl/rng.hpp"
#include "adl/wav.hpp"

namespace testutil {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("adl_" + tag + "_" + std::to_string(++counter) + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline adl::PcmSignal make_sine(double freq_hz, double seconds, int rate, double amplitude = 0.5) {
  adl::PcmSignal sig;
  sig.sample_rate = rate;
  sig.channels = 1;
  const std::size_t n = static_cast<std::size_t>(seconds * rate);
  sig.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sig.samples[i] =
        amplitude * std::sin(2.0 * 3.14159265358979323846 * freq_hz * static_cast<double>(i) / rate);
  }
  return sig;
}

// Power of the signal at one probe frequency (Goertzel). Independent of the
// library's FFT path.
inline double goertzel_power(const std::vector<double>& x, double freq_hz, int rate) {
  const double w = 2.0 * 3.14159265358979323846 * freq_hz / rate;
  const double coeff = 2.0 * std::cos(w);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (const double v : x) {
    s0 = v + coeff * s1 - s2;
    s2 = s1;
    s1 = s0;
  }
  return s1 * s1 + s2 * s2 - coeff * s1 * s2;
}

// Scans a frequency grid and returns the peak frequency.
inline double dominant_frequency(const std::vector<double>& x, int rate, double lo, double hi,
                                 double step) {
  double best_f = lo, best_p = -1.0;
  for (double f = lo; f <= hi; f += step) {
    const double p = goertzel_power(x, f, rate);
    if (p > best_p) {
      best_p = p;
      best_f = f;
    }
  }
  return best_f;
}

// Isotropic Gaussian blobs: class c is centered at axis_gain * e_c with unit
// sigma. Features land in dims [0, dim).
inline adl::LabeledDataset make_blobs(int num_classes, int per_class, std::size_t dim,
                                      double axis_gain, std::uint64_t seed, double sigma = 1.0) {
  adl::LabeledDataset ds(dim);
  ds.reserve(static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(per_class));
  adl::Rng rng(seed);
  std::vector<double> row(dim);
  for (int c = 0; c < num_classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        row[d] = sigma * rng.normal() + (d == static_cast<std::size_t>(c) ? axis_gain : 0.0);
      }
      ds.push(std::span<const double>(row.data(), dim), c);
    }
  }
  return ds;
}

inline std::vector<char> read_file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::vector<char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace testutil

#endif  // ADL_TESTS_HELPERS_HPP_
