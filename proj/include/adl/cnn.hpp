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

#ifndef ADL_CNN_HPP_
#define ADL_CNN_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "adl/dataset.hpp"
#include "adl/error.hpp"
#include "adl/io.hpp"
#include "adl/rng.hpp"

namespace adl {

// Classifier shape: three 1-D convolutions (linear activation, same padding,
// stride 1) -> flatten -> dense -> dense + softmax. The defaults are the
// deployed setting: input 128x1, channels 19/20/30, kernel 5, 500 hidden
// units, 15 classes. The reduced shapes used by the gradient-check tests go
// through the same code path.
//
// The first dense layer is rectified-linear by default: with conv layers
// already linear, an all-linear stack would collapse into a single affine
// map. Set dense1_relu = false to ablate.
struct CnnSpec {
  int input_len = 128;
  std::array<int, 3> conv_channels = {19, 20, 30};
  int kernel = 5;
  int dense_units = 500;
  int num_classes = 15;
  bool dense1_relu = true;

  int flatten_size() const { return input_len * conv_channels[2]; }

  void validate() const {
    if (input_len < 1) throw input_error("CnnSpec: input_len must be >= 1");
    for (int c : conv_channels) {
      if (c < 1) throw input_error("CnnSpec: conv channels must be >= 1");
    }
    if (kernel < 1 || kernel % 2 == 0) {
      throw input_error("CnnSpec: kernel must be odd and >= 1 for same padding");
    }
    if (dense_units < 1) throw input_error("CnnSpec: dense_units must be >= 1");
    if (num_classes < 2 || num_classes > kNumClasses) {
      throw input_error("CnnSpec: num_classes must be in [2, " + std::to_string(kNumClasses) + "]");
    }
  }
};

struct TrainConfig {
  double learning_rate = 0.001;
  double decay = 1e-6;
  double momentum = 0.9;  // Nesterov
  int batch_size = 100;
  int max_epochs = 20;
  int patience = 3;
  std::uint64_t seed = 0;

  void validate() const {
    if (learning_rate <= 0.0) throw input_error("TrainConfig: learning_rate must be positive");
    if (decay < 0.0) throw input_error("TrainConfig: decay must be >= 0");
    if (momentum < 0.0 || momentum >= 1.0) throw input_error("TrainConfig: momentum must be in [0, 1)");
    if (batch_size < 1) throw input_error("TrainConfig: batch_size must be >= 1");
    if (max_epochs < 1) throw input_error("TrainConfig: max_epochs must be >= 1");
    if (patience < 1) throw input_error("TrainConfig: patience must be >= 1");
  }
};

struct Prediction {
  std::vector<double> probs;  // num_classes entries, non-negative, sums to 1
};

// Parameter tensor order; also the checkpoint serialization order.
enum TensorId : int {
  kConv1W = 0, kConv1B, kConv2W, kConv2B, kConv3W, kConv3B,
  kDense1W, kDense1B, kDense2W, kDense2B,
  kTensorCount,
};

inline const char* tensor_name(int id) {
  static const char* names[kTensorCount] = {
      "conv1.w", "conv1.b", "conv2.w", "conv2.b", "conv3.w", "conv3.b",
      "dense1.w", "dense1.b", "dense2.w", "dense2.b"};
  return names[id];
}

// Gradient (or velocity) buffers, one per parameter tensor.
using TensorSet = std::array<std::vector<double>, kTensorCount>;

namespace detail {

inline double dot(const double* a, const double* b, std::size_t n) {
  double acc[4] = {};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (int l = 0; l < 4; ++l) acc[l] += a[i + static_cast<std::size_t>(l)] * b[i + static_cast<std::size_t>(l)];
  }
  for (; i < n; ++i) acc[0] += a[i] * b[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

inline void axpy(double* y, double a, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

}  // namespace detail

class CnnModel {
 public:
  explicit CnnModel(const CnnSpec& spec) : spec_(spec) {
    spec.validate();
    for (int t = 0; t < kTensorCount; ++t) {
      params_[static_cast<std::size_t>(t)].assign(tensor_size(t), 0.0);
      velocity_[static_cast<std::size_t>(t)].assign(tensor_size(t), 0.0);
    }
  }

  // Glorot-uniform weights (limit sqrt(6 / (fan_in + fan_out))), zero biases.
  // Conv fans count the kernel taps. Tensors are filled in TensorId order,
  // each in storage order, from Rng(seed) -- the rule the determinism tests
  // rely on.
  static CnnModel seeded(const CnnSpec& spec, std::uint64_t seed) {
    CnnModel m(spec);
    Rng rng(seed);
    const std::array<int, 4> chans = {1, spec.conv_channels[0], spec.conv_channels[1],
                                      spec.conv_channels[2]};
    for (int layer = 0; layer < 3; ++layer) {
      const int fan_in = chans[static_cast<std::size_t>(layer)] * spec.kernel;
      const int fan_out = chans[static_cast<std::size_t>(layer) + 1] * spec.kernel;
      m.init_uniform(rng, static_cast<TensorId>(2 * layer), fan_in, fan_out);
    }
    m.init_uniform(rng, kDense1W, spec.flatten_size(), spec.dense_units);
    m.init_uniform(rng, kDense2W, spec.dense_units, spec.num_classes);
    return m;
  }

  const CnnSpec& spec() const { return spec_; }

  std::vector<double>& tensor(int id) { return params_[static_cast<std::size_t>(id)]; }
  const std::vector<double>& tensor(int id) const { return params_[static_cast<std::size_t>(id)]; }
  std::vector<double>& velocity(int id) { return velocity_[static_cast<std::size_t>(id)]; }
  const std::vector<double>& velocity(int id) const { return velocity_[static_cast<std::size_t>(id)]; }

  std::uint64_t step_count() const { return step_; }
  void set_step_count(std::uint64_t s) { step_ = s; }

  std::size_t tensor_size(int id) const {
    const auto& s = spec_;
    const std::size_t k = static_cast<std::size_t>(s.kernel);
    switch (id) {
      case kConv1W: return k * 1 * static_cast<std::size_t>(s.conv_channels[0]);
      case kConv1B: return static_cast<std::size_t>(s.conv_channels[0]);
      case kConv2W: return k * static_cast<std::size_t>(s.conv_channels[0]) * static_cast<std::size_t>(s.conv_channels[1]);
      case kConv2B: return static_cast<std::size_t>(s.conv_channels[1]);
      case kConv3W: return k * static_cast<std::size_t>(s.conv_channels[1]) * static_cast<std::size_t>(s.conv_channels[2]);
      case kConv3B: return static_cast<std::size_t>(s.conv_channels[2]);
      case kDense1W: return static_cast<std::size_t>(s.flatten_size()) * static_cast<std::size_t>(s.dense_units);
      case kDense1B: return static_cast<std::size_t>(s.dense_units);
      case kDense2W: return static_cast<std::size_t>(s.dense_units) * static_cast<std::size_t>(s.num_classes);
      case kDense2B: return static_cast<std::size_t>(s.num_classes);
      default: throw input_error("tensor_size: bad tensor id");
    }
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (int t = 0; t < kTensorCount; ++t) n += tensor_size(t);
    return n;
  }

  // Conv weight at [out_channel][tap][in_channel]; storage is tap-major
  // within an output channel so inner loops run over contiguous in-channels.
  static std::size_t conv_w_index(int in_ch, int kernel, int o, int t, int i) {
    return (static_cast<std::size_t>(o) * static_cast<std::size_t>(kernel) + static_cast<std::size_t>(t)) *
               static_cast<std::size_t>(in_ch) +
           static_cast<std::size_t>(i);
  }
  static std::size_t dense_w_index(int in_dim, int o, int i) {
    return static_cast<std::size_t>(o) * static_cast<std::size_t>(in_dim) + static_cast<std::size_t>(i);
  }

  bool operator==(const CnnModel& other) const {
    return spec_.input_len == other.spec_.input_len &&
           spec_.conv_channels == other.spec_.conv_channels && spec_.kernel == other.spec_.kernel &&
           spec_.dense_units == other.spec_.dense_units &&
           spec_.num_classes == other.spec_.num_classes &&
           spec_.dense1_relu == other.spec_.dense1_relu && params_ == other.params_ &&
           velocity_ == other.velocity_ && step_ == other.step_;
  }

 private:
  void init_uniform(Rng& rng, TensorId id, int fan_in, int fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& w : params_[static_cast<std::size_t>(id)]) w = rng.uniform(-limit, limit);
  }

  CnnSpec spec_;
  TensorSet params_;
  TensorSet velocity_;
  std::uint64_t step_ = 0;
};

inline TensorSet make_gradients(const CnnModel& m) {
  TensorSet g;
  for (int t = 0; t < kTensorCount; ++t) g[static_cast<std::size_t>(t)].assign(m.tensor_size(t), 0.0);
  return g;
}

// Same-padded cross-correlation plus bias, linear activation. Input and
// output are length-major (L x C, channel fastest). Output length equals
// input length; taps falling outside the input contribute nothing.
inline void conv1d_same(const double* in, int len, int in_ch, const double* w, const double* b,
                        int out_ch, int kernel, double* out) {
  const int pad = kernel / 2;
  for (int l = 0; l < len; ++l) {
    double* orow = out + static_cast<std::size_t>(l) * out_ch;
    for (int o = 0; o < out_ch; ++o) orow[o] = b[o];
    for (int t = 0; t < kernel; ++t) {
      const int j = l + t - pad;
      if (j < 0 || j >= len) continue;
      const double* irow = in + static_cast<std::size_t>(j) * in_ch;
      for (int o = 0; o < out_ch; ++o) {
        const double* wrow = w + CnnModel::conv_w_index(in_ch, kernel, o, t, 0);
        orow[o] += detail::dot(wrow, irow, static_cast<std::size_t>(in_ch));
      }
    }
  }
}

// Activations for one instance; reused across samples to avoid allocation
// in the training loop.
struct Workspace {
  std::vector<double> input;             // L x 1
  std::array<std::vector<double>, 3> conv;  // L x C_i
  std::vector<double> dense1_pre, dense1_out;
  std::vector<double> logits, probs;
  // Backward scratch
  std::array<std::vector<double>, 3> d_conv;
  std::vector<double> d_input;
  std::vector<double> d_dense1, d_logits;

  explicit Workspace(const CnnSpec& s) {
    const std::size_t L = static_cast<std::size_t>(s.input_len);
    input.assign(L, 0.0);
    d_input.assign(L, 0.0);
    for (int i = 0; i < 3; ++i) {
      conv[static_cast<std::size_t>(i)].assign(L * static_cast<std::size_t>(s.conv_channels[static_cast<std::size_t>(i)]), 0.0);
      d_conv[static_cast<std::size_t>(i)].assign(conv[static_cast<std::size_t>(i)].size(), 0.0);
    }
    dense1_pre.assign(static_cast<std::size_t>(s.dense_units), 0.0);
    dense1_out.assign(static_cast<std::size_t>(s.dense_units), 0.0);
    d_dense1.assign(static_cast<std::size_t>(s.dense_units), 0.0);
    logits.assign(static_cast<std::size_t>(s.num_classes), 0.0);
    d_logits.assign(static_cast<std::size_t>(s.num_classes), 0.0);
    probs.assign(static_cast<std::size_t>(s.num_classes), 0.0);
  }
};

namespace detail {

// Locates the first non-finite activation for error reporting; only runs
// once something already went wrong.
inline int first_bad_layer(const Workspace& ws) {
  auto bad = [](const std::vector<double>& v) {
    for (double x : v)
      if (!std::isfinite(x)) return true;
    return false;
  };
  for (int i = 0; i < 3; ++i)
    if (bad(ws.conv[static_cast<std::size_t>(i)])) return i + 1;  // conv layers are 1..3
  if (bad(ws.dense1_out)) return 4;
  if (bad(ws.logits)) return 5;
  return 5;
}

inline void softmax_from_logits(const std::vector<double>& logits, std::vector<double>& probs) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - m);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
}

}  // namespace detail

// Full forward pass: conv x3 -> flatten (length-major, a no-op on the L x C
// buffer) -> dense1 (+ReLU) -> dense2 -> softmax.
inline void forward_into(const CnnModel& m, std::span<const double> instance, Workspace& ws) {
  const CnnSpec& s = m.spec();
  if (static_cast<int>(instance.size()) != s.input_len) {
    throw input_error("forward: instance length " + std::to_string(instance.size()) +
                      " != input_len " + std::to_string(s.input_len));
  }
  std::copy(instance.begin(), instance.end(), ws.input.begin());

  const double* in = ws.input.data();
  int in_ch = 1;
  for (int layer = 0; layer < 3; ++layer) {
    const int out_ch = s.conv_channels[static_cast<std::size_t>(layer)];
    conv1d_same(in, s.input_len, in_ch, m.tensor(2 * layer).data(), m.tensor(2 * layer + 1).data(),
                out_ch, s.kernel, ws.conv[static_cast<std::size_t>(layer)].data());
    in = ws.conv[static_cast<std::size_t>(layer)].data();
    in_ch = out_ch;
  }

  const std::size_t flat = static_cast<std::size_t>(s.flatten_size());
  const double* x = ws.conv[2].data();
  const auto& w1 = m.tensor(kDense1W);
  const auto& b1 = m.tensor(kDense1B);
  for (int o = 0; o < s.dense_units; ++o) {
    const double pre = b1[static_cast<std::size_t>(o)] +
                       detail::dot(&w1[CnnModel::dense_w_index(static_cast<int>(flat), o, 0)], x, flat);
    ws.dense1_pre[static_cast<std::size_t>(o)] = pre;
    ws.dense1_out[static_cast<std::size_t>(o)] = (s.dense1_relu && pre < 0.0) ? 0.0 : pre;
  }

  const auto& w2 = m.tensor(kDense2W);
  const auto& b2 = m.tensor(kDense2B);
  for (int o = 0; o < s.num_classes; ++o) {
    ws.logits[static_cast<std::size_t>(o)] =
        b2[static_cast<std::size_t>(o)] +
        detail::dot(&w2[CnnModel::dense_w_index(s.dense_units, o, 0)], ws.dense1_out.data(),
                    static_cast<std::size_t>(s.dense_units));
  }
  for (double v : ws.logits) {
    if (!std::isfinite(v)) {
      throw numeric_error("forward: non-finite value at layer " +
                          std::to_string(detail::first_bad_layer(ws)));
    }
  }
  detail::softmax_from_logits(ws.logits, ws.probs);
}

inline Prediction forward(const CnnModel& m, std::span<const double> instance) {
  Workspace ws(m.spec());
  forward_into(m, instance, ws);
  Prediction p;
  p.probs = ws.probs;
  return p;
}

inline Prediction forward(const CnnModel& m, const std::vector<double>& instance) {
  return forward(m, std::span<const double>(instance.data(), instance.size()));
}

// Classes ordered by descending probability; ties break toward the lower
// class id.
inline std::vector<int> predict_topk(const CnnModel& m, std::span<const double> instance, int k) {
  if (k < 1 || k > m.spec().num_classes) {
    throw input_error("predict_topk: k must be in [1, num_classes]");
  }
  const Prediction p = forward(m, instance);
  std::vector<int> order(p.probs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (p.probs[static_cast<std::size_t>(a)] != p.probs[static_cast<std::size_t>(b)]) {
      return p.probs[static_cast<std::size_t>(a)] > p.probs[static_cast<std::size_t>(b)];
    }
    return a < b;
  });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

inline std::vector<int> predict_topk(const CnnModel& m, const std::vector<double>& instance, int k) {
  return predict_topk(m, std::span<const double>(instance.data(), instance.size()), k);
}

// Backpropagation for one sample, accumulating into `grads` (scaled later by
// the caller). ws must hold the forward activations of the same sample.
// Returns the sample's cross-entropy loss, computed in log-sum-exp form.
inline double backward_accumulate(const CnnModel& m, int label, Workspace& ws, TensorSet& grads) {
  const CnnSpec& s = m.spec();
  const std::size_t flat = static_cast<std::size_t>(s.flatten_size());

  // Cross-entropy through softmax: d_logits = probs - onehot.
  const double mx = *std::max_element(ws.logits.begin(), ws.logits.end());
  double lse = 0.0;
  for (double z : ws.logits) lse += std::exp(z - mx);
  const double loss = -(ws.logits[static_cast<std::size_t>(label)] - mx - std::log(lse));

  for (int o = 0; o < s.num_classes; ++o) {
    ws.d_logits[static_cast<std::size_t>(o)] =
        ws.probs[static_cast<std::size_t>(o)] - (o == label ? 1.0 : 0.0);
  }

  // dense2
  auto& g_w2 = grads[kDense2W];
  auto& g_b2 = grads[kDense2B];
  const auto& w2 = m.tensor(kDense2W);
  std::fill(ws.d_dense1.begin(), ws.d_dense1.end(), 0.0);
  for (int o = 0; o < s.num_classes; ++o) {
    const double g = ws.d_logits[static_cast<std::size_t>(o)];
    g_b2[static_cast<std::size_t>(o)] += g;
    detail::axpy(&g_w2[CnnModel::dense_w_index(s.dense_units, o, 0)], g, ws.dense1_out.data(),
                 static_cast<std::size_t>(s.dense_units));
    detail::axpy(ws.d_dense1.data(), g, &w2[CnnModel::dense_w_index(s.dense_units, o, 0)],
                 static_cast<std::size_t>(s.dense_units));
  }

  // dense1 (+ReLU gate)
  if (s.dense1_relu) {
    for (int o = 0; o < s.dense_units; ++o) {
      if (ws.dense1_pre[static_cast<std::size_t>(o)] < 0.0) ws.d_dense1[static_cast<std::size_t>(o)] = 0.0;
    }
  }
  auto& g_w1 = grads[kDense1W];
  auto& g_b1 = grads[kDense1B];
  const auto& w1 = m.tensor(kDense1W);
  auto& d_flat = ws.d_conv[2];
  std::fill(d_flat.begin(), d_flat.end(), 0.0);
  for (int o = 0; o < s.dense_units; ++o) {
    const double g = ws.d_dense1[static_cast<std::size_t>(o)];
    g_b1[static_cast<std::size_t>(o)] += g;
    if (g == 0.0) continue;
    detail::axpy(&g_w1[CnnModel::dense_w_index(static_cast<int>(flat), o, 0)], g,
                 ws.conv[2].data(), flat);
    detail::axpy(d_flat.data(), g, &w1[CnnModel::dense_w_index(static_cast<int>(flat), o, 0)], flat);
  }

  // conv stack, back to front
  const int pad = s.kernel / 2;
  for (int layer = 2; layer >= 0; --layer) {
    const int out_ch = s.conv_channels[static_cast<std::size_t>(layer)];
    const int in_ch = layer == 0 ? 1 : s.conv_channels[static_cast<std::size_t>(layer) - 1];
    const double* in_act = layer == 0 ? ws.input.data() : ws.conv[static_cast<std::size_t>(layer) - 1].data();
    const auto& d_out = ws.d_conv[static_cast<std::size_t>(layer)];
    auto& g_w = grads[static_cast<std::size_t>(2 * layer)];
    auto& g_b = grads[static_cast<std::size_t>(2 * layer) + 1];
    const auto& w = m.tensor(2 * layer);
    double* d_in = layer == 0 ? ws.d_input.data() : ws.d_conv[static_cast<std::size_t>(layer) - 1].data();
    const std::size_t d_in_size = static_cast<std::size_t>(s.input_len) * static_cast<std::size_t>(in_ch);
    std::fill(d_in, d_in + d_in_size, 0.0);

    for (int l = 0; l < s.input_len; ++l) {
      const double* gout = &d_out[static_cast<std::size_t>(l) * out_ch];
      for (int o = 0; o < out_ch; ++o) {
        const double g = gout[o];
        if (g == 0.0) continue;
        g_b[static_cast<std::size_t>(o)] += g;
        for (int t = 0; t < s.kernel; ++t) {
          const int j = l + t - pad;
          if (j < 0 || j >= s.input_len) continue;
          const std::size_t wbase = CnnModel::conv_w_index(in_ch, s.kernel, o, t, 0);
          detail::axpy(&g_w[wbase], g, in_act + static_cast<std::size_t>(j) * in_ch,
                       static_cast<std::size_t>(in_ch));
          detail::axpy(d_in + static_cast<std::size_t>(j) * in_ch, g, &w[wbase],
                       static_cast<std::size_t>(in_ch));
        }
      }
    }
  }
  return loss;
}

// Mean cross-entropy loss and parameter gradients over a batch of dataset
// rows. Labels must lie in [0, num_classes).
inline double loss_and_gradients(const CnnModel& m, const LabeledDataset& ds,
                                 std::span<const std::uint32_t> batch, TensorSet& grads,
                                 Workspace& ws) {
  const CnnSpec& s = m.spec();
  if (batch.empty()) throw input_error("loss_and_gradients: empty batch");
  for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);

  std::vector<double> instance(static_cast<std::size_t>(s.input_len));
  double loss_sum = 0.0;
  for (const std::uint32_t idx : batch) {
    const int label = ds.label(idx);
    if (label >= s.num_classes) {
      throw input_error("loss_and_gradients: label " + std::to_string(label) +
                        " out of range for a " + std::to_string(s.num_classes) + "-class model");
    }
    const auto row = ds.feature(idx);
    for (std::size_t d = 0; d < instance.size(); ++d) instance[d] = static_cast<double>(row[d]);
    forward_into(m, instance, ws);
    loss_sum += backward_accumulate(m, label, ws, grads);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& g : grads)
    for (double& v : g) v *= inv;
  return loss_sum * inv;
}

inline double loss_and_gradients(const CnnModel& m, const LabeledDataset& ds,
                                 std::span<const std::uint32_t> batch, TensorSet& grads) {
  Workspace ws(m.spec());
  return loss_and_gradients(m, ds, batch, grads, ws);
}

// Learning-rate schedule: lr0 / (1 + decay * t), with t counting updates
// from zero.
inline double lr_at(double lr0, double decay, std::uint64_t t) {
  return lr0 / (1.0 + decay * static_cast<double>(t));
}

// Nesterov update for one parameter: v <- mu*v - lr*g; w <- w + mu*v - lr*g.
inline void nesterov_update(double& w, double& v, double g, double lr, double mu) {
  v = mu * v - lr * g;
  w += mu * v - lr * g;
}

// One optimizer step at the model's current step count; velocity state lives
// in the model and the counter advances by one.
inline void sgd_nesterov_step(CnnModel& m, const TensorSet& grads, const TrainConfig& cfg) {
  const double lr = lr_at(cfg.learning_rate, cfg.decay, m.step_count());
  for (int t = 0; t < kTensorCount; ++t) {
    auto& w = m.tensor(t);
    auto& v = m.velocity(t);
    const auto& g = grads[static_cast<std::size_t>(t)];
    for (std::size_t i = 0; i < w.size(); ++i) {
      nesterov_update(w[i], v[i], g[i], lr, cfg.momentum);
    }
  }
  m.set_step_count(m.step_count() + 1);
}

inline double top1_accuracy_on(const CnnModel& m, const LabeledDataset& ds, Workspace& ws) {
  if (ds.empty()) throw input_error("accuracy: empty dataset");
  std::vector<double> instance(static_cast<std::size_t>(m.spec().input_len));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto row = ds.feature(i);
    for (std::size_t d = 0; d < instance.size(); ++d) instance[d] = static_cast<double>(row[d]);
    forward_into(m, instance, ws);
    int best = 0;
    for (int c = 1; c < m.spec().num_classes; ++c) {
      if (ws.probs[static_cast<std::size_t>(c)] > ws.probs[static_cast<std::size_t>(best)]) best = c;
    }
    if (best == ds.label(i)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

struct EpochStats {
  int epoch;  // 1-based
  double train_loss;
  double val_accuracy;
};

struct TrainResult {
  CnnModel model;
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
};

// Seeded, single-threaded training loop: Glorot init, per-epoch seeded
// shuffle (one Rng stream drives both), minibatches (the trailing short
// batch included), early stop on validation top-1 with the configured
// patience. Returns the snapshot with the best validation accuracy.
inline TrainResult train(const LabeledDataset& train_ds, const LabeledDataset& val_ds,
                         const CnnSpec& spec, const TrainConfig& cfg) {
  spec.validate();
  cfg.validate();
  if (train_ds.empty() || val_ds.empty()) throw input_error("train: datasets must be non-empty");
  if (train_ds.dim() != static_cast<std::size_t>(spec.input_len) ||
      val_ds.dim() != static_cast<std::size_t>(spec.input_len)) {
    throw input_error("train: dataset dim does not match model input_len");
  }

  Rng rng(cfg.seed);
  CnnModel model = CnnModel::seeded(spec, rng.next());
  Workspace ws(spec);
  TensorSet grads = make_gradients(model);

  std::vector<std::uint32_t> order(train_ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);

  TrainResult result{model, {}, 0, -1.0};
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t n = std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
      const double loss =
          loss_and_gradients(model, train_ds, {order.data() + start, n}, grads, ws);
      if (!std::isfinite(loss)) {
        throw numeric_error("train: loss diverged at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(start / static_cast<std::size_t>(cfg.batch_size)));
      }
      sgd_nesterov_step(model, grads, cfg);
      loss_sum += loss * static_cast<double>(n);
      seen += n;
    }
    const double val_acc = top1_accuracy_on(model, val_ds, ws);
    result.history.push_back(EpochStats{epoch, loss_sum / static_cast<double>(seen), val_acc});

    if (val_acc > result.best_val_accuracy) {
      result.best_val_accuracy = val_acc;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= cfg.patience) break;
    }
  }
  return result;
}

// "ADLM" checkpoint, little-endian:
//   magic | version u16 | input_len u32 | conv channels u32 x3 | kernel u32 |
//   dense_units u32 | num_classes u32 | dense1_relu u8 |
//   parameters (f64, TensorId order) | step u64 | velocities (f64, same order)
inline constexpr char kModelMagic[4] = {'A', 'D', 'L', 'M'};
inline constexpr std::uint16_t kModelVersion = 1;

inline void save_model(const CnnModel& m, const std::filesystem::path& path) {
  auto out = open_output(path);
  BinaryWriter w(out);
  const CnnSpec& s = m.spec();
  w.bytes(kModelMagic, 4);
  w.u16(kModelVersion);
  w.u32(static_cast<std::uint32_t>(s.input_len));
  for (int c : s.conv_channels) w.u32(static_cast<std::uint32_t>(c));
  w.u32(static_cast<std::uint32_t>(s.kernel));
  w.u32(static_cast<std::uint32_t>(s.dense_units));
  w.u32(static_cast<std::uint32_t>(s.num_classes));
  w.u8(s.dense1_relu ? 1 : 0);
  for (int t = 0; t < kTensorCount; ++t) {
    for (double v : m.tensor(t)) w.f64(v);
  }
  w.u64(m.step_count());
  for (int t = 0; t < kTensorCount; ++t) {
    for (double v : m.velocity(t)) w.f64(v);
  }
  out.flush();
  if (!out) throw input_error("save_model: write failed for " + path.string());
}

inline CnnModel load_model(const std::filesystem::path& path) {
  auto in = open_input(path);
  BinaryReader r(in, path.string());
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kModelMagic, 4) != 0) {
    throw format_error(path.string() + ": bad magic, not an ADLM checkpoint");
  }
  const std::uint16_t version = r.u16();
  if (version != kModelVersion) {
    throw format_error(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  CnnSpec s;
  s.input_len = static_cast<int>(r.u32());
  for (int& c : s.conv_channels) c = static_cast<int>(r.u32());
  s.kernel = static_cast<int>(r.u32());
  s.dense_units = static_cast<int>(r.u32());
  s.num_classes = static_cast<int>(r.u32());
  s.dense1_relu = r.u8() != 0;
  try {
    s.validate();
  } catch (const Error& e) {
    throw format_error(path.string() + ": invalid shape header: " + e.what());
  }
  CnnModel m(s);
  for (int t = 0; t < kTensorCount; ++t) {
    for (double& v : m.tensor(t)) v = r.f64();
  }
  m.set_step_count(r.u64());
  for (int t = 0; t < kTensorCount; ++t) {
    for (double& v : m.velocity(t)) v = r.f64();
  }
  return m;
}

}  // namespace adl

#endif  // ADL_CNN_HPP_
