// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "vnt/model.hpp"

#include <cmath>
#include <cstring>

#include "vnt/errors.hpp"
#include "vnt/rng.hpp"

namespace vnt {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kIdentity: return "identity";
  }
  return "?";
}

std::string to_string(Loss l) {
  return l == Loss::kMse ? "mse" : "softmax-cross-entropy";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  if (s == "identity") return Activation::kIdentity;
  throw ConfigError("unknown activation: " + s);
}

Loss loss_from_string(const std::string& s) {
  if (s == "mse") return Loss::kMse;
  if (s == "softmax-cross-entropy") return Loss::kSoftmaxCrossEntropy;
  throw ConfigError("unknown loss: " + s);
}

void ModelSpec::validate() const {
  if (layer_widths.size() < 2) {
    throw ConfigError("ModelSpec: need at least input and output widths");
  }
  for (std::size_t w : layer_widths) {
    if (w == 0) throw ConfigError("ModelSpec: layer widths must be positive");
  }
}

bool Layout::operator==(const Layout& other) const {
  if (total != other.total || entries.size() != other.entries.size()) return false;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].name != other.entries[i].name ||
        entries[i].shape != other.entries[i].shape ||
        entries[i].offset != other.entries[i].offset) {
      return false;
    }
  }
  return true;
}

Layout Layout::for_spec(const ModelSpec& spec) {
  Layout layout;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_widths.size(); ++l) {
    const std::size_t in = spec.layer_widths[l];
    const std::size_t out = spec.layer_widths[l + 1];
    LayoutEntry w{"layer" + std::to_string(l) + "/weight", {in, out}, offset, in * out};
    offset += w.length;
    layout.entries.push_back(std::move(w));
    LayoutEntry b{"layer" + std::to_string(l) + "/bias", {out}, offset, out};
    offset += b.length;
    layout.entries.push_back(std::move(b));
  }
  layout.total = offset;
  return layout;
}

bool ParamVector::same_layout(const ParamVector& other) const {
  if (layout == other.layout) return true;
  if (!layout || !other.layout) return false;
  return *layout == *other.layout;
}

bool ParamVector::bitwise_equal(const ParamVector& other) const {
  if (!same_layout(other) || values.size() != other.values.size()) return false;
  return std::memcmp(values.data(), other.values.data(),
                     values.size() * sizeof(double)) == 0;
}

std::vector<double> LayerStats::variance() const {
  std::vector<double> v(m2.size(), 0.0);
  if (count > 0) {
    for (std::size_t i = 0; i < m2.size(); ++i) {
      v[i] = std::max(0.0, m2[i] / count);
    }
  }
  return v;
}

void LayerStats::observe(std::size_t rows, std::size_t width,
                         std::span<const double> data) {
  if (rows == 0) return;
  LayerStats batch;
  batch.count = static_cast<double>(rows);
  batch.mean.assign(width, 0.0);
  batch.m2.assign(width, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < width; ++j) {
      batch.mean[j] += data[r * width + j];
    }
  }
  for (std::size_t j = 0; j < width; ++j) batch.mean[j] /= batch.count;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < width; ++j) {
      const double d = data[r * width + j] - batch.mean[j];
      batch.m2[j] += d * d;
    }
  }
  combine(batch);
}

void LayerStats::combine(const LayerStats& other) {
  if (other.count == 0) return;
  if (count == 0) {
    *this = other;
    return;
  }
  if (mean.size() != other.mean.size()) {
    throw ShapeError("LayerStats: width mismatch in combine");
  }
  const double n = count + other.count;
  for (std::size_t j = 0; j < mean.size(); ++j) {
    const double delta = other.mean[j] - mean[j];
    m2[j] += other.m2[j] + delta * delta * (count * other.count / n);
    mean[j] += delta * (other.count / n);
  }
  count = n;
}

void StatefulKernelState::validate() const {
  if (!(momentum > 0.0 && momentum < 1.0)) {
    throw ConfigError("StatefulKernelState: momentum must lie in (0, 1)");
  }
  for (const auto& [name, stats] : layers) {
    for (double v : stats.m2) {
      if (v < 0.0) throw ConfigError("StatefulKernelState: negative variance in " + name);
    }
  }
}

void observe_batch(StatefulKernelState& state, const Batch& batch) {
  state.layers["input"].observe(batch.count, batch.input_width, batch.examples);
}

void merge_kernel_state(StatefulKernelState& into, const StatefulKernelState& from) {
  if (into.momentum != from.momentum) {
    throw ConsistencyError("merge_kernel_state: momentum mismatch");
  }
  for (const auto& [name, stats] : from.layers) {
    into.layers[name].combine(stats);
  }
}

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  layout_ = std::make_shared<const Layout>(Layout::for_spec(spec_));
}

ParamVector Model::init_params() const {
  ParamVector params{layout_, std::vector<double>(layout_->total, 0.0)};
  const CounterRng rng = CounterRng(spec_.seed).split("init");
  for (const LayoutEntry& entry : layout_->entries) {
    if (entry.shape.size() == 2) {
      const double scale = 1.0 / std::sqrt(static_cast<double>(entry.shape[0]));
      for (std::size_t k = 0; k < entry.length; ++k) {
        params.values[entry.offset + k] = rng.normal(entry.offset + k) * scale;
      }
    }
    // Biases start at zero.
  }
  return params;
}

StatefulKernelState Model::init_kernels() const {
  StatefulKernelState state;
  state.momentum = 0.9;
  return state;
}

void Model::check_batch(const Batch& batch) const {
  batch.validate();
  if (batch.input_width != spec_.input_width()) {
    throw ShapeError("batch input width " + std::to_string(batch.input_width) +
                     " does not match model input width " +
                     std::to_string(spec_.input_width()));
  }
  if (batch.output_width != spec_.output_width()) {
    throw ShapeError("batch output width " + std::to_string(batch.output_width) +
                     " does not match model output width " +
                     std::to_string(spec_.output_width()));
  }
}

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
    case Activation::kTanh: return std::tanh(z);
    case Activation::kIdentity: return z;
  }
  return z;
}

double activate_grad(Activation a, double z) {
  switch (a) {
    case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

struct Workspace {
  std::vector<std::vector<double>> pre;   // pre-activations, layers 1..L
  std::vector<std::vector<double>> act;   // activations, layers 0..L
  std::vector<double> delta;
  std::vector<double> delta_prev;
  std::vector<double> grad;               // flat per-example gradient
};

}  // namespace

void Model::accumulate_example_grads(const ParamVector& params, const Batch& batch,
                                     ExactVectorAccumulator& grad_sum,
                                     ExactAccumulator& loss_sum) const {
  check_batch(batch);
  if (!params.layout || !(*params.layout == *layout_)) {
    throw ShapeError("params layout does not match model layout");
  }
  if (grad_sum.size() != layout_->total) {
    throw ShapeError("gradient accumulator size does not match model");
  }

  const auto& widths = spec_.layer_widths;
  const std::size_t num_layers = widths.size() - 1;

  Workspace ws;
  ws.act.resize(widths.size());
  ws.pre.resize(widths.size());
  for (std::size_t l = 0; l < widths.size(); ++l) {
    ws.act[l].resize(widths[l]);
    if (l > 0) ws.pre[l].resize(widths[l]);
  }
  ws.grad.resize(layout_->total);

  // Parameter segment offsets: entries alternate weight, bias per layer.
  std::vector<std::size_t> w_off(num_layers), b_off(num_layers);
  for (std::size_t l = 0; l < num_layers; ++l) {
    w_off[l] = layout_->entries[2 * l].offset;
    b_off[l] = layout_->entries[2 * l + 1].offset;
  }

  std::vector<double> probs(widths.back());

  for (std::size_t ex = 0; ex < batch.count; ++ex) {
    const auto x = batch.example(ex);
    const auto y = batch.label(ex);
    std::copy(x.begin(), x.end(), ws.act[0].begin());

    for (std::size_t l = 0; l < num_layers; ++l) {
      const std::size_t in = widths[l];
      const std::size_t out = widths[l + 1];
      const double* w = params.values.data() + w_off[l];
      const double* b = params.values.data() + b_off[l];
      for (std::size_t o = 0; o < out; ++o) {
        double z = b[o];
        for (std::size_t i = 0; i < in; ++i) z += ws.act[l][i] * w[i * out + o];
        ws.pre[l + 1][o] = z;
        const bool hidden = l + 1 < widths.size() - 1;
        ws.act[l + 1][o] = hidden ? activate(spec_.activation, z) : z;
      }
    }

    // Loss and gradient with respect to the (linear) output layer.
    const std::size_t out_w = widths.back();
    const auto& out_act = ws.act[num_layers];
    double loss = 0.0;
    ws.delta.assign(out_w, 0.0);
    if (spec_.loss == Loss::kMse) {
      for (std::size_t o = 0; o < out_w; ++o) {
        const double d = out_act[o] - y[o];
        loss += d * d;
        ws.delta[o] = 2.0 * d / static_cast<double>(out_w);
      }
      loss /= static_cast<double>(out_w);
    } else {
      double max_z = out_act[0];
      for (std::size_t o = 1; o < out_w; ++o) max_z = std::max(max_z, out_act[o]);
      double norm = 0.0;
      for (std::size_t o = 0; o < out_w; ++o) {
        probs[o] = std::exp(out_act[o] - max_z);
        norm += probs[o];
      }
      const double log_norm = std::log(norm);
      for (std::size_t o = 0; o < out_w; ++o) {
        probs[o] /= norm;
        loss -= y[o] * (out_act[o] - max_z - log_norm);
        ws.delta[o] = probs[o] - y[o];
      }
    }

    for (std::size_t l = num_layers; l-- > 0;) {
      const std::size_t in = widths[l];
      const std::size_t out = widths[l + 1];
      double* gw = ws.grad.data() + w_off[l];
      double* gb = ws.grad.data() + b_off[l];
      for (std::size_t o = 0; o < out; ++o) gb[o] = ws.delta[o];
      for (std::size_t i = 0; i < in; ++i) {
        for (std::size_t o = 0; o < out; ++o) {
          gw[i * out + o] = ws.act[l][i] * ws.delta[o];
        }
      }
      if (l > 0) {
        const double* w = params.values.data() + w_off[l];
        ws.delta_prev.assign(in, 0.0);
        for (std::size_t i = 0; i < in; ++i) {
          double acc = 0.0;
          for (std::size_t o = 0; o < out; ++o) acc += w[i * out + o] * ws.delta[o];
          ws.delta_prev[i] = acc * activate_grad(spec_.activation, ws.pre[l][i]);
        }
        std::swap(ws.delta, ws.delta_prev);
      }
    }

    grad_sum.add(ws.grad);
    loss_sum.add(loss);
  }
}

ForwardBackwardResult Model::forward_backward(const ParamVector& params,
                                              const Batch& batch,
                                              const StatefulKernelState& kernels) const {
  ExactVectorAccumulator grad_sum(layout_->total);
  ExactAccumulator loss_sum;
  accumulate_example_grads(params, batch, grad_sum, loss_sum);

  ForwardBackwardResult result;
  const double inv = 1.0 / static_cast<double>(batch.count);
  result.grads = ParamVector{layout_, grad_sum.rounded()};
  for (double& g : result.grads.values) g *= inv;
  result.loss = loss_sum.total() * inv;
  result.kernels = kernels;
  observe_batch(result.kernels, batch);
  return result;
}

ParamVector init_model(const ModelSpec& spec) { return Model(spec).init_params(); }

ParamVector sgd_apply(const ParamVector& params, const ParamVector& grads, double lr) {
  if (!params.same_layout(grads)) {
    throw ShapeError("sgd_apply: parameter and gradient layouts do not match");
  }
  if (!(lr > 0.0)) throw ConfigError("sgd_apply: learning rate must be positive");
  ParamVector out = params;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] -= lr * grads.values[i];
  }
  return out;
}

}  // namespace vnt
