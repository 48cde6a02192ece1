// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vnt/data.hpp"
#include "vnt/exact_sum.hpp"

namespace vnt {

enum class Activation { kRelu, kTanh, kIdentity };
enum class Loss { kMse, kSoftmaxCrossEntropy };

std::string to_string(Activation a);
std::string to_string(Loss l);
Activation activation_from_string(const std::string& s);
Loss loss_from_string(const std::string& s);

// Dense-network workload description. Identical (spec, seed) pairs always
// produce bitwise-identical initial parameters.
struct ModelSpec {
  std::vector<std::size_t> layer_widths;
  Activation activation = Activation::kTanh;
  Loss loss = Loss::kMse;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t input_width() const { return layer_widths.front(); }
  std::size_t output_width() const { return layer_widths.back(); }
};

struct LayoutEntry {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t length = 0;
};

struct Layout {
  std::vector<LayoutEntry> entries;
  std::size_t total = 0;

  bool operator==(const Layout& other) const;
  static Layout for_spec(const ModelSpec& spec);
};

// Flat parameter (or gradient) vector plus the immutable layout describing
// how segments map onto layers.
struct ParamVector {
  std::shared_ptr<const Layout> layout;
  std::vector<double> values;

  bool same_layout(const ParamVector& other) const;
  bool bitwise_equal(const ParamVector& other) const;
};

// Streaming per-feature moments of every example a device lineage has
// observed. Uses exact count-weighted combining so that states merged on a
// resize agree with a from-scratch pass over the union of the streams.
struct LayerStats {
  double count = 0.0;
  std::vector<double> mean;
  std::vector<double> m2;  // sum of squared deviations

  std::vector<double> variance() const;  // population variance, entries >= 0
  void observe(std::size_t rows, std::size_t width, std::span<const double> data);
  void combine(const LayerStats& other);
};

struct StatefulKernelState {
  double momentum = 0.9;  // must lie in (0, 1)
  std::map<std::string, LayerStats> layers;

  void validate() const;
};

// Updates the tracked input statistics with one micro-batch.
void observe_batch(StatefulKernelState& state, const Batch& batch);

// Example-count-weighted merge used when device lineages are combined.
void merge_kernel_state(StatefulKernelState& into, const StatefulKernelState& from);

struct ForwardBackwardResult {
  double loss = 0.0;
  ParamVector grads;  // mean gradient over the batch
  StatefulKernelState kernels;
};

// Deterministic dense network with per-example forward/backward passes.
// All batch reductions run through exact accumulators, so gradients do not
// depend on how a batch is grouped into micro-batches.
class Model {
 public:
  explicit Model(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  const std::shared_ptr<const Layout>& layout() const { return layout_; }
  std::size_t param_count() const { return layout_->total; }

  ParamVector init_params() const;
  StatefulKernelState init_kernels() const;

  ForwardBackwardResult forward_backward(const ParamVector& params,
                                         const Batch& batch,
                                         const StatefulKernelState& kernels) const;

  // Adds the per-example gradient and loss of every example in `batch` to the
  // accumulators, without dividing by the batch size.
  void accumulate_example_grads(const ParamVector& params, const Batch& batch,
                                ExactVectorAccumulator& grad_sum,
                                ExactAccumulator& loss_sum) const;

 private:
  void check_batch(const Batch& batch) const;

  ModelSpec spec_;
  std::shared_ptr<const Layout> layout_;
};

ParamVector init_model(const ModelSpec& spec);

ParamVector sgd_apply(const ParamVector& params, const ParamVector& grads, double lr);

}  // namespace vnt
