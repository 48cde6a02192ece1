// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vnt/data.hpp"
#include "vnt/exact_sum.hpp"
#include "vnt/model.hpp"

namespace vnt {

// A fixed-size slice of the global batch; the unit of scheduling. Nodes
// mapped to the same device run sequentially, one wave per node.
struct VirtualNode {
  std::uint32_t id = 0;
  std::size_t micro_batch_size = 0;
};

struct DeviceSpec {
  std::string device_id;
  std::string device_type;
  std::size_t memory_capacity = 0;  // max examples resident per pass
};

// Assignment of all virtual nodes to devices. Every node lives on exactly
// one device; per-device node lists are ascending by node id.
struct VirtualNodeMapping {
  std::vector<DeviceSpec> devices;                              // unique ids
  std::map<std::string, std::vector<std::uint32_t>> assignments;  // device -> nodes
  std::vector<std::size_t> node_sizes;                          // by node id

  std::size_t total_nodes() const { return node_sizes.size(); }
  std::size_t global_batch() const;
  std::size_t node_offset(std::uint32_t node_id) const;  // batch slice start
  const DeviceSpec& device(const std::string& device_id) const;
  void validate() const;
};

// Uniformly sized nodes dealt round-robin over the devices in input order.
VirtualNodeMapping make_uniform_mapping(std::size_t global_batch,
                                        std::size_t total_nodes,
                                        std::vector<DeviceSpec> devices);

// Per-device accumulator for the example-weighted sum of node gradients.
// One buffer per device regardless of how many nodes run on it; its modeled
// footprint is one double per parameter.
class GradientBuffer {
 public:
  explicit GradientBuffer(std::shared_ptr<const Layout> layout);

  const std::shared_ptr<const Layout>& layout() const { return layout_; }
  std::size_t examples_accumulated() const { return examples_; }
  std::size_t modeled_bytes() const { return layout_->total * sizeof(double); }

  void add_example_grads(const Model& model, const ParamVector& params,
                         const Batch& micro_batch, ExactAccumulator& loss_sum);
  void merge(const GradientBuffer& other);
  std::vector<double> rounded_sum() const { return accum_.rounded(); }

 private:
  std::shared_ptr<const Layout> layout_;
  ExactVectorAccumulator accum_;
  std::size_t examples_ = 0;
};

struct DeviceStepMetrics {
  std::string device_id;
  std::size_t waves = 0;
  std::size_t examples = 0;
  std::size_t peak_resident = 0;
  std::size_t buffer_bytes = 0;
};

struct DeviceStepResult {
  GradientBuffer buffer;
  StatefulKernelState kernels;
  ExactAccumulator loss_sum;
  DeviceStepMetrics metrics;
};

// Runs the device's nodes sequentially in ascending node id, aggregating
// example-weighted gradients into the shared buffer.
DeviceStepResult device_step(const Model& model, const ParamVector& params,
                             const StatefulKernelState& kernels,
                             const std::vector<Batch>& node_batches,
                             const DeviceSpec& device);

// Weighted gradient synchronization: (sum of device buffers) / B where B is
// the total example count, reduced in ascending device id. Every example
// contributes equally no matter how unevenly the batch was split.
ParamVector sync_gradients(
    const std::vector<std::pair<std::string, const GradientBuffer*>>& buffers);

struct WorkerState {
  DeviceSpec device;
  ParamVector params;
  StatefulKernelState kernels;
};

struct World {
  std::vector<WorkerState> workers;  // ascending device_id

  WorkerState& worker(const std::string& device_id);
  const WorkerState& worker(const std::string& device_id) const;
  void validate_replicas() const;  // throws ConsistencyError on divergence
};

World make_world(const Model& model, const std::vector<DeviceSpec>& devices);

struct StepMetrics {
  std::uint64_t step = 0;
  double loss = 0.0;
  std::vector<DeviceStepMetrics> per_device;
};

struct TrainStepOptions {
  std::uint64_t step_index = 0;
  bool parallel_devices = false;
};

// One synchronous training step: slice the batch contiguously by node id,
// run every device's waves, synchronize and apply the identical gradient on
// each replica.
StepMetrics train_step(const Model& model, World& world,
                       const VirtualNodeMapping& mapping, const Batch& batch,
                       double lr, const TrainStepOptions& options = {});

}  // namespace vnt
