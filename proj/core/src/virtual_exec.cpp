// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "vnt/virtual_exec.hpp"

#include <algorithm>
#include <future>
#include <set>

#include "vnt/errors.hpp"

namespace vnt {

std::size_t VirtualNodeMapping::global_batch() const {
  std::size_t total = 0;
  for (std::size_t s : node_sizes) total += s;
  return total;
}

std::size_t VirtualNodeMapping::node_offset(std::uint32_t node_id) const {
  std::size_t offset = 0;
  for (std::uint32_t k = 0; k < node_id; ++k) offset += node_sizes[k];
  return offset;
}

const DeviceSpec& VirtualNodeMapping::device(const std::string& device_id) const {
  for (const DeviceSpec& d : devices) {
    if (d.device_id == device_id) return d;
  }
  throw ConfigError("mapping has no device " + device_id);
}

void VirtualNodeMapping::validate() const {
  std::set<std::string> ids;
  for (const DeviceSpec& d : devices) {
    if (!ids.insert(d.device_id).second) {
      throw ConfigError("duplicate device id " + d.device_id);
    }
  }
  std::vector<bool> seen(node_sizes.size(), false);
  for (const auto& [device_id, nodes] : assignments) {
    if (ids.find(device_id) == ids.end()) {
      throw ConfigError("assignment references unknown device " + device_id);
    }
    const DeviceSpec& dev = device(device_id);
    std::uint32_t prev = 0;
    bool first = true;
    for (std::uint32_t n : nodes) {
      if (n >= node_sizes.size()) throw ConfigError("node id out of range");
      if (seen[n]) throw ConfigError("node assigned to more than one device");
      seen[n] = true;
      if (!first && n <= prev) {
        throw ConfigError("node ids on device " + device_id + " must ascend");
      }
      prev = n;
      first = false;
      if (node_sizes[n] > dev.memory_capacity) {
        throw CapacityError("virtual node " + std::to_string(n) + " (" +
                            std::to_string(node_sizes[n]) +
                            " examples) exceeds memory capacity of device " +
                            device_id);
      }
    }
  }
  for (std::size_t n = 0; n < seen.size(); ++n) {
    if (!seen[n]) throw ConfigError("node " + std::to_string(n) + " is unassigned");
  }
}

VirtualNodeMapping make_uniform_mapping(std::size_t global_batch,
                                        std::size_t total_nodes,
                                        std::vector<DeviceSpec> devices) {
  if (total_nodes == 0 || devices.empty()) {
    throw ConfigError("make_uniform_mapping: need nodes and devices");
  }
  if (global_batch % total_nodes != 0) {
    throw ConfigError("make_uniform_mapping: node count must divide batch size");
  }
  if (total_nodes < devices.size()) {
    throw ConfigError("make_uniform_mapping: fewer virtual nodes than devices");
  }
  const std::size_t micro = global_batch / total_nodes;
  for (const DeviceSpec& d : devices) {
    if (micro > d.memory_capacity) {
      throw CapacityError("micro-batch of " + std::to_string(micro) +
                          " examples exceeds memory capacity of device " +
                          d.device_id);
    }
  }
  VirtualNodeMapping mapping;
  mapping.devices = std::move(devices);
  mapping.node_sizes.assign(total_nodes, micro);
  for (std::uint32_t n = 0; n < total_nodes; ++n) {
    mapping.assignments[mapping.devices[n % mapping.devices.size()].device_id]
        .push_back(n);
  }
  mapping.validate();
  return mapping;
}

GradientBuffer::GradientBuffer(std::shared_ptr<const Layout> layout)
    : layout_(std::move(layout)), accum_(layout_->total) {}

void GradientBuffer::add_example_grads(const Model& model, const ParamVector& params,
                                       const Batch& micro_batch,
                                       ExactAccumulator& loss_sum) {
  model.accumulate_example_grads(params, micro_batch, accum_, loss_sum);
  examples_ += micro_batch.count;
}

void GradientBuffer::merge(const GradientBuffer& other) {
  if (!(*layout_ == *other.layout_)) {
    throw ShapeError("GradientBuffer: layout mismatch in merge");
  }
  accum_.merge(other.accum_);
  examples_ += other.examples_;
}

DeviceStepResult device_step(const Model& model, const ParamVector& params,
                             const StatefulKernelState& kernels,
                             const std::vector<Batch>& node_batches,
                             const DeviceSpec& device) {
  if (node_batches.empty()) {
    throw ConfigError("device_step: device " + device.device_id +
                      " has no virtual nodes to run");
  }
  DeviceStepResult result{GradientBuffer(model.layout()), kernels, {}, {}};
  result.metrics.device_id = device.device_id;
  for (const Batch& micro : node_batches) {
    if (micro.count > device.memory_capacity) {
      throw CapacityError("micro-batch of " + std::to_string(micro.count) +
                          " examples exceeds memory capacity of device " +
                          device.device_id);
    }
    result.buffer.add_example_grads(model, params, micro, result.loss_sum);
    observe_batch(result.kernels, micro);
    result.metrics.waves += 1;
    result.metrics.examples += micro.count;
    result.metrics.peak_resident = std::max(result.metrics.peak_resident, micro.count);
  }
  result.metrics.buffer_bytes = result.buffer.modeled_bytes();
  return result;
}

ParamVector sync_gradients(
    const std::vector<std::pair<std::string, const GradientBuffer*>>& buffers) {
  if (buffers.empty()) throw ConfigError("sync_gradients: no buffers");
  auto ordered = buffers;
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  const auto layout = ordered.front().second->layout();
  GradientBuffer total(layout);
  for (const auto& [device_id, buffer] : ordered) {
    if (!(*buffer->layout() == *layout)) {
      throw ShapeError("sync_gradients: layout mismatch on device " + device_id);
    }
    total.merge(*buffer);
  }
  const std::size_t global = total.examples_accumulated();
  if (global == 0) throw ConfigError("sync_gradients: zero examples accumulated");

  ParamVector mean{layout, total.rounded_sum()};
  const double inv = 1.0 / static_cast<double>(global);
  for (double& g : mean.values) g *= inv;
  return mean;
}

WorkerState& World::worker(const std::string& device_id) {
  for (WorkerState& w : workers) {
    if (w.device.device_id == device_id) return w;
  }
  throw ConfigError("world has no worker " + device_id);
}

const WorkerState& World::worker(const std::string& device_id) const {
  for (const WorkerState& w : workers) {
    if (w.device.device_id == device_id) return w;
  }
  throw ConfigError("world has no worker " + device_id);
}

void World::validate_replicas() const {
  for (std::size_t i = 1; i < workers.size(); ++i) {
    if (!workers[i].params.bitwise_equal(workers[0].params)) {
      throw ConsistencyError("replica divergence between " +
                             workers[0].device.device_id + " and " +
                             workers[i].device.device_id);
    }
  }
}

World make_world(const Model& model, const std::vector<DeviceSpec>& devices) {
  World world;
  const ParamVector params = model.init_params();
  for (const DeviceSpec& d : devices) {
    world.workers.push_back({d, params, model.init_kernels()});
  }
  std::sort(world.workers.begin(), world.workers.end(),
            [](const WorkerState& a, const WorkerState& b) {
              return a.device.device_id < b.device.device_id;
            });
  return world;
}

StepMetrics train_step(const Model& model, World& world,
                       const VirtualNodeMapping& mapping, const Batch& batch,
                       double lr, const TrainStepOptions& options) {
  mapping.validate();
  if (world.workers.size() != mapping.devices.size()) {
    throw ConfigError("train_step: world and mapping device counts differ");
  }
  if (mapping.global_batch() != batch.count) {
    throw ConfigError("train_step: mapping covers " +
                      std::to_string(mapping.global_batch()) +
                      " examples but batch has " + std::to_string(batch.count));
  }
  world.validate_replicas();

  // Contiguous batch slices by ascending node id, grouped per device.
  std::vector<std::size_t> offsets(mapping.total_nodes() + 1, 0);
  for (std::size_t n = 0; n < mapping.total_nodes(); ++n) {
    offsets[n + 1] = offsets[n] + mapping.node_sizes[n];
  }
  struct DeviceWork {
    const WorkerState* worker = nullptr;
    std::vector<Batch> slices;
  };
  std::vector<DeviceWork> work;
  for (const auto& [device_id, nodes] : mapping.assignments) {
    DeviceWork dw;
    dw.worker = &world.worker(device_id);
    for (std::uint32_t n : nodes) {
      dw.slices.push_back(batch.slice(offsets[n], mapping.node_sizes[n]));
    }
    work.push_back(std::move(dw));
  }

  std::vector<DeviceStepResult> results;
  results.reserve(work.size());
  if (options.parallel_devices) {
    std::vector<std::future<DeviceStepResult>> futures;
    futures.reserve(work.size());
    for (const DeviceWork& dw : work) {
      futures.push_back(std::async(std::launch::async, [&model, &dw] {
        return device_step(model, dw.worker->params, dw.worker->kernels,
                           dw.slices, dw.worker->device);
      }));
    }
    for (auto& f : futures) results.push_back(f.get());
  } else {
    for (const DeviceWork& dw : work) {
      results.push_back(device_step(model, dw.worker->params, dw.worker->kernels,
                                    dw.slices, dw.worker->device));
    }
  }

  std::vector<std::pair<std::string, const GradientBuffer*>> buffers;
  ExactAccumulator loss_sum;
  for (const DeviceStepResult& r : results) {
    buffers.emplace_back(r.metrics.device_id, &r.buffer);
    loss_sum.merge(r.loss_sum);
  }
  const ParamVector mean_grad = sync_gradients(buffers);

  for (std::size_t i = 0; i < work.size(); ++i) {
    WorkerState& w = world.worker(results[i].metrics.device_id);
    w.params = sgd_apply(w.params, mean_grad, lr);
    w.kernels = std::move(results[i].kernels);
  }

  StepMetrics metrics;
  metrics.step = options.step_index;
  metrics.loss = loss_sum.total() / static_cast<double>(batch.count);
  for (DeviceStepResult& r : results) metrics.per_device.push_back(r.metrics);
  std::sort(metrics.per_device.begin(), metrics.per_device.end(),
            [](const DeviceStepMetrics& a, const DeviceStepMetrics& b) {
              return a.device_id < b.device_id;
            });
  return metrics;
}

}  // namespace vnt
