// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "vnt/elastic.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <set>

#include "vnt/errors.hpp"
#include "vnt/runner.hpp"

namespace vnt::elastic {

namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

void put_str(std::vector<std::uint8_t>& out, const std::string& s) {
  put_u64(out, s.size());
  out.insert(out.end(), s.begin(), s.end());
}

struct Reader {
  const std::vector<std::uint8_t>& data;
  std::size_t pos = 0;

  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data.at(pos++)) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = u64();
    std::string s(data.begin() + pos, data.begin() + pos + n);
    pos += n;
    return s;
  }
};

std::vector<std::uint8_t> encode_worker_state(const WorkerState& worker) {
  std::vector<std::uint8_t> out;
  put_u64(out, worker.params.values.size());
  for (double v : worker.params.values) put_f64(out, v);
  put_f64(out, worker.kernels.momentum);
  put_u64(out, worker.kernels.layers.size());
  for (const auto& [name, stats] : worker.kernels.layers) {
    put_str(out, name);
    put_f64(out, stats.count);
    put_u64(out, stats.mean.size());
    for (double m : stats.mean) put_f64(out, m);
    for (double m : stats.m2) put_f64(out, m);
  }
  return out;
}

void decode_worker_state(const std::vector<std::uint8_t>& bytes,
                         std::shared_ptr<const Layout> layout,
                         ParamVector& params, StatefulKernelState& kernels) {
  Reader r{bytes};
  const std::uint64_t n = r.u64();
  params.layout = std::move(layout);
  params.values.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) params.values[i] = r.f64();
  kernels.momentum = r.f64();
  kernels.layers.clear();
  const std::uint64_t layer_count = r.u64();
  for (std::uint64_t l = 0; l < layer_count; ++l) {
    const std::string name = r.str();
    LayerStats stats;
    stats.count = r.f64();
    const std::uint64_t width = r.u64();
    stats.mean.resize(width);
    stats.m2.resize(width);
    for (std::uint64_t j = 0; j < width; ++j) stats.mean[j] = r.f64();
    for (std::uint64_t j = 0; j < width; ++j) stats.m2[j] = r.f64();
    kernels.layers.emplace(name, std::move(stats));
  }
}

std::vector<std::string> sorted_ids(const std::vector<DeviceSpec>& devices) {
  std::vector<std::string> ids;
  for (const DeviceSpec& d : devices) ids.push_back(d.device_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

void ResizeRequest::validate(std::uint64_t current_step) const {
  if (new_devices.empty()) throw ConfigError("ResizeRequest: device list is empty");
  if (effective_step < current_step) {
    throw ConfigError("ResizeRequest: effective step is in the past");
  }
}

MigrationPlan plan_resize(const VirtualNodeMapping& current,
                          std::vector<DeviceSpec> new_devices) {
  current.validate();
  if (new_devices.empty()) throw ConfigError("plan_resize: device list is empty");
  std::sort(new_devices.begin(), new_devices.end(),
            [](const DeviceSpec& a, const DeviceSpec& b) {
              return a.device_id < b.device_id;
            });
  for (std::size_t i = 1; i < new_devices.size(); ++i) {
    if (new_devices[i].device_id == new_devices[i - 1].device_id) {
      throw ConfigError("plan_resize: duplicate device id " + new_devices[i].device_id);
    }
  }
  if (current.total_nodes() < new_devices.size()) {
    throw ConfigError("plan_resize: fewer virtual nodes than devices");
  }

  const std::vector<std::string> old_ids = sorted_ids(current.devices);
  const std::vector<std::string> new_ids = sorted_ids(new_devices);

  MigrationPlan plan;
  if (old_ids == new_ids) {
    plan.new_mapping = current;
    return plan;
  }

  // Reverse map: node -> current device.
  std::vector<std::string> node_home(current.total_nodes());
  for (const auto& [device_id, nodes] : current.assignments) {
    for (std::uint32_t n : nodes) node_home[n] = device_id;
  }

  plan.new_mapping.devices = new_devices;
  plan.new_mapping.node_sizes = current.node_sizes;
  for (std::uint32_t n = 0; n < current.total_nodes(); ++n) {
    const DeviceSpec& target = new_devices[n % new_devices.size()];
    if (current.node_sizes[n] > target.memory_capacity) {
      throw CapacityError("plan_resize: virtual node " + std::to_string(n) +
                          " (" + std::to_string(current.node_sizes[n]) +
                          " examples) exceeds memory capacity of device " +
                          target.device_id);
    }
    plan.new_mapping.assignments[target.device_id].push_back(n);
    if (node_home[n] != target.device_id) {
      plan.moves.push_back({n, node_home[n], target.device_id});
    }
  }
  plan.new_mapping.validate();

  std::vector<std::string> survivors, removed, added;
  std::set_intersection(old_ids.begin(), old_ids.end(), new_ids.begin(),
                        new_ids.end(), std::back_inserter(survivors));
  std::set_difference(old_ids.begin(), old_ids.end(), new_ids.begin(),
                      new_ids.end(), std::back_inserter(removed));
  std::set_difference(new_ids.begin(), new_ids.end(), old_ids.begin(),
                      old_ids.end(), std::back_inserter(added));

  if (!survivors.empty()) {
    for (std::size_t i = 0; i < removed.size(); ++i) {
      plan.merge_sources[survivors[i % survivors.size()]].push_back(removed[i]);
    }
    for (std::size_t i = 0; i < added.size(); ++i) {
      plan.state_sources[added[i]] = survivors[i % survivors.size()];
    }
  }
  return plan;
}

World migrate_state(const MigrationPlan& plan, const World& world,
                    Transport& transport) {
  const std::vector<std::string> old_ids = [&] {
    std::vector<std::string> ids;
    for (const WorkerState& w : world.workers) ids.push_back(w.device.device_id);
    std::sort(ids.begin(), ids.end());
    return ids;
  }();
  const std::vector<std::string> new_ids = sorted_ids(plan.new_mapping.devices);
  if (old_ids == new_ids) return world;

  std::vector<std::string> survivors, added;
  std::set_intersection(old_ids.begin(), old_ids.end(), new_ids.begin(),
                        new_ids.end(), std::back_inserter(survivors));
  std::set_difference(new_ids.begin(), new_ids.end(), old_ids.begin(),
                      old_ids.end(), std::back_inserter(added));
  if (survivors.empty()) {
    throw MigrationError("migrate_state: no surviving source device");
  }

  World next;
  for (const std::string& id : survivors) {
    next.workers.push_back(world.worker(id));
  }

  // Removed lineages first: their running statistics merge into survivors so
  // the statistics continue instead of resetting.
  for (const auto& [survivor, sources] : plan.merge_sources) {
    for (const std::string& source : sources) {
      const WorkerState& w = world.worker(source);
      transport.send({source, survivor, "merge:" + source, encode_worker_state(w)});
    }
  }
  for (const auto& [survivor, sources] : plan.merge_sources) {
    WorkerState& target = next.worker(survivor);
    for (const std::string& source : sources) {
      const Message msg = transport.recv(survivor, "merge:" + source);
      ParamVector params;
      StatefulKernelState kernels;
      decode_worker_state(msg.payload, target.params.layout, params, kernels);
      if (!params.bitwise_equal(target.params)) {
        throw ConsistencyError("migrate_state: replica " + source +
                               " diverged from " + survivor);
      }
      merge_kernel_state(target.kernels, kernels);
    }
  }

  // One gather of (params, kernels) from a surviving source per recipient.
  for (const std::string& id : added) {
    const auto it = plan.state_sources.find(id);
    if (it == plan.state_sources.end()) {
      throw MigrationError("migrate_state: no state source for new device " + id);
    }
    const WorkerState& source = next.worker(it->second);
    transport.send({it->second, id, "seed:" + id, encode_worker_state(source)});
  }
  for (const std::string& id : added) {
    const Message msg = transport.recv(id, "seed:" + id);
    WorkerState worker;
    worker.device = plan.new_mapping.device(id);
    decode_worker_state(msg.payload, world.workers.front().params.layout,
                        worker.params, worker.kernels);
    next.workers.push_back(std::move(worker));
  }

  std::sort(next.workers.begin(), next.workers.end(),
            [](const WorkerState& a, const WorkerState& b) {
              return a.device.device_id < b.device.device_id;
            });
  return next;
}

TrajectoryReport resized_training_equivalence_harness(
    const RunnerConfig& config, const std::vector<ResizePoint>& schedule,
    std::size_t total_steps) {
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (schedule[i].step < schedule[i - 1].step) {
      throw ConfigError("resize schedule must be ordered by step");
    }
  }

  Trainer resized(config);
  Trainer baseline(config);
  TrajectoryReport report;
  std::size_t cursor = 0;
  for (std::uint64_t step = 0; step < total_steps; ++step) {
    while (cursor < schedule.size() && schedule[cursor].step == step) {
      resized.resize(schedule[cursor].devices);
      ++cursor;
    }
    resized.step();
    baseline.step();
    double max_div = 0.0;
    const auto& a = resized.params().values;
    const auto& b = baseline.params().values;
    for (std::size_t i = 0; i < a.size(); ++i) {
      max_div = std::max(max_div, std::abs(a[i] - b[i]));
    }
    if (!resized.params().bitwise_equal(baseline.params())) {
      report.bitwise_identical = false;
    }
    report.steps.push_back({step, max_div});
  }
  return report;
}

}  // namespace vnt::elastic
