// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vnt/transport.hpp"
#include "vnt/virtual_exec.hpp"

namespace vnt {
struct RunnerConfig;
}

namespace vnt::elastic {

struct ResizeRequest {
  std::string job_id;
  std::vector<DeviceSpec> new_devices;
  std::uint64_t effective_step = 0;

  void validate(std::uint64_t current_step) const;
};

struct Move {
  std::uint32_t node_id = 0;
  std::string from_device;
  std::string to_device;
};

// How to move from one device set to another: the rebalanced mapping keeps
// the total virtual node count and every per-node size unchanged.
struct MigrationPlan {
  VirtualNodeMapping new_mapping;
  std::vector<Move> moves;
  // Recipient device -> surviving device whose (params, kernels) seed it.
  std::map<std::string, std::string> state_sources;
  // Survivor -> removed devices whose kernel state merges into it.
  std::map<std::string, std::vector<std::string>> merge_sources;
};

// Rebalances nodes round-robin by ascending node id over ascending device
// id. Resizing to the identical device set is a no-op plan.
MigrationPlan plan_resize(const VirtualNodeMapping& current,
                          std::vector<DeviceSpec> new_devices);

// Executes the plan: removed lineages merge into survivors by example-count
// weighting, then each new device receives a bitwise copy of (params,
// kernels) from one surviving source through the transport.
World migrate_state(const MigrationPlan& plan, const World& world,
                    Transport& transport);

struct ResizePoint {
  std::uint64_t step = 0;  // takes effect before this step runs
  std::vector<DeviceSpec> devices;
};

struct DivergenceRecord {
  std::uint64_t step = 0;
  double max_divergence = 0.0;
};

struct TrajectoryReport {
  std::vector<DivergenceRecord> steps;
  bool bitwise_identical = true;
};

// Runs the workload with and without the resize schedule and reports the
// max per-element parameter distance after every step.
TrajectoryReport resized_training_equivalence_harness(
    const RunnerConfig& config, const std::vector<ResizePoint>& schedule,
    std::size_t total_steps);

}  // namespace vnt::elastic
