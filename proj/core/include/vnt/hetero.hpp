// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vnt/model.hpp"
#include "vnt/virtual_exec.hpp"

namespace vnt::hetero {

// Power-of-2 batch sizes up to max_b plus the midpoints between adjacent
// powers of 2 (3, 6, 12, ..., 48, 192, 768, ...), ascending.
std::vector<std::size_t> candidate_batch_sizes(std::size_t max_b);

// Synthetic linear device performance model:
//   step_time(b) = fixed_overhead_s + per_example_cost_s * b
// comm_s is charged once per step when more than one device participates,
// and first_step_multiplier models the slow first step of a fresh program.
struct DeviceCostModel {
  std::string device_type;
  double fixed_overhead_s = 0.0;
  double per_example_cost_s = 0.001;
  double comm_s = 0.0;
  std::size_t memory_capacity = 1024;
  double first_step_multiplier = 1.0;

  double step_time(std::size_t batch, std::size_t devices, std::uint64_t step) const;
  void validate() const;
};

struct ProfilePoint {
  std::size_t batch_size = 0;
  double step_time_s = 0.0;
};

struct ProfileCurve {
  std::string device_type;
  double comm_overhead_s = 0.0;
  std::vector<ProfilePoint> points;  // ascending batch_size

  // Throws ProfileError when the batch size was never profiled; the solver
  // never interpolates between measured points.
  double time_for(std::size_t batch_size) const;
  bool has_point(std::size_t batch_size) const;
};

struct ProfileOptions {
  std::size_t steps = 20;          // timed steps per batch size, >= 20
  std::size_t warmup_cutoff = 5;   // first step index included in the mean
  std::uint64_t data_seed = 1;
};

struct ProfileResult {
  ProfileCurve curve;
  std::vector<std::string> warnings;  // skipped batch sizes etc.
};

// Offline profile: run timed steps of the workload on a single simulated
// device per batch size, record the mean of steps warmup_cutoff..steps, and
// estimate comm as (2-device - 1-device) step time at local batch 1.
ProfileResult profile(const ModelSpec& workload, const DeviceCostModel& device,
                      const std::vector<std::size_t>& batch_sizes,
                      const ProfileOptions& options = {});

struct DevicePoolEntry {
  std::size_t count = 0;
  std::size_t memory_capacity = 0;
};

struct DevicePool {
  std::map<std::string, DevicePoolEntry> entries;  // keyed by device type

  std::size_t total_devices() const;
  void validate() const;
};

struct TypeAssignment {
  std::string device_type;
  std::size_t devices_used = 0;       // n_i
  std::size_t per_device_batch = 0;   // b_i
  std::size_t virtual_nodes = 0;      // v_i

  std::size_t micro_batch() const { return per_device_batch / virtual_nodes; }
};

struct HeteroAssignment {
  std::vector<TypeAssignment> types;  // used types only, sorted by name
  std::size_t global_batch = 0;
  double predicted_step_time_s = 0.0;

  std::size_t total_devices() const;
  void validate() const;  // checks sum(n_i * b_i) == B and divisibility
};

struct SolveOptions {
  std::size_t max_virtual_nodes = 64;  // v_i in {1, 2, 4, ..., 64}
  bool collect_candidates = false;     // keep the full evaluated table
};

struct SolveResult {
  HeteroAssignment best;
  std::vector<HeteroAssignment> candidates;  // when collect_candidates
};

// Exhaustive search over per-type (n_i, micro, v_i) with micro restricted to
// profiled candidate sizes, minimizing the bottleneck step time
// max_i(t_i(micro_i) * v_i) + comm subject to sum(n_i * b_i) == B.
// Ties break toward fewer devices, then the lexicographically smallest
// canonical type tuple. A single-type result is the homogeneous fallback.
SolveResult solve(const std::vector<ProfileCurve>& profiles, const DevicePool& pool,
                  std::size_t global_batch, const SolveOptions& options = {});

// Bottleneck step time of a concrete assignment under the given profiles.
double predict_step_time(const HeteroAssignment& assignment,
                         const std::vector<ProfileCurve>& profiles);

// Continuous analog used by the cluster scheduler: splits B across a fixed
// set of devices so per-example compute time equalizes, with integer waves.
struct AllocationPart {
  DeviceCostModel cost;
  std::size_t count = 0;
};
double estimate_step_time(const std::vector<AllocationPart>& parts,
                          std::size_t global_batch);

struct ShardEntry {
  std::string device_id;
  std::size_t start = 0;
  std::size_t length = 0;
};

// Contiguous, disjoint per-device shards of one epoch's permuted example
// sequence, sized proportionally to per-device batch shares.
struct ShardPlan {
  std::vector<ShardEntry> entries;
  std::vector<std::uint64_t> permutation;

  std::vector<std::uint64_t> shard_ids(std::size_t entry_index) const;
  void validate(std::size_t dataset_size) const;
};

ShardPlan make_shard_plan(std::size_t dataset_size,
                          const std::vector<std::pair<std::string, std::size_t>>& device_shares,
                          std::uint64_t epoch_seed);

ShardPlan make_shard_plan(std::size_t dataset_size, const HeteroAssignment& assignment,
                          std::uint64_t epoch_seed);

// Expands an assignment into concrete devices ("<type>/<k>") and a mapping
// with v_i nodes of size micro per device, node ids device-contiguous.
VirtualNodeMapping mapping_from_assignment(const HeteroAssignment& assignment,
                                           const DevicePool& pool);

}  // namespace vnt::hetero
