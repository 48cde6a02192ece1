// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "vnt/hetero.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vnt/errors.hpp"
#include "vnt/rng.hpp"

namespace vnt::hetero {

std::vector<std::size_t> candidate_batch_sizes(std::size_t max_b) {
  if (max_b == 0) throw ConfigError("candidate_batch_sizes: max_b must be >= 1");
  std::vector<std::size_t> out;
  for (std::size_t p = 1; p <= max_b; p *= 2) {
    out.push_back(p);
    if (p > max_b / 2) break;
  }
  for (std::size_t m = 3; m <= max_b; m *= 2) {
    out.push_back(m);
    if (m > max_b / 2) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

double DeviceCostModel::step_time(std::size_t batch, std::size_t devices,
                                  std::uint64_t step) const {
  double t = fixed_overhead_s + per_example_cost_s * static_cast<double>(batch);
  if (devices > 1) t += comm_s;
  if (step == 1) t *= first_step_multiplier;
  return t;
}

void DeviceCostModel::validate() const {
  if (device_type.empty()) throw ConfigError("DeviceCostModel: device_type required");
  if (fixed_overhead_s < 0 || per_example_cost_s <= 0 || comm_s < 0) {
    throw ConfigError(
        "DeviceCostModel: costs must be non-negative and per-example cost positive");
  }
  if (memory_capacity == 0) throw ConfigError("DeviceCostModel: memory_capacity must be positive");
  if (first_step_multiplier < 1.0) {
    throw ConfigError("DeviceCostModel: first_step_multiplier must be >= 1");
  }
}

double ProfileCurve::time_for(std::size_t batch_size) const {
  for (const ProfilePoint& p : points) {
    if (p.batch_size == batch_size) return p.step_time_s;
  }
  throw ProfileError("no profiled point for batch size " + std::to_string(batch_size) +
                     " on device type " + device_type + "; refusing to interpolate");
}

bool ProfileCurve::has_point(std::size_t batch_size) const {
  for (const ProfilePoint& p : points) {
    if (p.batch_size == batch_size) return true;
  }
  return false;
}

namespace {

// Mean simulated step time over steps cutoff..steps of a run of the
// workload at the given local batch size.
double timed_run(const ModelSpec& workload, const DeviceCostModel& device,
                 std::size_t batch, std::size_t devices, const ProfileOptions& options) {
  Model model(workload);
  SynthDataset data(options.data_seed, batch * devices,
                    workload.input_width(), workload.output_width());
  std::vector<DeviceSpec> specs;
  for (std::size_t d = 0; d < devices; ++d) {
    specs.push_back({device.device_type + "/prof" + std::to_string(d),
                     device.device_type, device.memory_capacity});
  }
  World world = make_world(model, specs);
  const auto mapping = make_uniform_mapping(batch * devices, devices, specs);
  ExactAccumulator sum;
  std::size_t counted = 0;
  for (std::uint64_t step = 1; step <= options.steps; ++step) {
    const Batch b = data.sequential_batch(0, batch * devices);
    train_step(model, world, mapping, b, 0.01, {.step_index = step});
    if (step >= options.warmup_cutoff) {
      sum.add(device.step_time(batch, devices, step));
      ++counted;
    }
  }
  return sum.total() / static_cast<double>(counted);
}

}  // namespace

ProfileResult profile(const ModelSpec& workload, const DeviceCostModel& device,
                      const std::vector<std::size_t>& batch_sizes,
                      const ProfileOptions& options) {
  device.validate();
  workload.validate();
  if (options.steps < 20) throw ConfigError("profile: need at least 20 timed steps");
  if (options.warmup_cutoff < 2 || options.warmup_cutoff > options.steps) {
    throw ConfigError("profile: warm-up cutoff out of range");
  }

  ProfileResult result;
  result.curve.device_type = device.device_type;
  for (std::size_t b : batch_sizes) {
    if (b == 0) throw ConfigError("profile: batch size must be positive");
    if (b > device.memory_capacity) {
      result.warnings.push_back("skipped batch size " + std::to_string(b) +
                                ": exceeds memory capacity of " + device.device_type);
      continue;
    }
    result.curve.points.push_back({b, timed_run(workload, device, b, 1, options)});
  }
  std::sort(result.curve.points.begin(), result.curve.points.end(),
            [](const ProfilePoint& a, const ProfilePoint& b) {
              return a.batch_size < b.batch_size;
            });
  const double single = timed_run(workload, device, 1, 1, options);
  const double dist = timed_run(workload, device, 1, 2, options);
  result.curve.comm_overhead_s = dist - single;
  return result;
}

std::size_t DevicePool::total_devices() const {
  std::size_t total = 0;
  for (const auto& [type, entry] : entries) total += entry.count;
  return total;
}

void DevicePool::validate() const {
  bool any = false;
  for (const auto& [type, entry] : entries) {
    if (type.empty()) throw ConfigError("DevicePool: empty device type name");
    if (entry.count > 0) {
      any = true;
      if (entry.memory_capacity == 0) {
        throw ConfigError("DevicePool: zero memory capacity for type " + type);
      }
    }
  }
  if (!any) throw ConfigError("DevicePool: need at least one device");
}

std::size_t HeteroAssignment::total_devices() const {
  std::size_t total = 0;
  for (const TypeAssignment& t : types) total += t.devices_used;
  return total;
}

void HeteroAssignment::validate() const {
  std::size_t covered = 0;
  std::set<std::string> names;
  for (const TypeAssignment& t : types) {
    if (!names.insert(t.device_type).second) {
      throw ConfigError("HeteroAssignment: duplicate type " + t.device_type);
    }
    if (t.devices_used == 0) throw ConfigError("HeteroAssignment: unused type listed");
    if (t.virtual_nodes == 0 || t.per_device_batch == 0 ||
        t.per_device_batch % t.virtual_nodes != 0) {
      throw ConfigError(
          "HeteroAssignment: per-device batch must be a positive multiple of virtual nodes");
    }
    covered += t.devices_used * t.per_device_batch;
  }
  if (covered != global_batch) {
    throw ConfigError("HeteroAssignment: per-type batches sum to " +
                      std::to_string(covered) + ", expected " +
                      std::to_string(global_batch));
  }
}

namespace {

struct TypeOption {
  std::size_t devices = 0;  // n, 0 means type unused
  std::size_t micro = 0;
  std::size_t virtual_nodes = 0;
  std::size_t contribution = 0;  // n * micro * v
  double branch_time = 0.0;      // t(micro) * v
};

struct TypeSearch {
  std::string type;
  double comm = 0.0;
  std::vector<TypeOption> options;  // includes the unused option first
  std::size_t max_contribution = 0;
  std::size_t raw_reachable = 0;  // ignores the <= B filter
};

// Deterministic tie order: sorted (type, n, b, v) tuples compared
// lexicographically.
int compare_canonical(const HeteroAssignment& a, const HeteroAssignment& b) {
  const std::size_t n = std::min(a.types.size(), b.types.size());
  for (std::size_t i = 0; i < n; ++i) {
    const TypeAssignment& x = a.types[i];
    const TypeAssignment& y = b.types[i];
    if (x.device_type != y.device_type) return x.device_type < y.device_type ? -1 : 1;
    if (x.devices_used != y.devices_used) return x.devices_used < y.devices_used ? -1 : 1;
    if (x.per_device_batch != y.per_device_batch) {
      return x.per_device_batch < y.per_device_batch ? -1 : 1;
    }
    if (x.virtual_nodes != y.virtual_nodes) {
      return x.virtual_nodes < y.virtual_nodes ? -1 : 1;
    }
  }
  if (a.types.size() != b.types.size()) return a.types.size() < b.types.size() ? -1 : 1;
  return 0;
}

bool better_assignment(const HeteroAssignment& a, const HeteroAssignment& b) {
  if (a.predicted_step_time_s != b.predicted_step_time_s) {
    return a.predicted_step_time_s < b.predicted_step_time_s;
  }
  if (a.total_devices() != b.total_devices()) {
    return a.total_devices() < b.total_devices();
  }
  return compare_canonical(a, b) < 0;
}

}  // namespace

SolveResult solve(const std::vector<ProfileCurve>& profiles, const DevicePool& pool,
                  std::size_t global_batch, const SolveOptions& options) {
  pool.validate();
  if (global_batch == 0) throw ConfigError("solve: global batch must be >= 1");

  std::vector<TypeSearch> searches;
  for (const auto& [type, entry] : pool.entries) {
    if (entry.count == 0) continue;
    const ProfileCurve* curve = nullptr;
    for (const ProfileCurve& p : profiles) {
      if (p.device_type == type) curve = &p;
    }
    if (curve == nullptr) throw ConfigError("solve: no profile for device type " + type);

    TypeSearch search;
    search.type = type;
    search.comm = curve->comm_overhead_s;
    search.options.push_back({});  // unused
    for (const ProfilePoint& point : curve->points) {
      if (point.batch_size > entry.memory_capacity) continue;
      for (std::size_t v = 1; v <= options.max_virtual_nodes; v *= 2) {
        const std::size_t per_device = point.batch_size * v;
        search.raw_reachable =
            std::max(search.raw_reachable, entry.count * per_device);
        if (per_device > global_batch) break;
        for (std::size_t n = 1; n <= entry.count; ++n) {
          const std::size_t contribution = n * per_device;
          if (contribution > global_batch) break;
          search.options.push_back({n, point.batch_size, v, contribution,
                                    point.step_time_s * static_cast<double>(v)});
          search.max_contribution = std::max(search.max_contribution, contribution);
        }
      }
    }
    searches.push_back(std::move(search));
  }

  SolveResult result;
  bool found = false;
  std::vector<const TypeOption*> chosen(searches.size());

  std::vector<std::size_t> suffix_max(searches.size() + 1, 0);
  for (std::size_t i = searches.size(); i-- > 0;) {
    suffix_max[i] = suffix_max[i + 1] + searches[i].max_contribution;
  }

  auto finalize = [&] {
    HeteroAssignment assignment;
    assignment.global_batch = global_batch;
    double worst = 0.0;
    double comm = 0.0;
    for (std::size_t i = 0; i < searches.size(); ++i) {
      const TypeOption* opt = chosen[i];
      if (opt->devices == 0) continue;
      assignment.types.push_back({searches[i].type, opt->devices,
                                  opt->micro * opt->virtual_nodes,
                                  opt->virtual_nodes});
      worst = std::max(worst, opt->branch_time);
      comm = std::max(comm, searches[i].comm);
    }
    if (assignment.types.empty()) return;
    assignment.predicted_step_time_s =
        assignment.total_devices() >= 2 ? worst + comm : worst;
    if (options.collect_candidates) result.candidates.push_back(assignment);
    if (!found || better_assignment(assignment, result.best)) {
      result.best = assignment;
      found = true;
    }
  };

  auto recurse = [&](auto&& self, std::size_t index, std::size_t remaining) -> void {
    if (index == searches.size()) {
      if (remaining == 0) finalize();
      return;
    }
    if (remaining > suffix_max[index]) return;
    for (const TypeOption& opt : searches[index].options) {
      if (opt.contribution > remaining) continue;
      chosen[index] = &opt;
      self(self, index + 1, remaining - opt.contribution);
    }
  };
  recurse(recurse, 0, global_batch);

  if (!found) {
    std::size_t reachable = 0;
    for (const TypeSearch& s : searches) reachable += s.raw_reachable;
    std::string msg = "solve: no feasible assignment for global batch " +
                      std::to_string(global_batch) + "; ";
    if (reachable < global_batch) {
      msg += "tightest constraint: capacity - the pool covers at most " +
             std::to_string(reachable) + " examples per step";
    } else {
      msg += "tightest constraint: granularity - no combination of candidate "
             "per-device batches sums exactly to the global batch";
    }
    throw InfeasibleError(msg);
  }
  return result;
}

double predict_step_time(const HeteroAssignment& assignment,
                         const std::vector<ProfileCurve>& profiles) {
  assignment.validate();
  double worst = 0.0;
  double comm = 0.0;
  for (const TypeAssignment& t : assignment.types) {
    const ProfileCurve* curve = nullptr;
    for (const ProfileCurve& p : profiles) {
      if (p.device_type == t.device_type) curve = &p;
    }
    if (curve == nullptr) {
      throw ProfileError("predict_step_time: no profile for type " + t.device_type);
    }
    worst = std::max(worst, curve->time_for(t.micro_batch()) *
                                static_cast<double>(t.virtual_nodes));
    comm = std::max(comm, curve->comm_overhead_s);
  }
  return assignment.total_devices() >= 2 ? worst + comm : worst;
}

double estimate_step_time(const std::vector<AllocationPart>& parts,
                          std::size_t global_batch) {
  if (global_batch == 0) throw ConfigError("estimate_step_time: empty batch");
  double denom = 0.0;
  std::size_t devices = 0;
  for (const AllocationPart& part : parts) {
    if (part.count == 0) continue;
    part.cost.validate();
    denom += static_cast<double>(part.count) / part.cost.per_example_cost_s;
    devices += part.count;
  }
  if (devices == 0) throw ConfigError("estimate_step_time: no devices");

  const double tau = static_cast<double>(global_batch) / denom;
  double fixed = 0.0;
  double comm = 0.0;
  for (const AllocationPart& part : parts) {
    if (part.count == 0) continue;
    const double per_device = tau / part.cost.per_example_cost_s;
    const double waves = std::max(
        1.0, std::ceil(per_device / static_cast<double>(part.cost.memory_capacity)));
    fixed = std::max(fixed, part.cost.fixed_overhead_s * waves);
    comm = std::max(comm, part.cost.comm_s);
  }
  return tau + fixed + (devices >= 2 ? comm : 0.0);
}

std::vector<std::uint64_t> ShardPlan::shard_ids(std::size_t entry_index) const {
  const ShardEntry& e = entries.at(entry_index);
  return {permutation.begin() + e.start, permutation.begin() + e.start + e.length};
}

void ShardPlan::validate(std::size_t dataset_size) const {
  if (permutation.size() != dataset_size) {
    throw ConfigError("ShardPlan: permutation does not cover the dataset");
  }
  std::size_t covered = 0;
  for (const ShardEntry& e : entries) {
    if (e.start != covered) throw ConfigError("ShardPlan: shards must be contiguous");
    covered += e.length;
  }
  if (covered != dataset_size) {
    throw ConfigError("ShardPlan: shards do not cover the dataset");
  }
}

ShardPlan make_shard_plan(std::size_t dataset_size,
                          const std::vector<std::pair<std::string, std::size_t>>& device_shares,
                          std::uint64_t epoch_seed) {
  if (dataset_size == 0) throw ConfigError("make_shard_plan: empty dataset");
  if (device_shares.empty()) throw ConfigError("make_shard_plan: no devices");
  std::size_t total_share = 0;
  for (const auto& [id, share] : device_shares) {
    if (share == 0) throw ConfigError("make_shard_plan: zero share for " + id);
    total_share += share;
  }

  std::vector<std::size_t> lengths(device_shares.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < device_shares.size(); ++i) {
    lengths[i] = dataset_size * device_shares[i].second / total_share;
    assigned += lengths[i];
  }
  // Remainder examples go round-robin to the largest shards.
  std::vector<std::size_t> order(device_shares.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (device_shares[a].second != device_shares[b].second) {
      return device_shares[a].second > device_shares[b].second;
    }
    return a < b;
  });
  for (std::size_t r = 0; assigned < dataset_size; ++r, ++assigned) {
    lengths[order[r % order.size()]] += 1;
  }

  ShardPlan plan;
  plan.permutation =
      random_permutation(CounterRng(epoch_seed).split("epoch"), dataset_size);
  std::size_t start = 0;
  for (std::size_t i = 0; i < device_shares.size(); ++i) {
    plan.entries.push_back({device_shares[i].first, start, lengths[i]});
    start += lengths[i];
  }
  plan.validate(dataset_size);
  return plan;
}

ShardPlan make_shard_plan(std::size_t dataset_size, const HeteroAssignment& assignment,
                          std::uint64_t epoch_seed) {
  assignment.validate();
  std::vector<std::pair<std::string, std::size_t>> shares;
  for (const TypeAssignment& t : assignment.types) {
    for (std::size_t k = 0; k < t.devices_used; ++k) {
      shares.emplace_back(t.device_type + "/" + std::to_string(k), t.per_device_batch);
    }
  }
  return make_shard_plan(dataset_size, shares, epoch_seed);
}

VirtualNodeMapping mapping_from_assignment(const HeteroAssignment& assignment,
                                           const DevicePool& pool) {
  assignment.validate();
  VirtualNodeMapping mapping;
  std::uint32_t node = 0;
  for (const TypeAssignment& t : assignment.types) {
    const auto it = pool.entries.find(t.device_type);
    if (it == pool.entries.end() || it->second.count < t.devices_used) {
      throw ConfigError("mapping_from_assignment: pool cannot satisfy type " +
                        t.device_type);
    }
    const std::size_t micro = t.micro_batch();
    for (std::size_t k = 0; k < t.devices_used; ++k) {
      const std::string device_id = t.device_type + "/" + std::to_string(k);
      mapping.devices.push_back({device_id, t.device_type, it->second.memory_capacity});
      for (std::size_t v = 0; v < t.virtual_nodes; ++v) {
        mapping.assignments[device_id].push_back(node);
        mapping.node_sizes.push_back(micro);
        ++node;
      }
    }
  }
  mapping.validate();
  return mapping;
}

}  // namespace vnt::hetero
