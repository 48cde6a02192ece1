// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "vnt/hetero.hpp"

namespace vnt_test {

// Independent exhaustive enumerator for the heterogeneous assignment search.
// Plain nested loops over every (n, micro, v) combination per type with no
// pruning tricks shared with the production solver. Returns the minimal
// bottleneck step time and the number of feasible assignments.
struct OracleOutcome {
  std::optional<double> best_time;
  std::size_t feasible_count = 0;
  std::size_t single_type_best = 0;  // 1 if some optimum uses one type only
  bool mixed_strictly_better = false;
};

inline OracleOutcome enumerate_assignments(
    const std::vector<vnt::hetero::ProfileCurve>& profiles,
    const vnt::hetero::DevicePool& pool, std::size_t global_batch,
    std::size_t max_vn = 64) {
  struct Option {
    std::size_t n = 0, micro = 0, vn = 0, contribution = 0;
    double branch = 0.0;
  };
  std::vector<std::vector<Option>> per_type;
  std::vector<double> comms;
  for (const auto& [type, entry] : pool.entries) {
    if (entry.count == 0) continue;
    const vnt::hetero::ProfileCurve* curve = nullptr;
    for (const auto& p : profiles) {
      if (p.device_type == type) curve = &p;
    }
    if (curve == nullptr) continue;
    std::vector<Option> options;
    options.push_back({});  // unused
    for (const auto& point : curve->points) {
      if (point.batch_size > entry.memory_capacity) continue;
      for (std::size_t v = 1; v <= max_vn; v *= 2) {
        for (std::size_t n = 1; n <= entry.count; ++n) {
          const std::size_t contribution = n * point.batch_size * v;
          if (contribution > global_batch) continue;
          options.push_back({n, point.batch_size, v, contribution,
                             point.step_time_s * static_cast<double>(v)});
        }
      }
    }
    per_type.push_back(std::move(options));
    comms.push_back(curve->comm_overhead_s);
  }

  OracleOutcome outcome;
  std::optional<double> best_single;
  std::optional<double> best_mixed;

  std::vector<std::size_t> pick(per_type.size(), 0);
  while (true) {
    std::size_t total = 0;
    for (std::size_t i = 0; i < per_type.size(); ++i) {
      total += per_type[i][pick[i]].contribution;
    }
    std::size_t used_types = 0, used_devices = 0;
    double worst = 0.0, comm = 0.0;
    for (std::size_t i = 0; i < per_type.size(); ++i) {
      const Option& o = per_type[i][pick[i]];
      if (o.n == 0) continue;
      ++used_types;
      used_devices += o.n;
      worst = std::max(worst, o.branch);
      comm = std::max(comm, comms[i]);
    }
    if (total == global_batch && used_types > 0) {
      const double time = used_devices >= 2 ? worst + comm : worst;
      ++outcome.feasible_count;
      if (!outcome.best_time || time < *outcome.best_time) outcome.best_time = time;
      auto& slot = used_types == 1 ? best_single : best_mixed;
      if (!slot || time < *slot) slot = time;
    }
    // Odometer increment.
    std::size_t i = 0;
    for (; i < pick.size(); ++i) {
      if (++pick[i] < per_type[i].size()) break;
      pick[i] = 0;
    }
    if (i == pick.size()) break;
    if (pick.empty()) break;
  }

  if (outcome.best_time) {
    outcome.single_type_best =
        best_single && *best_single == *outcome.best_time ? 1 : 0;
    outcome.mixed_strictly_better =
        best_mixed && (!best_single || *best_mixed < *best_single);
  }
  return outcome;
}

}  // namespace vnt_test
