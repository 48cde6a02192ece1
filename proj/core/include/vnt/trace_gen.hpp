// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "vnt/sched.hpp"

namespace vnt::sched {

struct TraceGenOptions {
  std::uint64_t seed = 0;
  std::size_t num_jobs = 20;
  double mean_interarrival_s = 300.0;
  std::vector<double> priorities = {1.0, 5.0, 10.0};
  std::size_t max_demand = 16;
};

// Seeded Poisson-arrival trace over a fixed mix of toy workloads. Job
// attributes are a pure function of (seed, index).
std::vector<Job> generate_poisson_trace(const TraceGenOptions& options);

}  // namespace vnt::sched
