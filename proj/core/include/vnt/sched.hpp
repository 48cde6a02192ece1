// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vnt/hetero.hpp"
#include "vnt/model.hpp"

namespace vnt::sched {

struct JobWorkload {
  ModelSpec model;
  std::size_t global_batch = 0;
  std::size_t total_steps = 0;
};

struct Job {
  std::string job_id;
  double priority = 1.0;       // larger is more important
  std::size_t demand = 1;      // max useful device count
  JobWorkload workload;
  double arrival_s = 0.0;

  void validate() const;
};

struct ClusterType {
  hetero::DeviceCostModel cost;
  std::size_t count = 0;
};

struct Cluster {
  std::vector<ClusterType> types;

  std::size_t total_devices() const;
  const ClusterType& type(const std::string& name) const;
  void validate() const;
};

// device type -> device count held by a job
using AllocationMap = std::map<std::string, std::size_t>;

std::size_t allocation_total(const AllocationMap& alloc);

struct FairShareInput {
  std::string job_id;
  double priority = 1.0;
  std::size_t demand = 1;
};

// Priority-proportional fair shares, demand-capped, integerized with a
// highest-quotient (odd divisor) rule. Entry or exit of a job never makes
// one incumbent shrink while another grows, which keeps the scheduling
// guard enforceable on integer allocations. Ties go to the higher priority,
// then the smaller job id.
std::map<std::string, std::size_t> compute_fair_shares(
    const std::vector<FairShareInput>& jobs, std::size_t total_devices);

struct WfsJobView {
  std::string job_id;
  double priority = 1.0;
  std::size_t demand = 1;
  std::size_t current = 0;  // devices currently held (running jobs)
};

struct WfsDecision {
  std::map<std::string, std::size_t> allocations;  // running + admitted
  std::vector<std::string> admitted;               // queue ids, admission order
  // Allocation snapshot after each atomic decision: the expansion first,
  // then one entry per admission.
  std::vector<std::map<std::string, std::size_t>> stages;
};

// Elastic weighted fair sharing: expand current allocations from the free
// pool, then repeatedly admit the queue head as long as no strictly higher
// priority job's allocation would shrink; stop at the first rejection.
WfsDecision wfs_schedule(const std::vector<WfsJobView>& running,
                         const std::vector<WfsJobView>& queue,
                         std::size_t total_devices);

struct RoundJobView {
  std::string job_id;
  double priority = 1.0;
  std::size_t demand = 1;
  double attained_norm = 0.0;  // attained device-seconds / priority
  std::size_t global_batch = 0;
};

struct RoundDecision {
  std::map<std::string, AllocationMap> allocations;
  std::vector<std::string> mixed_grants;  // jobs that gained a second type
};

// Least-attained-service round scheduling. Devices are granted greedily by
// rank from the single best type; leftover devices of other types are added
// only when the cost model predicts strictly higher throughput.
RoundDecision het_round_schedule(const std::vector<RoundJobView>& jobs,
                                 const Cluster& cluster);

enum class Policy { kStatic, kWfs, kHetRounds };

std::string to_string(Policy p);
Policy policy_from_string(const std::string& s);

struct SimOptions {
  Policy policy = Policy::kWfs;
  double round_seconds = 360.0;
  std::uint64_t seed = 0;
};

struct JobMetrics {
  std::string job_id;
  double priority = 0.0;
  std::size_t demand = 0;
  double arrival_s = 0.0;
  double first_alloc_s = -1.0;
  double completion_s = -1.0;
  std::uint64_t steps_total = 0;

  double jct() const { return completion_s - arrival_s; }
  double queueing_delay() const { return first_alloc_s - arrival_s; }
};

struct UtilizationSample {
  double begin_s = 0.0;
  double end_s = 0.0;
  double busy_fraction = 0.0;
};

struct EventLogEntry {
  double time = 0.0;
  std::string kind;  // arrival | completion | schedule | resize | round | mixed-grant
  std::string job_id;
  std::map<std::string, std::size_t> totals_before;  // job -> device count
  std::map<std::string, std::size_t> totals_after;
};

struct TraceMetrics {
  std::vector<JobMetrics> jobs;
  double makespan = 0.0;
  double mean_utilization = 0.0;
  std::vector<UtilizationSample> utilization;
  std::vector<EventLogEntry> log;
  std::size_t mixed_allocation_grants = 0;

  double median_jct() const;
  double median_queueing_delay() const;
};

// Deterministic discrete-event simulation of the trace under the policy.
// Ties process as completion < arrival < round boundary, then by job id.
TraceMetrics run_simulation(const std::vector<Job>& trace, const Cluster& cluster,
                            const SimOptions& options);

}  // namespace vnt::sched
