// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "vnt/sched.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

#include "vnt/errors.hpp"

namespace vnt::sched {

void Job::validate() const {
  if (job_id.empty()) throw ConfigError("Job: empty job id");
  if (!(priority > 0)) throw ConfigError("Job " + job_id + ": priority must be positive");
  if (demand == 0) throw ConfigError("Job " + job_id + ": demand must be >= 1");
  if (workload.total_steps == 0 || workload.global_batch == 0) {
    throw ConfigError("Job " + job_id + ": workload needs steps and a batch size");
  }
  workload.model.validate();
  if (arrival_s < 0) throw ConfigError("Job " + job_id + ": negative arrival time");
}

std::size_t Cluster::total_devices() const {
  std::size_t total = 0;
  for (const ClusterType& t : types) total += t.count;
  return total;
}

const ClusterType& Cluster::type(const std::string& name) const {
  for (const ClusterType& t : types) {
    if (t.cost.device_type == name) return t;
  }
  throw ConfigError("cluster has no device type " + name);
}

void Cluster::validate() const {
  if (types.empty()) throw ConfigError("Cluster: no device types");
  std::set<std::string> names;
  for (const ClusterType& t : types) {
    t.cost.validate();
    if (!names.insert(t.cost.device_type).second) {
      throw ConfigError("Cluster: duplicate type " + t.cost.device_type);
    }
  }
  if (total_devices() == 0) throw ConfigError("Cluster: zero devices");
}

std::size_t allocation_total(const AllocationMap& alloc) {
  std::size_t total = 0;
  for (const auto& [type, count] : alloc) total += count;
  return total;
}

std::map<std::string, std::size_t> compute_fair_shares(
    const std::vector<FairShareInput>& jobs, std::size_t total_devices) {
  if (total_devices == 0) throw ConfigError("compute_fair_shares: no devices");
  std::map<std::string, std::size_t> shares;
  std::size_t grantable = 0;
  for (const FairShareInput& j : jobs) {
    if (!(j.priority > 0)) throw ConfigError("compute_fair_shares: priority must be positive");
    shares[j.job_id] = 0;
    grantable += j.demand;
  }
  grantable = std::min(grantable, total_devices);

  for (std::size_t granted = 0; granted < grantable; ++granted) {
    const FairShareInput* best = nullptr;
    std::size_t best_alloc = 0;
    for (const FairShareInput& j : jobs) {
      const std::size_t a = shares[j.job_id];
      if (a >= j.demand) continue;
      if (best == nullptr) {
        best = &j;
        best_alloc = a;
        continue;
      }
      // Compare p_j / (2a_j + 1) against the incumbent, cross-multiplied.
      const double lhs = j.priority * static_cast<double>(2 * best_alloc + 1);
      const double rhs = best->priority * static_cast<double>(2 * a + 1);
      if (lhs > rhs ||
          (lhs == rhs && (j.priority > best->priority ||
                          (j.priority == best->priority && j.job_id < best->job_id)))) {
        best = &j;
        best_alloc = a;
      }
    }
    if (best == nullptr) break;
    shares[best->job_id] += 1;
  }
  return shares;
}

WfsDecision wfs_schedule(const std::vector<WfsJobView>& running,
                         const std::vector<WfsJobView>& queue,
                         std::size_t total_devices) {
  WfsDecision decision;
  std::size_t used = 0;
  for (const WfsJobView& j : running) {
    decision.allocations[j.job_id] = j.current;
    used += j.current;
  }
  if (used > total_devices) {
    throw ConfigError("wfs_schedule: current allocations exceed the cluster");
  }

  // Expand current allocations: top running jobs up to their fair-share
  // targets from the free pool, higher priority first. Demand-capped fair
  // shares already equal demand whenever the cluster has spare capacity, so
  // this is also the work-conserving fill. Never shrinks anyone.
  std::vector<FairShareInput> members;
  for (const WfsJobView& j : running) members.push_back({j.job_id, j.priority, j.demand});
  std::size_t free = total_devices - used;
  if (free > 0 && !running.empty()) {
    const auto targets = compute_fair_shares(members, total_devices);
    std::vector<const WfsJobView*> order;
    for (const WfsJobView& j : running) order.push_back(&j);
    std::sort(order.begin(), order.end(), [](const WfsJobView* a, const WfsJobView* b) {
      if (a->priority != b->priority) return a->priority > b->priority;
      return a->job_id < b->job_id;
    });
    for (const WfsJobView* j : order) {
      if (free == 0) break;
      auto& alloc = decision.allocations[j->job_id];
      const std::size_t target = targets.at(j->job_id);
      if (alloc < target) {
        const std::size_t grant = std::min(free, target - alloc);
        alloc += grant;
        free -= grant;
      }
    }
  }
  decision.stages.push_back(decision.allocations);

  // Admission loop: admit the queue head while no strictly higher priority
  // job's allocation would shrink; stop at the first rejection. Incumbents
  // can only lose devices to the admitted candidate, never to each other.
  std::map<std::string, double> member_priority;
  for (const WfsJobView& j : running) member_priority[j.job_id] = j.priority;
  for (const WfsJobView& candidate : queue) {
    std::vector<FairShareInput> with_candidate = members;
    with_candidate.push_back({candidate.job_id, candidate.priority, candidate.demand});
    const auto fair = compute_fair_shares(with_candidate, total_devices);

    bool affected = false;
    for (const auto& [id, priority] : member_priority) {
      if (priority > candidate.priority &&
          fair.at(id) < decision.allocations.at(id)) {
        affected = true;
        break;
      }
    }
    if (affected) break;

    decision.allocations.clear();
    for (const auto& [id, share] : fair) decision.allocations[id] = share;
    members = with_candidate;
    member_priority[candidate.job_id] = candidate.priority;
    decision.admitted.push_back(candidate.job_id);
    decision.stages.push_back(decision.allocations);
  }
  return decision;
}

RoundDecision het_round_schedule(const std::vector<RoundJobView>& jobs,
                                 const Cluster& cluster) {
  cluster.validate();
  RoundDecision decision;
  std::map<std::string, std::size_t> free;
  for (const ClusterType& t : cluster.types) free[t.cost.device_type] = t.count;

  std::vector<const RoundJobView*> order;
  for (const RoundJobView& j : jobs) order.push_back(&j);
  std::sort(order.begin(), order.end(), [](const RoundJobView* a, const RoundJobView* b) {
    if (a->attained_norm != b->attained_norm) return a->attained_norm < b->attained_norm;
    return a->job_id < b->job_id;
  });

  // Types fastest first for greedy picks and leftover offers.
  std::vector<const ClusterType*> by_speed;
  for (const ClusterType& t : cluster.types) by_speed.push_back(&t);
  std::sort(by_speed.begin(), by_speed.end(),
            [](const ClusterType* a, const ClusterType* b) {
              if (a->cost.per_example_cost_s != b->cost.per_example_cost_s) {
                return a->cost.per_example_cost_s < b->cost.per_example_cost_s;
              }
              return a->cost.device_type < b->cost.device_type;
            });

  auto estimate = [&](const AllocationMap& alloc, std::size_t batch) {
    std::vector<hetero::AllocationPart> parts;
    for (const auto& [type, count] : alloc) {
      parts.push_back({cluster.type(type).cost, count});
    }
    return hetero::estimate_step_time(parts, batch);
  };

  // Greedy pass: each job takes the single type giving the best step time.
  for (const RoundJobView* job : order) {
    const ClusterType* best = nullptr;
    std::size_t best_count = 0;
    double best_time = std::numeric_limits<double>::infinity();
    for (const ClusterType* t : by_speed) {
      const std::size_t avail = free[t->cost.device_type];
      if (avail == 0) continue;
      const std::size_t take = std::min(job->demand, avail);
      const double time = estimate({{t->cost.device_type, take}}, job->global_batch);
      if (time < best_time) {
        best_time = time;
        best = t;
        best_count = take;
      }
    }
    if (best != nullptr) {
      decision.allocations[job->job_id][best->cost.device_type] = best_count;
      free[best->cost.device_type] -= best_count;
    } else {
      decision.allocations[job->job_id] = {};
    }
  }

  // Leftover pass: offer idle devices of other types where the cost model
  // predicts a strictly better step time.
  for (const RoundJobView* job : order) {
    AllocationMap& alloc = decision.allocations[job->job_id];
    if (allocation_total(alloc) == 0) continue;
    bool granted = false;
    for (const ClusterType* t : by_speed) {
      const std::string& type = t->cost.device_type;
      if (alloc.count(type) != 0) continue;
      const std::size_t headroom = job->demand - allocation_total(alloc);
      if (headroom == 0) break;
      const std::size_t avail = free[type];
      if (avail == 0) continue;
      const std::size_t grant = std::min(avail, headroom);
      AllocationMap candidate = alloc;
      candidate[type] = grant;
      if (estimate(candidate, job->global_batch) < estimate(alloc, job->global_batch)) {
        alloc = candidate;
        free[type] -= grant;
        granted = true;
      }
    }
    if (granted) decision.mixed_grants.push_back(job->job_id);
  }
  return decision;
}

std::string to_string(Policy p) {
  switch (p) {
    case Policy::kStatic: return "static";
    case Policy::kWfs: return "wfs";
    case Policy::kHetRounds: return "het-rounds";
  }
  return "?";
}

Policy policy_from_string(const std::string& s) {
  if (s == "static") return Policy::kStatic;
  if (s == "wfs") return Policy::kWfs;
  if (s == "het-rounds") return Policy::kHetRounds;
  throw ConfigError("unknown policy: " + s);
}

namespace {

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

enum EventRank { kCompletion = 0, kArrival = 1, kRound = 2 };

struct Event {
  double time = 0.0;
  int rank = 0;
  std::string job_id;
  std::uint64_t gen = 0;

  bool operator>(const Event& other) const {
    if (time != other.time) return time > other.time;
    if (rank != other.rank) return rank > other.rank;
    return job_id > other.job_id;
  }
};

struct SimJob {
  Job spec;
  double remaining_steps = 0.0;
  double attained_device_s = 0.0;
  AllocationMap alloc;
  bool arrived = false;
  bool admitted = false;
  bool done = false;
  double first_alloc = -1.0;
  double completion = -1.0;
  std::uint64_t gen = 0;
};

class Simulator {
 public:
  Simulator(const std::vector<Job>& trace, const Cluster& cluster,
            const SimOptions& options)
      : cluster_(cluster), options_(options) {
    cluster_.validate();
    double prev_arrival = 0.0;
    for (const Job& job : trace) {
      job.validate();
      if (job.arrival_s < prev_arrival) {
        throw ConfigError("trace arrival times must be nondecreasing");
      }
      prev_arrival = job.arrival_s;
      if (job.demand > cluster_.total_devices()) {
        throw ConfigError("Job " + job.job_id + ": demand exceeds the cluster");
      }
      if (!jobs_.emplace(job.job_id, SimJob{job, static_cast<double>(job.workload.total_steps)}).second) {
        throw ConfigError("duplicate job id " + job.job_id);
      }
      events_.push({job.arrival_s, kArrival, job.job_id, 0});
    }
  }

  TraceMetrics run() {
    if (jobs_.empty()) {
      metrics_.makespan = 0;
      metrics_.mean_utilization = 0;
      return metrics_;
    }
    if (options_.policy == Policy::kHetRounds) {
      events_.push({0.0, kRound, "", 0});
    }
    while (!events_.empty()) {
      const Event ev = events_.top();
      events_.pop();
      if (ev.rank == kCompletion) {
        SimJob& job = jobs_.at(ev.job_id);
        if (job.done || ev.gen != job.gen) continue;  // stale
      }
      advance_to(ev.time);
      switch (ev.rank) {
        case kArrival: handle_arrival(ev.job_id); break;
        case kCompletion: handle_completion(ev.job_id); break;
        case kRound: handle_round(); break;
      }
    }
    finalize();
    return metrics_;
  }

 private:
  double step_time(const SimJob& job) const {
    std::vector<hetero::AllocationPart> parts;
    for (const auto& [type, count] : job.alloc) {
      parts.push_back({cluster_.type(type).cost, count});
    }
    return hetero::estimate_step_time(parts, job.spec.workload.global_batch);
  }

  std::size_t busy_devices() const {
    std::size_t total = 0;
    for (const auto& [id, job] : jobs_) {
      if (!job.done) total += allocation_total(job.alloc);
    }
    return total;
  }

  void advance_to(double t) {
    if (t < now_) throw Error("simulator time went backwards");
    const double dt = t - now_;
    if (dt > 0) {
      const std::size_t busy = busy_devices();
      if (busy > 0) {
        for (auto& [id, job] : jobs_) {
          const std::size_t held = allocation_total(job.alloc);
          if (job.done || held == 0) continue;
          job.remaining_steps -= dt / step_time(job);
          job.attained_device_s += static_cast<double>(held) * dt;
        }
        busy_device_seconds_ += static_cast<double>(busy) * dt;
      }
      metrics_.utilization.push_back(
          {now_, t, static_cast<double>(busy) / static_cast<double>(cluster_.total_devices())});
    }
    now_ = t;
  }

  void log(const std::string& kind, const std::string& job_id,
           const std::map<std::string, std::size_t>& before,
           const std::map<std::string, std::size_t>& after) {
    metrics_.log.push_back({now_, kind, job_id, before, after});
  }

  std::map<std::string, std::size_t> totals_snapshot() const {
    std::map<std::string, std::size_t> totals;
    for (const auto& [id, job] : jobs_) {
      if (job.arrived && !job.done) totals[id] = allocation_total(job.alloc);
    }
    return totals;
  }

  void apply_allocation(SimJob& job, const AllocationMap& next) {
    if (job.alloc == next) return;
    const auto before = totals_snapshot();
    job.alloc = next;
    const std::size_t held = allocation_total(next);
    if (held > job.spec.demand) throw Error("allocation exceeds demand");
    if (held > 0 && job.first_alloc < 0) job.first_alloc = now_;
    log("resize", job.spec.job_id, before, totals_snapshot());
    bump_completion(job);
  }

  void bump_completion(SimJob& job) {
    ++job.gen;
    if (job.done) return;
    if (allocation_total(job.alloc) == 0) return;
    if (job.remaining_steps <= 0) {
      events_.push({now_, kCompletion, job.spec.job_id, job.gen});
      return;
    }
    const double finish = now_ + job.remaining_steps * step_time(job);
    events_.push({finish, kCompletion, job.spec.job_id, job.gen});
  }

  void check_capacity() const {
    std::map<std::string, std::size_t> used;
    for (const auto& [id, job] : jobs_) {
      if (job.done) continue;
      for (const auto& [type, count] : job.alloc) used[type] += count;
    }
    for (const auto& [type, count] : used) {
      if (count > cluster_.type(type).count) {
        throw Error("allocation exceeds cluster capacity for type " + type);
      }
    }
  }

  // Fastest types first, deterministic.
  std::vector<const ClusterType*> types_by_speed() const {
    std::vector<const ClusterType*> by_speed;
    for (const ClusterType& t : cluster_.types) by_speed.push_back(&t);
    std::sort(by_speed.begin(), by_speed.end(),
              [](const ClusterType* a, const ClusterType* b) {
                if (a->cost.per_example_cost_s != b->cost.per_example_cost_s) {
                  return a->cost.per_example_cost_s < b->cost.per_example_cost_s;
                }
                return a->cost.device_type < b->cost.device_type;
              });
    return by_speed;
  }

  std::map<std::string, std::size_t> free_by_type() const {
    std::map<std::string, std::size_t> free;
    for (const ClusterType& t : cluster_.types) free[t.cost.device_type] = t.count;
    for (const auto& [id, job] : jobs_) {
      if (job.done) continue;
      for (const auto& [type, count] : job.alloc) free[type] -= count;
    }
    return free;
  }

  void handle_arrival(const std::string& job_id) {
    SimJob& job = jobs_.at(job_id);
    job.arrived = true;
    waiting_.push_back(job_id);
    log("arrival", job_id, {}, {});
    if (options_.policy == Policy::kStatic) {
      static_schedule();
    } else if (options_.policy == Policy::kWfs) {
      wfs_reschedule();
    }
  }

  void handle_completion(const std::string& job_id) {
    SimJob& job = jobs_.at(job_id);
    job.remaining_steps = 0;
    job.done = true;
    job.completion = now_;
    job.alloc.clear();
    ++job.gen;
    log("completion", job_id, {}, {});
    if (options_.policy == Policy::kStatic) {
      static_schedule();
    } else if (options_.policy == Policy::kWfs) {
      wfs_reschedule();
    }
  }

  void handle_round() {
    bool any_left = false;
    for (const auto& [id, job] : jobs_) {
      if (!job.done) any_left = true;
    }
    if (!any_left) return;

    std::vector<RoundJobView> views;
    for (const auto& [id, job] : jobs_) {
      if (!job.arrived || job.done) continue;
      views.push_back({id, job.spec.priority, job.spec.demand,
                       job.attained_device_s / job.spec.priority,
                       job.spec.workload.global_batch});
    }
    if (!views.empty()) {
      const auto before = totals_snapshot();
      const RoundDecision decision = het_round_schedule(views, cluster_);
      for (const RoundJobView& view : views) {
        SimJob& job = jobs_.at(view.job_id);
        job.admitted = true;
        auto it = decision.allocations.find(view.job_id);
        apply_allocation(job, it == decision.allocations.end() ? AllocationMap{}
                                                               : it->second);
      }
      waiting_.clear();
      check_capacity();
      log("round", "", before, totals_snapshot());
      for (const std::string& id : decision.mixed_grants) {
        ++metrics_.mixed_allocation_grants;
        log("mixed-grant", id, {}, {});
      }
    }
    metrics_.log.push_back({now_, "round-boundary", "", {}, {}});
    round_index_ += 1;
    events_.push({static_cast<double>(round_index_) * options_.round_seconds,
                  kRound, "", 0});
  }

  void static_schedule() {
    // Highest priority first; no resizing, no skipping over the head.
    auto order = waiting_;
    std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
      const SimJob& ja = jobs_.at(a);
      const SimJob& jb = jobs_.at(b);
      if (ja.spec.priority != jb.spec.priority) {
        return ja.spec.priority > jb.spec.priority;
      }
      if (ja.spec.arrival_s != jb.spec.arrival_s) {
        return ja.spec.arrival_s < jb.spec.arrival_s;
      }
      return a < b;
    });
    const auto before = totals_snapshot();
    bool changed = false;
    for (const std::string& id : order) {
      SimJob& job = jobs_.at(id);
      auto free = free_by_type();
      std::size_t free_total = 0;
      for (const auto& [type, count] : free) free_total += count;
      if (free_total < job.spec.demand) break;

      AllocationMap alloc;
      std::size_t need = job.spec.demand;
      for (const ClusterType* t : types_by_speed()) {
        if (need == 0) break;
        const std::size_t take = std::min(need, free[t->cost.device_type]);
        if (take > 0) {
          alloc[t->cost.device_type] = take;
          need -= take;
        }
      }
      job.admitted = true;
      apply_allocation(job, alloc);
      waiting_.erase(std::find(waiting_.begin(), waiting_.end(), id));
      changed = true;
    }
    if (changed) {
      check_capacity();
      log("schedule", "", before, totals_snapshot());
    }
  }

  void wfs_reschedule() {
    std::vector<WfsJobView> running;
    for (const auto& [id, job] : jobs_) {
      if (job.admitted && !job.done) {
        running.push_back({id, job.spec.priority, job.spec.demand,
                           allocation_total(job.alloc)});
      }
    }
    std::vector<WfsJobView> queue;
    for (const std::string& id : waiting_) {
      const SimJob& job = jobs_.at(id);
      queue.push_back({id, job.spec.priority, job.spec.demand, 0});
    }

    const WfsDecision decision = wfs_schedule(running, queue, cluster_.total_devices());

    // One log entry per atomic decision (expansion, then each admission),
    // so the priority guard is checkable stage by stage.
    {
      std::map<std::string, std::size_t> prev;
      for (const WfsJobView& j : running) prev[j.job_id] = j.current;
      for (std::size_t i = 0; i < decision.stages.size(); ++i) {
        const bool last = i + 1 == decision.stages.size();
        if (decision.stages[i] != prev || last) {
          log(last ? "schedule" : "schedule-stage", "", prev, decision.stages[i]);
        }
        prev = decision.stages[i];
      }
    }

    for (const std::string& id : decision.admitted) {
      jobs_.at(id).admitted = true;
      waiting_.erase(std::find(waiting_.begin(), waiting_.end(), id));
    }

    // Materialize counts into typed allocations: shrink first, then grow
    // from the fastest free types, higher priority first.
    std::vector<std::pair<std::string, std::size_t>> targets(
        decision.allocations.begin(), decision.allocations.end());
    std::sort(targets.begin(), targets.end(),
              [&](const auto& a, const auto& b) {
                const SimJob& ja = jobs_.at(a.first);
                const SimJob& jb = jobs_.at(b.first);
                if (ja.spec.priority != jb.spec.priority) {
                  return ja.spec.priority > jb.spec.priority;
                }
                return a.first < b.first;
              });

    const auto by_speed = types_by_speed();
    for (const auto& [id, target] : targets) {
      SimJob& job = jobs_.at(id);
      std::size_t held = allocation_total(job.alloc);
      if (held <= target) continue;
      AllocationMap next = job.alloc;
      // Release from the slowest types first.
      for (auto it = by_speed.rbegin(); it != by_speed.rend() && held > target; ++it) {
        const std::string& type = (*it)->cost.device_type;
        auto found = next.find(type);
        if (found == next.end()) continue;
        const std::size_t drop = std::min(found->second, held - target);
        found->second -= drop;
        held -= drop;
        if (found->second == 0) next.erase(found);
      }
      apply_allocation(job, next);
    }
    for (const auto& [id, target] : targets) {
      SimJob& job = jobs_.at(id);
      std::size_t held = allocation_total(job.alloc);
      if (held >= target) continue;
      AllocationMap next = job.alloc;
      auto free = free_by_type();
      for (const ClusterType* t : by_speed) {
        if (held >= target) break;
        const std::string& type = t->cost.device_type;
        const std::size_t take = std::min(free[type], target - held);
        if (take > 0) {
          next[type] += take;
          free[type] -= take;
          held += take;
        }
      }
      apply_allocation(job, next);
    }
    check_capacity();
  }

  void finalize() {
    double first_arrival = std::numeric_limits<double>::infinity();
    double last_completion = 0.0;
    for (const auto& [id, job] : jobs_) {
      if (!job.done) throw Error("job " + id + " never completed");
      first_arrival = std::min(first_arrival, job.spec.arrival_s);
      last_completion = std::max(last_completion, job.completion);
      metrics_.jobs.push_back({id, job.spec.priority, job.spec.demand,
                               job.spec.arrival_s, job.first_alloc, job.completion,
                               job.spec.workload.total_steps});
    }
    std::sort(metrics_.jobs.begin(), metrics_.jobs.end(),
              [](const JobMetrics& a, const JobMetrics& b) {
                return a.job_id < b.job_id;
              });
    metrics_.makespan = last_completion - first_arrival;
    const double span = metrics_.makespan;
    metrics_.mean_utilization =
        span > 0 ? busy_device_seconds_ /
                       (span * static_cast<double>(cluster_.total_devices()))
                 : 0.0;
  }

  Cluster cluster_;
  SimOptions options_;
  std::map<std::string, SimJob> jobs_;
  std::vector<std::string> waiting_;  // arrival order
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  TraceMetrics metrics_;
  double now_ = 0.0;
  double busy_device_seconds_ = 0.0;
  std::uint64_t round_index_ = 0;
};

}  // namespace

double TraceMetrics::median_jct() const {
  std::vector<double> values;
  for (const JobMetrics& j : jobs) values.push_back(j.jct());
  return median(std::move(values));
}

double TraceMetrics::median_queueing_delay() const {
  std::vector<double> values;
  for (const JobMetrics& j : jobs) values.push_back(j.queueing_delay());
  return median(std::move(values));
}

TraceMetrics run_simulation(const std::vector<Job>& trace, const Cluster& cluster,
                            const SimOptions& options) {
  Simulator sim(trace, cluster, options);
  return sim.run();
}

}  // namespace vnt::sched
