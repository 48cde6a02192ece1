// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "vnt/trace_gen.hpp"

#include <cmath>

#include "vnt/errors.hpp"
#include "vnt/rng.hpp"

namespace vnt::sched {

namespace {

struct WorkloadTemplate {
  std::vector<std::size_t> widths;
  Activation activation;
  Loss loss;
  std::size_t global_batch;
  std::size_t base_steps;
  std::size_t demand;
};

const WorkloadTemplate kTemplates[] = {
    {{8, 16, 8}, Activation::kRelu, Loss::kSoftmaxCrossEntropy, 64, 24000, 2},
    {{16, 32, 8}, Activation::kTanh, Loss::kSoftmaxCrossEntropy, 256, 16000, 4},
    {{8, 8, 4}, Activation::kTanh, Loss::kMse, 128, 40000, 2},
    {{32, 64, 16}, Activation::kRelu, Loss::kSoftmaxCrossEntropy, 1024, 9000, 8},
    {{16, 16, 8}, Activation::kTanh, Loss::kMse, 512, 22000, 4},
};

}  // namespace

std::vector<Job> generate_poisson_trace(const TraceGenOptions& options) {
  if (options.num_jobs == 0) throw ConfigError("generate_poisson_trace: zero jobs");
  if (!(options.mean_interarrival_s > 0)) {
    throw ConfigError("generate_poisson_trace: mean interarrival must be positive");
  }
  if (options.priorities.empty()) {
    throw ConfigError("generate_poisson_trace: empty priority set");
  }
  const CounterRng rng(options.seed);
  const CounterRng arrivals = rng.split("arrivals");
  const CounterRng picks = rng.split("workloads");
  const CounterRng prios = rng.split("priorities");
  const CounterRng jitter = rng.split("steps");

  std::vector<Job> trace;
  double t = 0.0;
  const std::size_t template_count = sizeof(kTemplates) / sizeof(kTemplates[0]);
  for (std::size_t i = 0; i < options.num_jobs; ++i) {
    t += -options.mean_interarrival_s * std::log(1.0 - arrivals.uniform(i));
    const WorkloadTemplate& tpl = kTemplates[picks.below(i, template_count)];

    Job job;
    char id[16];
    std::snprintf(id, sizeof(id), "job%03zu", i);
    job.job_id = id;
    job.priority = options.priorities[prios.below(i, options.priorities.size())];
    job.demand = std::min(tpl.demand, options.max_demand);
    job.arrival_s = t;
    job.workload.model =
        ModelSpec{tpl.widths, tpl.activation, tpl.loss, options.seed * 1000 + i};
    job.workload.global_batch = tpl.global_batch;
    // Uniform jitter in [0.5, 1.5) of the base step count.
    job.workload.total_steps = static_cast<std::size_t>(
        static_cast<double>(tpl.base_steps) * (0.5 + jitter.uniform(i)));
    trace.push_back(std::move(job));
  }
  return trace;
}

}  // namespace vnt::sched
