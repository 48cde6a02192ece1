// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "vnt/exact_sum.hpp"
#include "vnt/hetero.hpp"
#include "vnt/runner.hpp"
#include "vnt/sched.hpp"
#include "vnt/trace_gen.hpp"

namespace {

using namespace vnt;

std::vector<DeviceSpec> gpus(std::size_t n) {
  std::vector<DeviceSpec> devices;
  for (std::size_t i = 0; i < n; ++i) {
    devices.push_back({"gpu" + std::to_string(i), "V100", 1024});
  }
  return devices;
}

void BM_ExactAccumulatorAdd(benchmark::State& state) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> values(4096);
  for (auto& v : values) v = dist(gen);
  ExactAccumulator acc;
  for (auto _ : state) {
    for (double v : values) acc.add(v);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * values.size());
}
BENCHMARK(BM_ExactAccumulatorAdd);

void BM_ExactVectorRound(benchmark::State& state) {
  const std::size_t width = state.range(0);
  ExactVectorAccumulator acc(width);
  std::vector<double> row(width, 0.125);
  for (int i = 0; i < 64; ++i) acc.add(row);
  for (auto _ : state) {
    benchmark::DoNotOptimize(acc.rounded());
  }
}
BENCHMARK(BM_ExactVectorRound)->Arg(148)->Arg(1024);

void BM_TrainStep(benchmark::State& state) {
  RunnerConfig config;
  config.model = ModelSpec{{4, 16, 4}, Activation::kTanh, Loss::kMse, 1};
  config.global_batch = 64;
  config.virtual_nodes = static_cast<std::size_t>(state.range(0));
  config.lr = 0.05;
  config.dataset_size = 256;
  config.devices = gpus(1);
  Trainer trainer(config);
  for (auto _ : state) {
    benchmark::DoNotOptimize(trainer.step());
  }
  state.SetItemsProcessed(state.iterations() * config.global_batch);
}
BENCHMARK(BM_TrainStep)->Arg(1)->Arg(4)->Arg(16);

void BM_HeteroSolve(benchmark::State& state) {
  std::vector<hetero::ProfileCurve> profiles;
  hetero::DevicePool pool;
  const char* names[] = {"V100", "P100"};
  const double costs[] = {0.00025, 0.001};
  for (int t = 0; t < 2; ++t) {
    hetero::DeviceCostModel m{names[t], 0.002, costs[t], 0.01, 3072, 1.0};
    pool.entries[names[t]] = {2, 3072};
    hetero::ProfileCurve curve;
    curve.device_type = m.device_type;
    curve.comm_overhead_s = m.comm_s;
    for (std::size_t b : hetero::candidate_batch_sizes(3072)) {
      curve.points.push_back({b, m.step_time(b, 1, 2)});
    }
    profiles.push_back(std::move(curve));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(hetero::solve(profiles, pool, 8192));
  }
}
BENCHMARK(BM_HeteroSolve);

void BM_WfsSimulation(benchmark::State& state) {
  const auto trace = sched::generate_poisson_trace(
      {.seed = 7, .num_jobs = 20, .mean_interarrival_s = 300.0, .max_demand = 16});
  sched::Cluster cluster;
  cluster.types.push_back({{"V100", 0.002, 0.001, 0.01, 256, 1.0}, 16});
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        sched::run_simulation(trace, cluster, {.policy = sched::Policy::kWfs}));
  }
}
BENCHMARK(BM_WfsSimulation);

}  // namespace

BENCHMARK_MAIN();
