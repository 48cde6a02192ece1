// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <future>
#include <optional>
#include <vector>

#include "vnt/data.hpp"
#include "vnt/elastic.hpp"
#include "vnt/model.hpp"
#include "vnt/virtual_exec.hpp"

namespace vnt {

struct RunnerConfig {
  ModelSpec model;
  std::size_t global_batch = 0;
  std::size_t virtual_nodes = 0;
  double lr = 0.01;
  std::uint64_t data_seed = 0;
  std::size_t dataset_size = 0;  // defaults to global_batch when zero
  bool shuffle_epochs = false;
  std::uint64_t shuffle_seed = 0;
  std::vector<DeviceSpec> devices;
  bool parallel_devices = false;
  bool prefetch = false;

  void validate() const;
};

// Drives synchronous training over the synthetic data stream. The global
// example order is a function of (data_seed, shuffle_seed, step) only, so
// trajectories are comparable across any device mapping or resize schedule.
class Trainer {
 public:
  explicit Trainer(RunnerConfig config);

  StepMetrics step();
  elastic::MigrationPlan resize(std::vector<DeviceSpec> new_devices);

  std::uint64_t steps_done() const { return step_; }
  const Model& model() const { return model_; }
  const ParamVector& params() const { return world_.workers.front().params; }
  const World& world() const { return world_; }
  const VirtualNodeMapping& mapping() const { return mapping_; }

 private:
  Batch batch_for_step(std::uint64_t step);
  Batch next_batch();

  RunnerConfig config_;
  Model model_;
  SynthDataset data_;
  World world_;
  VirtualNodeMapping mapping_;
  InMemoryTransport transport_;
  std::uint64_t step_ = 0;

  // Current epoch permutation when shuffling.
  std::uint64_t perm_epoch_ = ~0ULL;
  std::vector<std::uint64_t> perm_;

  std::optional<std::future<Batch>> prefetched_;
  std::uint64_t prefetched_step_ = 0;
};

}  // namespace vnt
