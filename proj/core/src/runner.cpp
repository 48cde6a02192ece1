// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "vnt/runner.hpp"

#include "vnt/errors.hpp"
#include "vnt/rng.hpp"

namespace vnt {

void RunnerConfig::validate() const {
  model.validate();
  if (global_batch == 0) throw ConfigError("RunnerConfig: global batch must be >= 1");
  if (virtual_nodes == 0) throw ConfigError("RunnerConfig: need at least one virtual node");
  if (global_batch % virtual_nodes != 0) {
    throw ConfigError("RunnerConfig: virtual node count must divide the global batch");
  }
  if (!(lr > 0)) throw ConfigError("RunnerConfig: learning rate must be positive");
  if (devices.empty()) throw ConfigError("RunnerConfig: device list is empty");
  const std::size_t n = dataset_size == 0 ? global_batch : dataset_size;
  if (n < global_batch) {
    throw ConfigError("RunnerConfig: dataset smaller than one batch");
  }
  if (shuffle_epochs && n % global_batch != 0) {
    throw ConfigError("RunnerConfig: shuffled epochs need batch-aligned dataset size");
  }
}

namespace {
RunnerConfig validated(RunnerConfig config) {
  config.validate();
  return config;
}
}  // namespace

Trainer::Trainer(RunnerConfig config)
    : config_(validated(std::move(config))),
      model_(config_.model),
      data_(config_.data_seed,
            config_.dataset_size == 0 ? config_.global_batch : config_.dataset_size,
            config_.model.layer_widths.front(), config_.model.layer_widths.back()),
      world_(make_world(model_, config_.devices)),
      mapping_(make_uniform_mapping(config_.global_batch, config_.virtual_nodes,
                                    config_.devices)) {}

Batch Trainer::batch_for_step(std::uint64_t step) {
  const std::size_t n = data_.size();
  const std::uint64_t start = (step * config_.global_batch) % n;
  if (!config_.shuffle_epochs) {
    return data_.sequential_batch(start, config_.global_batch);
  }
  const std::uint64_t epoch = step * config_.global_batch / n;
  if (perm_epoch_ != epoch) {
    perm_ = random_permutation(
        CounterRng(config_.shuffle_seed).split("epoch").split(epoch), n);
    perm_epoch_ = epoch;
  }
  std::vector<std::uint64_t> ids(perm_.begin() + start,
                                 perm_.begin() + start + config_.global_batch);
  return data_.batch(ids);
}

Batch Trainer::next_batch() {
  if (!config_.prefetch) return batch_for_step(step_);
  Batch batch = (prefetched_ && prefetched_step_ == step_)
                    ? prefetched_->get()
                    : batch_for_step(step_);
  prefetched_step_ = step_ + 1;
  prefetched_ = std::async(std::launch::async,
                           [this, s = step_ + 1] { return batch_for_step(s); });
  return batch;
}

StepMetrics Trainer::step() {
  const Batch batch = next_batch();
  const StepMetrics metrics =
      train_step(model_, world_, mapping_, batch, config_.lr,
                 {.step_index = step_, .parallel_devices = config_.parallel_devices});
  ++step_;
  return metrics;
}

elastic::MigrationPlan Trainer::resize(std::vector<DeviceSpec> new_devices) {
  elastic::MigrationPlan plan = elastic::plan_resize(mapping_, std::move(new_devices));
  world_ = elastic::migrate_state(plan, world_, transport_);
  mapping_ = plan.new_mapping;
  // A pending prefetched batch is unaffected: data order never depends on
  // the device mapping.
  return plan;
}

}  // namespace vnt
