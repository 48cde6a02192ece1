// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "vnt/data.hpp"

#include <cmath>
#include <unordered_set>

#include "vnt/errors.hpp"
#include "vnt/rng.hpp"

namespace vnt {

void Batch::validate() const {
  if (count == 0) throw ConfigError("Batch: count must be >= 1");
  if (examples.size() != count * input_width) {
    throw ShapeError("Batch: examples size does not match count x input_width");
  }
  if (labels.size() != count * output_width) {
    throw ShapeError("Batch: labels size does not match count x output_width");
  }
  if (ids.size() != count) throw ShapeError("Batch: ids size does not match count");
  std::unordered_set<std::uint64_t> seen(ids.begin(), ids.end());
  if (seen.size() != ids.size()) throw ConfigError("Batch: example ids must be distinct");
}

std::span<const double> Batch::example(std::size_t i) const {
  return {examples.data() + i * input_width, input_width};
}

std::span<const double> Batch::label(std::size_t i) const {
  return {labels.data() + i * output_width, output_width};
}

Batch Batch::slice(std::size_t begin, std::size_t len) const {
  if (begin + len > count) throw ConfigError("Batch::slice: out of range");
  Batch out;
  out.count = len;
  out.input_width = input_width;
  out.output_width = output_width;
  out.examples.assign(examples.begin() + begin * input_width,
                      examples.begin() + (begin + len) * input_width);
  out.labels.assign(labels.begin() + begin * output_width,
                    labels.begin() + (begin + len) * output_width);
  out.ids.assign(ids.begin() + begin, ids.begin() + begin + len);
  return out;
}

SynthDataset::SynthDataset(std::uint64_t seed, std::size_t num_examples,
                           std::size_t input_width, std::size_t output_width)
    : seed_(seed),
      num_examples_(num_examples),
      input_width_(input_width),
      output_width_(output_width) {
  if (num_examples == 0 || input_width == 0 || output_width == 0) {
    throw ConfigError("SynthDataset: sizes must be positive");
  }
  const CounterRng teacher_rng = CounterRng(seed).split("teacher");
  teacher_.resize(input_width * output_width);
  const double scale = 1.0 / std::sqrt(static_cast<double>(input_width));
  for (std::size_t k = 0; k < teacher_.size(); ++k) {
    teacher_[k] = teacher_rng.normal(k) * scale;
  }
}

Batch SynthDataset::batch(std::span<const std::uint64_t> ids) const {
  Batch out;
  out.count = ids.size();
  out.input_width = input_width_;
  out.output_width = output_width_;
  out.examples.resize(out.count * input_width_);
  out.labels.resize(out.count * output_width_);
  out.ids.assign(ids.begin(), ids.end());

  const CounterRng x_rng = CounterRng(seed_).split("examples");
  std::vector<double> logits(output_width_);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const std::uint64_t id = ids[r];
    if (id >= num_examples_) throw ConfigError("SynthDataset: example id out of range");
    double* x = out.examples.data() + r * input_width_;
    for (std::size_t j = 0; j < input_width_; ++j) {
      x[j] = x_rng.normal(id * input_width_ + j);
    }
    // Soft teacher labels: rows sum to one, usable by both loss kinds.
    double max_logit = -1e300;
    for (std::size_t o = 0; o < output_width_; ++o) {
      double z = 0.0;
      for (std::size_t j = 0; j < input_width_; ++j) {
        z += x[j] * teacher_[j * output_width_ + o];
      }
      logits[o] = z;
      max_logit = std::max(max_logit, z);
    }
    double norm = 0.0;
    for (std::size_t o = 0; o < output_width_; ++o) {
      logits[o] = std::exp(logits[o] - max_logit);
      norm += logits[o];
    }
    double* y = out.labels.data() + r * output_width_;
    for (std::size_t o = 0; o < output_width_; ++o) y[o] = logits[o] / norm;
  }
  out.validate();
  return out;
}

Batch SynthDataset::sequential_batch(std::uint64_t start, std::size_t count) const {
  std::vector<std::uint64_t> ids(count);
  for (std::size_t i = 0; i < count; ++i) {
    ids[i] = (start + i) % num_examples_;
  }
  return batch(ids);
}

SynthDataset synth_dataset(std::uint64_t seed, std::size_t num_examples,
                           std::size_t input_width, std::size_t output_width) {
  return SynthDataset(seed, num_examples, input_width, output_width);
}

}  // namespace vnt
