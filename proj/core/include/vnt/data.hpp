// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace vnt {

// A batch of training examples, row-major.
struct Batch {
  std::size_t count = 0;
  std::size_t input_width = 0;
  std::size_t output_width = 0;
  std::vector<double> examples;  // count x input_width
  std::vector<double> labels;    // count x output_width
  std::vector<std::uint64_t> ids;

  void validate() const;
  std::span<const double> example(std::size_t i) const;
  std::span<const double> label(std::size_t i) const;

  // Copy of rows [begin, begin + len).
  Batch slice(std::size_t begin, std::size_t len) const;
};

// Deterministic synthetic dataset. Example features are standard normal and
// labels are a soft distribution produced by a fixed random teacher, so both
// supported losses have learnable structure. Example ids are 0..size-1 and
// content depends only on (seed, id), never on iteration order.
class SynthDataset {
 public:
  SynthDataset(std::uint64_t seed, std::size_t num_examples,
               std::size_t input_width, std::size_t output_width);

  std::size_t size() const { return num_examples_; }
  std::size_t input_width() const { return input_width_; }
  std::size_t output_width() const { return output_width_; }

  Batch batch(std::span<const std::uint64_t> ids) const;

  // `count` consecutive examples starting at `start`, wrapping around.
  Batch sequential_batch(std::uint64_t start, std::size_t count) const;

 private:
  std::uint64_t seed_;
  std::size_t num_examples_;
  std::size_t input_width_;
  std::size_t output_width_;
  std::vector<double> teacher_;  // input_width x output_width
};

SynthDataset synth_dataset(std::uint64_t seed, std::size_t num_examples,
                           std::size_t input_width, std::size_t output_width);

}  // namespace vnt
