// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace vnt {

// Counter-based, splittable pseudo-random generator.
//
// Every draw is a pure function of (key, counter), so values do not depend
// on the order in which shards or workers consume them. Substreams derived
// with split() are statistically independent of the parent stream.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed);

  CounterRng split(std::uint64_t stream) const;
  CounterRng split(std::string_view label) const;

  std::uint64_t bits(std::uint64_t counter) const;

  // Uniform double in [0, 1).
  double uniform(std::uint64_t counter) const;

  // Standard normal via Box-Muller; consumes counters 2c and 2c+1.
  double normal(std::uint64_t counter) const;

  // Uniform integer in [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t counter, std::uint64_t bound) const;

  std::uint64_t key() const { return key_; }

 private:
  struct RawKey {};
  CounterRng(RawKey, std::uint64_t key) : key_(key) {}

  std::uint64_t key_;
};

// Deterministic Fisher-Yates permutation of 0..n-1 under the given stream.
std::vector<std::uint64_t> random_permutation(const CounterRng& rng, std::uint64_t n);

}  // namespace vnt
