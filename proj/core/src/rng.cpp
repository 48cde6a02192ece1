// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "vnt/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vnt {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed) : key_(mix64(seed + kGolden)) {}

CounterRng CounterRng::split(std::uint64_t stream) const {
  return CounterRng(RawKey{}, mix64(key_ ^ mix64(stream + kGolden)));
}

CounterRng CounterRng::split(std::string_view label) const {
  return split(fnv1a(label));
}

std::uint64_t CounterRng::bits(std::uint64_t counter) const {
  return mix64(key_ + counter * kGolden);
}

double CounterRng::uniform(std::uint64_t counter) const {
  return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t counter) const {
  // u1 in (0, 1] so the log is finite.
  const double u1 =
      static_cast<double>((bits(2 * counter) >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(bits(2 * counter + 1) >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t CounterRng::below(std::uint64_t counter, std::uint64_t bound) const {
  if (bound == 0) throw std::invalid_argument("CounterRng::below: bound must be positive");
  return bits(counter) % bound;
}

std::vector<std::uint64_t> random_permutation(const CounterRng& rng, std::uint64_t n) {
  std::vector<std::uint64_t> perm(n);
  for (std::uint64_t i = 0; i < n; ++i) perm[i] = i;
  for (std::uint64_t i = n; i > 1; --i) {
    const std::uint64_t j = rng.below(i, i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

}  // namespace vnt
