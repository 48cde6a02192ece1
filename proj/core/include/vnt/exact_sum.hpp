// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace vnt {

namespace detail {

// Fixed-point superaccumulator: 32 payload bits per int64 limb, covering the
// full double range (bit weights 2^-1152 .. 2^1119) with carry headroom.
inline constexpr int kLimbCount = 71;
inline constexpr int kBaseExponent = -1152;
inline constexpr std::int64_t kFoldEvery = std::int64_t{1} << 28;

void limb_add(std::int64_t* limbs, double value);
void limb_merge(std::int64_t* limbs, const std::int64_t* other);
void limb_fold(std::int64_t* limbs);
double limb_round(const std::int64_t* limbs);

}  // namespace detail

// Exact accumulation of doubles. The result of total() is the true real sum
// of every value added, rounded once to the nearest double — independent of
// the order or grouping of add() and merge() calls. That makes reductions
// built on it bit-reproducible across any partitioning of the same addends.
class ExactAccumulator {
 public:
  ExactAccumulator() = default;

  void add(double value);
  void merge(const ExactAccumulator& other);
  double total() const;
  void reset();

 private:
  void bump(std::int64_t weight);

  std::array<std::int64_t, detail::kLimbCount> limbs_{};
  std::int64_t pending_ = 0;
};

// A fixed-length vector of exact accumulators stored contiguously.
class ExactVectorAccumulator {
 public:
  explicit ExactVectorAccumulator(std::size_t size);

  std::size_t size() const { return size_; }

  // Element-wise add; values.size() must equal size().
  void add(std::span<const double> values);
  void merge(const ExactVectorAccumulator& other);
  std::vector<double> rounded() const;
  void reset();

 private:
  void bump(std::int64_t weight);

  std::size_t size_;
  std::vector<std::int64_t> limbs_;
  std::int64_t pending_ = 0;
};

}  // namespace vnt
