// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "vnt/exact_sum.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace vnt {
namespace detail {

void limb_add(std::int64_t* limbs, double value) {
  if (value == 0.0) return;
  if (!std::isfinite(value)) {
    throw std::invalid_argument("ExactAccumulator: non-finite value");
  }
  int exp = 0;
  const double frac = std::frexp(value, &exp);
  const auto mant = static_cast<std::int64_t>(std::ldexp(frac, 53));
  // value == mant * 2^(exp - 53), |mant| in [2^52, 2^53).
  const int shift = (exp - 53) - kBaseExponent;
  const int limb = shift >> 5;
  const int off = shift & 31;
  const auto mag = static_cast<std::uint64_t>(mant < 0 ? -mant : mant);
  const unsigned __int128 m = static_cast<unsigned __int128>(mag) << off;
  const auto c0 = static_cast<std::int64_t>(static_cast<std::uint32_t>(m));
  const auto c1 = static_cast<std::int64_t>(static_cast<std::uint32_t>(m >> 32));
  const auto c2 = static_cast<std::int64_t>(static_cast<std::uint32_t>(m >> 64));
  if (mant < 0) {
    limbs[limb] -= c0;
    limbs[limb + 1] -= c1;
    limbs[limb + 2] -= c2;
  } else {
    limbs[limb] += c0;
    limbs[limb + 1] += c1;
    limbs[limb + 2] += c2;
  }
}

void limb_merge(std::int64_t* limbs, const std::int64_t* other) {
  for (int i = 0; i < kLimbCount; ++i) limbs[i] += other[i];
}

void limb_fold(std::int64_t* limbs) {
  for (int i = 0; i + 1 < kLimbCount; ++i) {
    const std::int64_t carry = limbs[i] >> 32;
    limbs[i] -= carry << 32;
    limbs[i + 1] += carry;
  }
}

double limb_round(const std::int64_t* limbs) {
  std::array<std::int64_t, kLimbCount> a;
  std::memcpy(a.data(), limbs, sizeof(a));
  limb_fold(a.data());

  // After folding, limbs 0..n-2 are in [0, 2^32) and the top limb carries the
  // sign of the whole value.
  const bool negative = a[kLimbCount - 1] < 0;
  if (negative) {
    for (auto& l : a) l = -l;
    limb_fold(a.data());
  }

  int h = kLimbCount - 1;
  while (h >= 0 && a[h] == 0) --h;
  if (h < 0) return 0.0;

  const int msb = 63 - std::countl_zero(static_cast<std::uint64_t>(a[h]));
  const int top_pos = 32 * h + msb + kBaseExponent;
  const int target_lsb = std::max(top_pos - 52, -1074);

  // Gather a 128-bit window covering the mantissa, guard and near sticky bits.
  unsigned __int128 w = 0;
  for (int i = 0; i < 4; ++i) {
    const int idx = h - 3 + i;
    if (idx >= 0) {
      w |= static_cast<unsigned __int128>(static_cast<std::uint64_t>(a[idx]))
           << (32 * i);
    }
  }
  const int w_base = 32 * (h - 3) + kBaseExponent;
  const int drop = target_lsb - w_base;

  auto mant = static_cast<std::uint64_t>(w >> drop);
  const bool guard = drop > 0 && ((w >> (drop - 1)) & 1) != 0;
  bool sticky = false;
  if (drop > 1) {
    const unsigned __int128 mask =
        (static_cast<unsigned __int128>(1) << (drop - 1)) - 1;
    sticky = (w & mask) != 0;
  }
  for (int i = 0; i < h - 3 && !sticky; ++i) sticky = a[i] != 0;

  if (guard && (sticky || (mant & 1) != 0)) ++mant;

  // mant <= 2^53 and target_lsb >= -1074, so this conversion is exact;
  // ldexp overflows to +/-inf if the true sum exceeds the double range.
  const double result = std::ldexp(static_cast<double>(mant), target_lsb);
  return negative ? -result : result;
}

}  // namespace detail

void ExactAccumulator::bump(std::int64_t weight) {
  pending_ += weight;
  if (pending_ >= detail::kFoldEvery) {
    detail::limb_fold(limbs_.data());
    pending_ = 0;
  }
}

void ExactAccumulator::add(double value) {
  detail::limb_add(limbs_.data(), value);
  bump(1);
}

void ExactAccumulator::merge(const ExactAccumulator& other) {
  detail::limb_merge(limbs_.data(), other.limbs_.data());
  bump(other.pending_ + 1);
}

double ExactAccumulator::total() const {
  return detail::limb_round(limbs_.data());
}

void ExactAccumulator::reset() {
  limbs_.fill(0);
  pending_ = 0;
}

ExactVectorAccumulator::ExactVectorAccumulator(std::size_t size)
    : size_(size), limbs_(size * detail::kLimbCount, 0) {}

void ExactVectorAccumulator::bump(std::int64_t weight) {
  pending_ += weight;
  if (pending_ >= detail::kFoldEvery) {
    for (std::size_t i = 0; i < size_; ++i) {
      detail::limb_fold(limbs_.data() + i * detail::kLimbCount);
    }
    pending_ = 0;
  }
}

void ExactVectorAccumulator::add(std::span<const double> values) {
  if (values.size() != size_) {
    throw std::invalid_argument("ExactVectorAccumulator: size mismatch");
  }
  for (std::size_t i = 0; i < size_; ++i) {
    detail::limb_add(limbs_.data() + i * detail::kLimbCount, values[i]);
  }
  bump(1);
}

void ExactVectorAccumulator::merge(const ExactVectorAccumulator& other) {
  if (other.size_ != size_) {
    throw std::invalid_argument("ExactVectorAccumulator: size mismatch");
  }
  for (std::size_t i = 0; i < size_ * detail::kLimbCount; ++i) {
    limbs_[i] += other.limbs_[i];
  }
  bump(other.pending_ + 1);
}

std::vector<double> ExactVectorAccumulator::rounded() const {
  std::vector<double> out(size_);
  for (std::size_t i = 0; i < size_; ++i) {
    out[i] = detail::limb_round(limbs_.data() + i * detail::kLimbCount);
  }
  return out;
}

void ExactVectorAccumulator::reset() {
  limbs_.assign(limbs_.size(), 0);
  pending_ = 0;
}

}  // namespace vnt
