// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace vnt {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration, schema violation or precondition failure.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Tensor shapes or parameter layouts do not match.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A micro-batch does not fit a device's memory capacity.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Replicas that must hold identical state have diverged.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// No assignment satisfies the solver constraints.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// A profile lookup hit a batch size that was never measured.
class ProfileError : public Error {
 public:
  using Error::Error;
};

// State migration cannot proceed (e.g. no surviving source device).
class MigrationError : public Error {
 public:
  using Error::Error;
};

}  // namespace vnt
