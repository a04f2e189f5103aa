// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace snoopi {

/// Precondition or shape contract broken by the caller.
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation produced a non-finite value.
class OverflowError : public std::runtime_error {
 public:
  explicit OverflowError(const std::string& what) : std::runtime_error(what) {}
};

/// An object was used in the wrong lifecycle state (e.g. backward twice).
class StateError : public std::logic_error {
 public:
  explicit StateError(const std::string& what) : std::logic_error(what) {}
};

/// Invalid user configuration (bad knob value, unknown key, empty mask).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// A sampler step hit alpha_t = 0 where x0 must be extracted.
class DegenerateStepError : public std::runtime_error {
 public:
  explicit DegenerateStepError(const std::string& what) : std::runtime_error(what) {}
};

/// Training stopped early (too many skipped steps, diverged loss).
class TrainingAborted : public std::runtime_error {
 public:
  explicit TrainingAborted(const std::string& what) : std::runtime_error(what) {}
};

#define SNOOPI_REQUIRE(cond, msg)                                   \
  do {                                                              \
    if (!(cond)) throw ::snoopi::ContractViolation(std::string(msg)); \
  } while (0)

}  // namespace snoopi
