#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsg {

// Base class for all library errors. The CLI maps ValidationError and
// ConfigError to exit code 2 (bad input), everything else to exit code 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor/op shape disagreement; the message names both shapes.
struct DimensionError : Error {
  using Error::Error;
};

// Input outside an operation's domain (empty sequence, empty corpus, ...).
struct DomainError : Error {
  using Error::Error;
};

// Token or element index out of range.
struct IndexError : Error {
  using Error::Error;
};

// Caller broke an API contract (mismatched list lengths, foreign synopsis).
struct ContractError : Error {
  using Error::Error;
};

// Malformed on-disk data. Carries the byte offset where parsing failed.
struct FormatError : Error {
  FormatError(const std::string& what, std::size_t byte_offset)
      : Error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
        offset(byte_offset) {}
  std::size_t offset = 0;
};

// Invalid user-supplied configuration or spec document.
struct ValidationError : Error {
  using Error::Error;
};

// Inconsistent run configuration (e.g. nothing left to train).
struct ConfigError : Error {
  using Error::Error;
};

// Training diverged or failed mid-run. Carries the offending step.
struct TrainingError : Error {
  TrainingError(const std::string& what, long long at_step)
      : Error(what + " (step " + std::to_string(at_step) + ")"), step(at_step) {}
  long long step = 0;
};

}  // namespace tsg
