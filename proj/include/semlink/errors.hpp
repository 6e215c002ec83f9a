#pragma once

#include <stdexcept>
#include <string>

namespace semlink {

// Shape mismatch between tensors (names both shapes in the message).
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// A caller violated an operation precondition.
struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration value or unknown config key.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input that makes an operation mathematically undefined (e.g. normalizing
// a zero vector).
struct DegenerateInputError : std::runtime_error {
  explicit DegenerateInputError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// |h| below the equalization threshold; callers resample and count.
struct DeepFadeError : std::runtime_error {
  explicit DeepFadeError(const std::string& msg) : std::runtime_error(msg) {}
};

// File / stream failure.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training produced a non-finite loss; message names the first bad op.
struct TrainingDiverged : std::runtime_error {
  explicit TrainingDiverged(const std::string& msg)
      : std::runtime_error(msg) {}
};

}  // namespace semlink
