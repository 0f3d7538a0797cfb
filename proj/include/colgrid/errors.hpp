#pragma once

#include <stdexcept>
#include <string>

namespace colgrid {

/// Raised by scene/scenario loaders on bad input data.
class DataError : public std::runtime_error {
 public:
  enum class Kind {
    MissingFile,
    BadHeader,
    MalformedRow,
    DuplicateAgentInFrame,
    NonMonotonicFrames,
    GappedAgent,
    InvalidConfig,
    EmptyDataset,
    NonUniformWindows,
    WindowNotFound,
    CheckpointShapeMismatch,
  };

  DataError(Kind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Raised when tensor dimensions do not line up.
class ShapeMismatch : public std::runtime_error {
 public:
  explicit ShapeMismatch(std::string message) : std::runtime_error(std::move(message)) {}
};

/// Raised when a numeric guard trips (overflow, non-finite values).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(std::string message) : std::runtime_error(std::move(message)) {}
};

}  // namespace colgrid
