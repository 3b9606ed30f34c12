#pragma once

#include <stdexcept>
#include <string>

namespace canonforge {

/// Base class for all engine-raised failures.
struct EngineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// cnfs() requested on a domain that is not closed under isomorphism.
struct NonStrictDomainError : EngineError {
  using EngineError::EngineError;
};

/// Slicing/iteration requested beyond a domain's capability.
struct UnsupportedSlicingError : EngineError {
  using EngineError::EngineError;
};

/// Rejection sampling exhausted its attempt budget.
struct SamplingError : EngineError {
  using EngineError::EngineError;
};

/// A user map/filter function threw; carries the failing element's rendering.
struct TransformError : EngineError {
  using EngineError::EngineError;
};

/// A parallel job failed after its retry, or a partial result went missing.
struct IncompleteExecutionError : EngineError {
  using EngineError::EngineError;
};

}  // namespace canonforge
