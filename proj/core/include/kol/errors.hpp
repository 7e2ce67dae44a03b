#pragma once

#include <stdexcept>
#include <string>

namespace kol {

/// Bad shapes, out-of-range indices, invalid geometry or configuration.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An object was used in a state that does not allow the call, e.g. a tape
/// replayed against a different graph.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Non-finite values or divergence during a numerical procedure.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be read or written, or its contents are malformed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kol
