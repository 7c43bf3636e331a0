#pragma once

#include <stdexcept>
#include <string>

namespace tusla {

/// Caller violated a precondition (dimension mismatch, bad parameter, unknown name).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An intermediate or result left the finite floating-point range.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// A numerical setup could not be completed (e.g. non-integrable density).
class SetupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File-system failure while writing or reading experiment output.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tusla
