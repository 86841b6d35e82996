#pragma once

#include <stdexcept>
#include <string>

namespace relrank {

// Error taxonomy. The CLI maps each category onto a process exit code:
// UsageError -> 1, DataError -> 2, NumericalError -> 3.

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised for incompatible tensor shapes or dimension mismatches.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace relrank
