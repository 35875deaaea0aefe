#pragma once

#include <stdexcept>
#include <string>

namespace slsmpc {

// Malformed input: unparsable files, shape mismatches, violated preconditions
// on user-supplied data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values during optimization.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument values passed by the caller (out-of-range parameters).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace slsmpc
