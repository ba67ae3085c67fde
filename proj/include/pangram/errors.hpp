#pragma once

#include <stdexcept>
#include <string>

namespace pangram {

// Malformed or inconsistent input data (bad CSV rows, missing files,
// mismatched dimensions). The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss or another numerical breakdown during training.
// The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pangram
