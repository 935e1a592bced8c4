#pragma once

#include <stdexcept>

namespace geovmf {

// Invalid argument / precondition violation. Maps to usage errors at the API
// boundary.
struct ArgError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent input data: corpus lines, prediction files,
// checkpoints.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem or network trouble.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure: non-finite results where finite ones are required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace geovmf
