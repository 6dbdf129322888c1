#pragma once

#include <stdexcept>
#include <string>

namespace laecf {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad flags, config fields, or parameter values. CLI exit code 1.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed or inconsistent input data. CLI exit code 2.
struct DataError : Error {
  using Error::Error;
};

// Numerical failures and solve refusals (memory cap). CLI exit code 3.
struct SolverError : Error {
  using Error::Error;
};

}  // namespace laecf
