#pragma once

#include <stdexcept>
#include <string>

namespace rppg {

// Base for every error the library raises. The CLI maps the three subclasses
// onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or configuration: the caller asked for something invalid.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed or missing input data (frames, manifests, ground truth, models).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace rppg
