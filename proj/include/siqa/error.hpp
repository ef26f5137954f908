#pragma once

#include <stdexcept>
#include <string>

namespace siqa {

/// Base error for every failure raised by the pipeline. Messages are meant to
/// be shown to the user as-is, so they name the offending file, line or id.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace siqa
