#pragma once

#include <stdexcept>
#include <string>

namespace empnoise {

enum class ErrorKind {
  InvalidInput,
  TooFewSamples,
  DegenerateQuantiles,
  NumericalFailure,
  Parse,
  Io,
  DimensionMismatch,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` distinguishes the cause.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace empnoise
