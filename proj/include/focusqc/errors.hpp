#pragma once

#include <stdexcept>
#include <string>

namespace focusqc {

// Base class for all library errors so callers can catch one type.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem / decoding problems: missing files, unreadable images,
// malformed containers.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Structurally readable but semantically invalid data: bad CSV fields,
// schema violations, out-of-range parameters, broken invariants.
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

// Numerical fitting failures (non-convergence, degeneracy, conditioning).
// Carries the last residual so callers can report how close the fit got.
class FitError : public Error {
 public:
  FitError(const std::string& msg, double residual)
      : Error(msg), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_ = 0.0;
};

}  // namespace focusqc
