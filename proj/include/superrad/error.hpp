#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace superrad {

/// Input that violates a documented precondition. Detected before compute.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to converge or left its domain of validity.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Compact number formatting for diagnostics.
inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace superrad
