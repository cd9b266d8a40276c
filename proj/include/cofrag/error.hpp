// Copyright 2026 The cofrag Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace cofrag {

enum class ErrorKind {
  kInvalidMass,
  kIndex,
  kParameter,
  kConfiguration,
  kCannotSample,
  kTruncation,
  kNumeric,
  kInput,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidMass: return "invalid-mass";
    case ErrorKind::kIndex: return "index";
    case ErrorKind::kParameter: return "parameter";
    case ErrorKind::kConfiguration: return "configuration";
    case ErrorKind::kCannotSample: return "cannot-sample";
    case ErrorKind::kTruncation: return "truncation";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kInput: return "input";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` tells callers (and the CLI
/// exit-code mapping) which contract was broken.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

namespace detail {

inline void require(bool ok, ErrorKind kind, const std::string& message) {
  if (!ok) throw Error(kind, message);
}

inline void require_lambda(double lambda) {
  require(lambda > 0.0 && lambda <= 1.0, ErrorKind::kParameter,
          "lambda must lie in (0, 1], got " + std::to_string(lambda));
}

}  // namespace detail
}  // namespace cofrag
