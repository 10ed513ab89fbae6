#pragma once

#include <stdexcept>
#include <string>

namespace optomech {

// Stable numeric values: the C API forwards them verbatim as status codes.
enum class ErrorCode : int {
  invalid_argument = 1,
  invalid_dimension = 2,
  space_mismatch = 3,
  rwa_violation = 4,
  integration_failure = 5,
  degenerate_steady_state = 6,
  not_converged = 7,
  undefined_correlation = 8,
  quadrature_failure = 9,
  insufficient_time = 10,
  normalization_failure = 11,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace optomech
