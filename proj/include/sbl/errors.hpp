#pragma once

#include <stdexcept>
#include <string>

namespace sbl {

enum class ErrorCode {
  input,                     // malformed or inconsistent arguments
  config,                    // out-of-range configuration values
  numeric,                   // factorization or solve failure
  insufficient_information,  // a rule needs data that was not supplied
  refused,                   // propriety gate refused to run a sampler
  unsupported,               // outside the supported feature set
  io,
  parse,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Factorization failure. Carries a condition-number estimate of the
/// offending matrix (infinity when the estimate itself is unavailable).
class NumericError : public Error {
 public:
  NumericError(const std::string& what, double condition)
      : Error(ErrorCode::numeric, what), condition_(condition) {}
  double condition_estimate() const noexcept { return condition_; }

 private:
  double condition_;
};

[[noreturn]] inline void throw_input(const std::string& msg) { throw Error(ErrorCode::input, msg); }
[[noreturn]] inline void throw_config(const std::string& msg) { throw Error(ErrorCode::config, msg); }

}  // namespace sbl
