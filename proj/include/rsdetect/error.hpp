#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rsdetect {

enum class ErrorCode {
  InvalidInput,
  SingularMatrix,
  NotPositiveSemidefinite,
  UndefinedStatistic,
  Config,
  StaleThreshold,
  InvalidComparison,
  OracleFailure,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid input";
    case ErrorCode::SingularMatrix: return "singular matrix";
    case ErrorCode::NotPositiveSemidefinite: return "matrix not positive semidefinite";
    case ErrorCode::UndefinedStatistic: return "undefined statistic";
    case ErrorCode::Config: return "configuration error";
    case ErrorCode::StaleThreshold: return "stale threshold";
    case ErrorCode::InvalidComparison: return "invalid comparison";
    case ErrorCode::OracleFailure: return "oracle failure";
  }
  return "unknown error";
}

/// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rsdetect
