#pragma once

#include <stdexcept>
#include <string>

namespace lrthcr {

enum class ErrorCode {
  InvalidArgument,
  InvalidDimension,
  InvalidGenerator,
  InvalidInput,
  InvalidProbability,
  InvalidRank,
  InsufficientSnapshots,
  InfeasibleConstraint,
  NonConvergence,
  RetrievalFailure,
  ConfigError,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace lrthcr
