#pragma once

#include <stdexcept>
#include <string>

namespace trimglm {

// Coarse error classes; the C API and the CLI exit codes map onto these.
enum class ErrorCode {
  InvalidArgument,  // bad parameters, domain violations, dimension mismatch, schema problems
  Numeric,          // ill-conditioned covariance, non-convergence, overflow
  Io,               // file open/read/write failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail_invalid(const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); }
[[noreturn]] inline void fail_numeric(const std::string& msg) { throw Error(ErrorCode::Numeric, msg); }
[[noreturn]] inline void fail_io(const std::string& msg) { throw Error(ErrorCode::Io, msg); }

}  // namespace trimglm
