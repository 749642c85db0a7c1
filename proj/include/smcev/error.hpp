#pragma once

#include <stdexcept>
#include <string>

namespace smcev {

enum class ErrorCode {
  invalid_argument,
  degenerate_weights,
  transform_domain,
  config,
  io,
  micro_step_cap,
};

// Every failure raised by the library carries a code so the C API can map it
// onto a stable status value without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorCode::invalid_argument, what);
}

}  // namespace smcev
