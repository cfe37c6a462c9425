#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace travmap {

/// Failure categories. Each maps onto a distinct CLI exit code.
enum class ErrorCode {
  invalid_argument = 2,
  io = 3,
  bad_magic = 4,
  truncated = 5,
  non_finite = 6,
  version = 7,
  shape = 8,
  dimension = 9,
  out_of_range = 10,
  empty_input = 11,
  numeric = 12,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::io: return "io";
    case ErrorCode::bad_magic: return "bad_magic";
    case ErrorCode::truncated: return "truncated";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::version: return "version";
    case ErrorCode::shape: return "shape";
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::out_of_range: return "out_of_range";
    case ErrorCode::empty_input: return "empty_input";
    case ErrorCode::numeric: return "numeric";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace travmap
