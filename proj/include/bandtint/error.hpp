#pragma once

#include <stdexcept>
#include <string>

namespace bandtint {

enum class ErrorCode {
  kInvalidArgument = 1,
  kShape,
  kIo,
  kFormat,
  kNumeric,
  kState,
};

/// Base of every exception thrown by the library. The code maps 1:1 onto
/// the bt_status values of the C API.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline Error invalid_argument(const std::string& what) {
  return Error(ErrorCode::kInvalidArgument, what);
}
inline Error shape_error(const std::string& what) {
  return Error(ErrorCode::kShape, what);
}
inline Error io_error(const std::string& what) {
  return Error(ErrorCode::kIo, what);
}
inline Error format_error(const std::string& what) {
  return Error(ErrorCode::kFormat, what);
}
inline Error numeric_error(const std::string& what) {
  return Error(ErrorCode::kNumeric, what);
}
inline Error state_error(const std::string& what) {
  return Error(ErrorCode::kState, what);
}

}  // namespace bandtint
