#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace topicintent {

/// Failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  kInvalidArgument,
  kInvalidInput,
  kMissingInput,
  kSchemaMismatch,
  kDiverged,
  kInsufficientHistory,
  kOutputExists,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::kInvalidArgument, message);
}

}  // namespace topicintent
