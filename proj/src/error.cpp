#include "topicintent/error.hpp"

namespace topicintent {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
      return "invalid_argument";
    case ErrorKind::kInvalidInput:
      return "invalid_input";
    case ErrorKind::kMissingInput:
      return "missing_input";
    case ErrorKind::kSchemaMismatch:
      return "schema_mismatch";
    case ErrorKind::kDiverged:
      return "diverged";
    case ErrorKind::kInsufficientHistory:
      return "insufficient_history";
    case ErrorKind::kOutputExists:
      return "output_exists";
  }
  return "unknown";
}

}  // namespace topicintent
