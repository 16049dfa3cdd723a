#ifndef WHEELPRED_ERROR_HPP
#define WHEELPRED_ERROR_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace wheelpred {

enum class ErrorCode {
  MalformedHeader,
  NonNumericField,
  EmptyLog,
  EmptyInput,
  InsufficientData,
  DimensionMismatch,
  NotPositiveDefinite,
  TooFewPoints,
  NonFiniteObjective,
  EmptyBatch,
  NonFiniteLoss,
  HorizonExceedsWindow,
  IndexOutOfRange,
  NoWindows,
  IncompleteInputs,
  IncompleteMatrix,
  InvalidArgument,
  Io,
  BadModelFile,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries a code; `index` holds the row,
// step or epoch the failure refers to when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::NonNumericField: return "NonNumericField";
    case ErrorCode::EmptyLog: return "EmptyLog";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::HorizonExceedsWindow: return "HorizonExceedsWindow";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NoWindows: return "NoWindows";
    case ErrorCode::IncompleteInputs: return "IncompleteInputs";
    case ErrorCode::IncompleteMatrix: return "IncompleteMatrix";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::BadModelFile: return "BadModelFile";
  }
  return "Unknown";
}

}  // namespace wheelpred

#endif  // WHEELPRED_ERROR_HPP
