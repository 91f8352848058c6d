#pragma once

#include <stdexcept>
#include <string>

namespace maploc {

enum class ErrorCode {
  kEmptyCloud,
  kDegenerateNeighborhood,
  kNoCorrespondences,
  kNotSymmetric,
  kZeroAcceleration,
  kNonMonotonicTimestamps,
  kWindowTooShort,
  kIndexOutOfRange,
  kNotAnchored,
  kSingularSystem,
  kNoMatches,
  kDegenerateGeometry,
  kNoInliers,
  kParseError,
  kInitializationFailure,
  kInvalidSpec,
  kInvalidConfig,
  kIoError,
};

const char* to_string(ErrorCode code);

/// Exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failure with the byte offset (binary) or 1-based line (ASCII) it occurred at.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(ErrorCode::kParseError, what + " (at " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Rank-deficient system; carries the state whose block lost rank.
class SingularSystemError : public Error {
 public:
  SingularSystemError(const std::string& what, std::size_t state_index)
      : Error(ErrorCode::kSingularSystem, what + " (state " + std::to_string(state_index) + ")"),
        state_index_(state_index) {}

  std::size_t state_index() const noexcept { return state_index_; }

 private:
  std::size_t state_index_;
};

}  // namespace maploc
