#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sensorplace {

enum class ErrorCode {
  InvalidInput,
  InvalidRank,
  InvalidCount,
  InfeasibleConstraint,
  NotPositiveDefinite,
  RankDeficientBasis,
  DegeneratePrior,
  InvalidPoint,
  ParseError,
  UnknownVariable,
  InvalidMeasurement,
  NotFitted,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::InvalidRank: return "InvalidRank";
    case ErrorCode::InvalidCount: return "InvalidCount";
    case ErrorCode::InfeasibleConstraint: return "InfeasibleConstraint";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::RankDeficientBasis: return "RankDeficientBasis";
    case ErrorCode::DegeneratePrior: return "DegeneratePrior";
    case ErrorCode::InvalidPoint: return "InvalidPoint";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::InvalidMeasurement: return "InvalidMeasurement";
    case ErrorCode::NotFitted: return "NotFitted";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library. The code is the
/// machine-readable part; what() carries a human-readable diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Raised when greedy pivoting runs out of admissible candidates. Carries the
/// pivots chosen before the failure so callers can report how far it got.
class InfeasibleConstraintError : public Error {
 public:
  InfeasibleConstraintError(const std::string& message, std::vector<std::size_t> partial)
      : Error(ErrorCode::InfeasibleConstraint, message), partial_(std::move(partial)) {}

  const std::vector<std::size_t>& partial_pivots() const noexcept { return partial_; }

 private:
  std::vector<std::size_t> partial_;
};

/// Syntax error in a constraint expression.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset, std::vector<std::string> expected)
      : Error(ErrorCode::ParseError, message + " at offset " + std::to_string(offset)),
        offset_(offset),
        expected_(std::move(expected)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

}  // namespace sensorplace
