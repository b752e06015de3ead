#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wmdlab {

enum class ErrorCode {
  InvalidInput,
  UnbalancedProblem,
  TooLarge,
  NotNormalized,
  EmptyCorpus,
  InconsistentStats,
  ZeroVector,
  DimMismatch,
  ParseError,
  MissingWord,
  RankDeficient,
  EmptySupport,
  NotEnoughNeighbors,
  EmptyValidation,
  DivisionByZero,
  MissingFoldFile,
  TooSmall,
  NoFiniteNeighbor,
  DegenerateInput,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (tests, the CLI) can branch on the kind without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace wmdlab
