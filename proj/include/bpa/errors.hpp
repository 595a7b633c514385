#pragma once

#include <stdexcept>
#include <string>

namespace bpa {

enum class ErrorCode {
  EmptyTable,
  MixedTypesInColumn,
  DuplicateHeader,
  ParseError,
  UnknownLevel,
  UnknownVariable,
  NotDiscrete,
  NotContinuous,
  ConstantColumn,
  DegenerateCorrelation,
  SameNode,
  IsolatedTarget,
  TooFewRows,
  TooFewSamples,
  AllTied,
  RankDeficient,
  FoldTooSmall,
  SingletonPathStep,
  InvalidArgument,
};

const char* error_code_name(ErrorCode code);

/// Library-wide exception carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bpa
