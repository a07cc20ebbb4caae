#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ultraheat {

enum class ErrorCode {
  NonDecreasingRadii,
  NonPositiveMass,
  EmptySpace,
  NotUltrametric,
  InvalidMatrix,
  UnknownPoint,
  NegativeProfile,
  Asymmetric,
  NegativeWeight,
  NonzeroDiagonal,
  DimensionMismatch,
  OverlappingBalls,
  EmptyDomain,
  NotIsotropic,
  StepTooCoarse,
  GridRefinementFailed,
  NegativeInput,
  InvalidArgument,
  IntegratorFailure,
  ConditionFailure,
  UnknownGenerator,
  ParseError,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code and, where the failure has one,
/// the offending point indices (e.g. the triple that breaks the strong
/// triangle inequality).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::vector<std::size_t> witness = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        witness_(std::move(witness)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::vector<std::size_t>& witness() const noexcept { return witness_; }

 private:
  ErrorCode code_;
  std::vector<std::size_t> witness_;
};

}  // namespace ultraheat
