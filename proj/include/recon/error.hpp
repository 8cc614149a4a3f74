#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace recon {

/// Failure categories raised by the library. Each maps to a stable name
/// (see error_code_name) so callers and reports can match on it.
enum class ErrorCode {
  // hierarchy
  CycleDetected,
  DuplicateNode,
  EmptyBottomLevel,
  OrderingViolated,
  ParseError,
  // shared
  DimensionMismatch,
  NonFiniteInput,
  EmptyInput,
  // covariance
  TooFewRows,
  DegenerateVariance,
  NonSymmetric,
  NotPositiveDefinite,
  NotDiagonal,
  // reconcile
  SingularGram,
  RankDeficientReducedGram,
  DualFormMismatch,
  EmptyPanel,
  AllZeroForecasts,
  MisalignedRows,
  // basemodels
  SeriesTooShort,
  HistoryTooShort,
  // simulate
  ModulusOutOfRange,
  RhoOutOfRange,
  UnstableCoefficient,
  // evaluate
  ZeroReference,
  // cli / io
  ConfigError,
  MissingInput,
  IncoherentOutput,
  IoError,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace recon
