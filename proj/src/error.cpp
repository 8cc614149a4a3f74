#include "recon/error.hpp"

namespace recon {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::DuplicateNode: return "DuplicateNode";
    case ErrorCode::EmptyBottomLevel: return "EmptyBottomLevel";
    case ErrorCode::OrderingViolated: return "OrderingViolated";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::NonSymmetric: return "NonSymmetric";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NotDiagonal: return "NotDiagonal";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::RankDeficientReducedGram: return "RankDeficientReducedGram";
    case ErrorCode::DualFormMismatch: return "DualFormMismatch";
    case ErrorCode::EmptyPanel: return "EmptyPanel";
    case ErrorCode::AllZeroForecasts: return "AllZeroForecasts";
    case ErrorCode::MisalignedRows: return "MisalignedRows";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::HistoryTooShort: return "HistoryTooShort";
    case ErrorCode::ModulusOutOfRange: return "ModulusOutOfRange";
    case ErrorCode::RhoOutOfRange: return "RhoOutOfRange";
    case ErrorCode::UnstableCoefficient: return "UnstableCoefficient";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::IncoherentOutput: return "IncoherentOutput";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace recon
