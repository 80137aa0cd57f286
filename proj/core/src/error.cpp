#include "ncx/error.hpp"

namespace ncx {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::NonFiniteSample: return "NonFiniteSample";
    case ErrorCode::UnknownChannelLabel: return "UnknownChannelLabel";
    case ErrorCode::OffsetOutOfRange: return "OffsetOutOfRange";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::DegenerateScale: return "DegenerateScale";
    case ErrorCode::ConstantSeries: return "ConstantSeries";
    case ErrorCode::NoTemplateMatches: return "NoTemplateMatches";
    case ErrorCode::ZeroVarianceFeature: return "ZeroVarianceFeature";
    case ErrorCode::FeatureNameMismatch: return "FeatureNameMismatch";
    case ErrorCode::SingleClassInput: return "SingleClassInput";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ParameterOutOfRange: return "ParameterOutOfRange";
    case ErrorCode::EmbeddingFailure: return "EmbeddingFailure";
    case ErrorCode::CalibrationFailure: return "CalibrationFailure";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

NoTemplateMatchesError::NoTemplateMatchesError(std::uint64_t a, std::uint64_t b)
    : Error(ErrorCode::NoTemplateMatches,
            "sample entropy undefined (A=" + std::to_string(a) + ", B=" + std::to_string(b) + ")"),
      a_(a),
      b_(b) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace ncx
