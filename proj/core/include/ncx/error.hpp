#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ncx {

enum class ErrorCode {
  InvalidArgument,
  MalformedFile,
  NonFiniteSample,
  UnknownChannelLabel,
  OffsetOutOfRange,
  CountMismatch,
  DegenerateScale,
  ConstantSeries,
  NoTemplateMatches,
  ZeroVarianceFeature,
  FeatureNameMismatch,
  SingleClassInput,
  NonConvergence,
  KTooLarge,
  IoFailure,
  ParameterOutOfRange,
  EmbeddingFailure,
  CalibrationFailure,
  ConfigInvalid,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The message is
/// prefixed with the error code name so CLI output stays greppable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Raised by sample entropy when either match count is zero. Carries both
/// counts so callers can substitute their own convention.
class NoTemplateMatchesError : public Error {
 public:
  NoTemplateMatchesError(std::uint64_t a, std::uint64_t b);

  std::uint64_t a() const noexcept { return a_; }
  std::uint64_t b() const noexcept { return b_; }

 private:
  std::uint64_t a_;
  std::uint64_t b_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace ncx
