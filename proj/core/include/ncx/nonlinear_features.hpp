#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ncx/signal_io.hpp"

namespace ncx {

struct HfdParams {
  int k_max = 8;
};

enum class SdConvention { Population, Sample };

struct SampEnParams {
  int m = 2;
  double r_factor = 0.15;
  SdConvention sd = SdConvention::Population;
};

/// Normalized curve length L_m(k) of Higuchi's method. `m_start` is 1-based,
/// 1 <= m_start <= k < N.
double curve_length(std::span<const double> x, int k, int m_start);

struct HfdResult {
  double value = 0.0;
  /// Set when the estimate falls outside [1, 2]; the value is never clamped.
  bool out_of_range = false;
  /// ln L(k) for k = 1..k_max.
  std::vector<double> log_lengths;
};

HfdResult higuchi_fd_detail(std::span<const double> x, const HfdParams& p = {});
double higuchi_fd(std::span<const double> x, const HfdParams& p = {});

/// Ordered-pair match counts for sample entropy: b for length-m templates,
/// a for length-(m+1), both over template starts 1..N-m, self-matches excluded.
struct SampEnCounts {
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  double r = 0.0;
};

double series_sd(std::span<const double> x, SdConvention sd);

SampEnCounts sample_entropy_counts(std::span<const double> x, const SampEnParams& p = {});

/// -ln(A/B). Throws NoTemplateMatchesError when A or B is zero.
double sample_entropy(std::span<const double> x, const SampEnParams& p = {});

enum class EpochMerge { Mean, Median, PerEpoch };

std::optional<EpochMerge> parse_epoch_merge(std::string_view name);
std::string_view to_string(EpochMerge merge);

struct FeatureVector {
  std::string subject_id;
  /// Source epoch index for per-epoch output; -1 for merged vectors.
  int epoch = -1;
  std::vector<std::string> names;
  std::vector<double> values;
};

/// "HFD:<ch>" for every channel, then "SampEn:<ch>", in the given channel order.
std::vector<std::string> feature_names(std::span<const std::string> channels);

/// Computes both measures on every (subject, channel, epoch) and merges
/// epochs per subject. Channel order follows the 19-electrode montage when
/// the recording uses it, otherwise the recording order. Results do not
/// depend on `threads`.
std::vector<FeatureVector> extract_features(const EpochSet& es, const HfdParams& hfd,
                                            const SampEnParams& se,
                                            EpochMerge merge = EpochMerge::Mean,
                                            unsigned threads = 1);

}  // namespace ncx
