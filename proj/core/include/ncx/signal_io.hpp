#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ncx {

/// 10-20 monopolar montage, in the fixed order used for feature naming.
inline constexpr std::array<std::string_view, 19> kMontage = {
    "Fp1", "Fp2", "F3", "F4", "C3", "C4", "P3", "P4", "O1", "O2",
    "F7",  "F8",  "T3", "T4", "T5", "T6", "Fz", "Cz", "Pz"};

/// One subject's multi-channel recording. data[c] holds the samples of
/// channels[c]; all rows share one length.
struct Recording {
  std::string subject_id;
  double fs = 0.0;
  std::vector<std::string> channels;
  std::vector<std::vector<double>> data;

  std::size_t samples() const noexcept { return data.empty() ? 0 : data.front().size(); }
};

/// Throws MalformedFile on ragged/empty rows or duplicate labels, NonFiniteSample on
/// NaN/Inf, and UnknownChannelLabel when `montage` is set and labels differ from
/// the 19-electrode set.
void validate(const Recording& rec, bool montage);

enum class FileFormat { Csv, RawBinary };

std::optional<FileFormat> parse_file_format(std::string_view name);

struct LoadOptions {
  bool validate_montage = false;
  /// Required for CSV files without a "# fs=" comment; ignored otherwise.
  std::optional<double> fs;
  /// Defaults to the file stem.
  std::optional<std::string> subject_id;
};

Recording load_recording(const std::filesystem::path& path, FileFormat format,
                         const LoadOptions& opts = {});

/// CSV output uses 17 significant digits so values round-trip exactly.
void write_recording(const Recording& rec, const std::filesystem::path& path,
                     FileFormat format);

struct Epoch {
  std::string subject_id;
  std::string channel;
  std::vector<double> samples;
  double fs = 0.0;
};

/// Epochs of a single subject: epochs[c][e] is epoch e of channels[c].
struct SubjectEpochs {
  std::string subject_id;
  std::vector<std::string> channels;
  std::vector<std::vector<std::vector<double>>> epochs;
};

struct EpochSet {
  double fs = 0.0;
  std::size_t epoch_length = 0;
  std::size_t epochs_per_subject = 0;
  std::vector<SubjectEpochs> subjects;
  /// Non-fatal diagnostics (overlapping offsets).
  std::vector<std::string> warnings;

  std::size_t channel_epoch_count() const noexcept;
  Epoch epoch(std::size_t subject, std::size_t channel, std::size_t index) const;
};

std::size_t epoch_length(double epoch_seconds, double fs);

/// `count` offsets spread evenly over the recording, first at 0 and the last
/// epoch ending at or before the final sample.
std::vector<std::size_t> even_offsets(std::size_t samples, std::size_t length,
                                      std::size_t count);

/// Copies `count` epochs of round(epoch_seconds*fs) samples from every channel.
/// Only the first `count` offsets are used; extras are ignored.
SubjectEpochs extract_epochs(const Recording& rec, double epoch_seconds, std::size_t count,
                             std::span<const std::size_t> offsets,
                             std::vector<std::string>* warnings = nullptr);

/// Builds an EpochSet over several recordings, checking that sampling rate
/// and channel layout agree.
EpochSet extract_epoch_set(std::span<const Recording> recordings, double epoch_seconds,
                           std::size_t count, std::span<const std::size_t> offsets);

}  // namespace ncx
