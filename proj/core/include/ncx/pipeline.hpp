#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ncx/classifiers.hpp"
#include "ncx/evaluation.hpp"
#include "ncx/feature_matrix.hpp"
#include "ncx/nonlinear_features.hpp"
#include "ncx/signal_io.hpp"
#include "ncx/synth.hpp"

namespace ncx {

inline constexpr std::string_view kVersion = "0.1.0";

enum class DataSource { Synth, Directory };

/// Flat `section.key = value` configuration. Unknown keys and malformed values
/// raise ConfigInvalid with the dotted key in the message.
struct PipelineConfig {
  std::uint64_t seed = 1;

  DataSource source = DataSource::Synth;
  std::filesystem::path data_directory;
  FileFormat data_format = FileFormat::Csv;
  bool validate_montage = false;
  SurrogateConfig synth;

  double epoch_seconds = 5.0;
  std::size_t epoch_count = 3;
  std::vector<std::size_t> epoch_offsets;  // empty: evenly spaced

  HfdParams hfd;
  SampEnParams sampen;
  EpochMerge merge = EpochMerge::Mean;

  std::vector<ClassifierKind> classifiers{std::begin(kAllClassifiers), std::end(kAllClassifiers)};
  std::vector<std::string> feature_sets{"HFD", "SampEn", "HFD+SampEn"};
  /// Principal-component counts for the PCA grid over all features; empty skips it.
  std::vector<std::size_t> pc_counts;
  PcaScope pca_scope = PcaScope::PerFold;

  std::size_t folds = 10;

  std::filesystem::path output_directory = "ncx-out";
  unsigned threads = 1;

  static PipelineConfig parse(std::string_view text);
  static PipelineConfig load(const std::filesystem::path& path);

  /// Throws ConfigInvalid naming the first offending key.
  void validate() const;

  /// Sorted `key = value` lines of every setting that affects results
  /// (output directory and thread count excluded).
  std::string canonical() const;
  /// FNV-1a 64 of canonical(), as 16 hex digits.
  std::string digest() const;

  std::uint64_t synth_seed() const;
  std::uint64_t fold_seed() const;
  std::uint64_t classifier_seed() const;
};

/// Recordings with labels, in cohort order.
struct Dataset {
  std::vector<Recording> recordings;
  std::vector<int> labels;
};

/// Labels file "subject_id,label" fixes both labels and row order.
void write_labels_csv(const Dataset& data, const std::filesystem::path& path);

/// Reads <dir>/labels.csv and each listed subject's recording file.
Dataset load_dataset(const std::filesystem::path& dir, FileFormat format, bool validate_montage);

struct SynthOutput {
  Dataset data;
  SurrogateCohort cohort;
};

SynthOutput synth_stage(const PipelineConfig& cfg);
/// Writes recordings, labels.csv and cohort_manifest.json into `dir`.
void write_dataset(const SynthOutput& out, const PipelineConfig& cfg, const std::filesystem::path& dir);

FeatureMatrix extract_stage(const PipelineConfig& cfg, const Dataset& data);

struct GridResults {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::vector<std::pair<std::string, std::string>> protocol;
  std::vector<GridCell> feature_grid;
  std::vector<GridCell> pca_grid;
  std::vector<ExplainedVariancePoint> explained_variance;
  std::vector<std::string> warnings;
};

GridResults evaluate_stage(const PipelineConfig& cfg, const FeatureMatrix& fm);

/// Serialized grid results (cells, per-row predictions) and back.
std::string results_json(const GridResults& results);
GridResults read_results_json(const std::filesystem::path& path);

std::string run_id(const PipelineConfig& cfg);

/// report.* for the feature-set grid and report_pca.* for the PC grid.
/// Throws InvalidArgument when there is nothing to report.
void report_stage(const GridResults& results, const std::filesystem::path& dir);

/// synth/load -> epoch -> extract -> CV grids -> reports, plus
/// features.csv, results.json and run_manifest.json in output_directory.
void run_pipeline(const PipelineConfig& cfg);

}  // namespace ncx
