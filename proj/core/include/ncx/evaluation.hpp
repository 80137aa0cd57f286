#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ncx/classifiers.hpp"
#include "ncx/feature_matrix.hpp"

namespace ncx {

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignments;  // fold index per row
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  std::vector<std::size_t> test_rows(std::size_t fold) const;
  std::vector<std::size_t> train_rows(std::size_t fold) const;
};

/// Shuffles each class by `seed` and deals rows round-robin, continuing the
/// deal across classes so fold sizes differ by at most one. Throws KTooLarge.
FoldPlan stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed);

enum class PcaScope { None, PerFold, Global };

struct PcaMode {
  PcaScope scope = PcaScope::None;
  std::size_t components = 0;
};

std::optional<PcaScope> parse_pca_scope(std::string_view name);
std::string_view to_string(PcaScope scope);

struct Prediction {
  int truth = 0;
  int predicted = 0;
  double score = 0.0;
  std::size_t fold = 0;
};

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct EvalResult {
  std::vector<Prediction> rows;
  Confusion confusion;
  double accuracy_pct = 0.0;
  double auc = 0.0;
};

/// Pooled confusion counts, accuracy and AUC over `rows`.
EvalResult summarize(std::vector<Prediction> rows);

/// Mann-Whitney AUC with midranks for ties. Throws SingleClassInput.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// A fitted model as seen by cross-validation.
struct Scorer {
  std::function<double(std::span<const double>)> score;
  double threshold = 0.5;
};
using FoldTrainer = std::function<Scorer(const FeatureMatrix&)>;

FoldTrainer make_fold_trainer(const TrainerSpec& spec);

/// Out-of-fold predictions for every row. Features are z-scored on each
/// training partition; PCA is fitted per fold or once on all rows according to
/// `pca`. Folds may run on `threads` workers without changing results.
EvalResult cross_validate(const FoldTrainer& trainer, const FeatureMatrix& fm,
                          const FoldPlan& plan, PcaMode pca = {}, unsigned threads = 1);
EvalResult cross_validate(const TrainerSpec& spec, const FeatureMatrix& fm,
                          const FoldPlan& plan, PcaMode pca = {}, unsigned threads = 1);

// ---- reports ---------------------------------------------------------------

struct GridCell {
  std::string classifier;
  /// Feature set ("HFD", "SampEn", "HFD+SampEn") or PC count ("PC=3").
  std::string features;
  EvalResult result;
};

struct ExplainedVariancePoint {
  std::size_t m = 0;
  double pct = 0.0;
};

struct MarginEntry {
  std::string name;
  double accuracy_pct = 0.0;
};

struct Margins {
  std::vector<MarginEntry> per_classifier;
  std::vector<MarginEntry> per_feature_set;
};

/// Row/column means of cell accuracies, in first-appearance order.
Margins compute_margins(std::span<const GridCell> cells);

struct Report {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::vector<GridCell> grid;
  std::vector<ExplainedVariancePoint> explained_variance;
  /// Free-form protocol notes (fold scheme, metric pooling, PCA scope).
  std::vector<std::pair<std::string, std::string>> protocol;
};

std::string report_json(const Report& report);

/// Writes <stem>.json, <stem>_grid.csv and, when present,
/// <stem>_explained_variance.csv into `dir`. Throws InvalidArgument on an
/// empty grid and IoFailure on write errors.
void emit_report(const Report& report, const std::filesystem::path& dir,
                 std::string_view stem = "report");

}  // namespace ncx
