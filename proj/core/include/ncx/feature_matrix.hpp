#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ncx/nonlinear_features.hpp"

namespace ncx {

/// Subjects x named features with binary labels (1 = patient, 0 = control).
struct FeatureMatrix {
  std::vector<std::string> feature_names;
  std::vector<std::string> subject_ids;
  Eigen::MatrixXd values;
  std::vector<int> labels;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(values.cols()); }

  /// Throws InvalidArgument when shapes or labels are inconsistent.
  void check() const;

  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
  FeatureMatrix select_columns(std::span<const std::size_t> cols) const;
  /// Columns whose name starts with `prefix` (e.g. "HFD:").
  FeatureMatrix select_prefix(std::string_view prefix) const;
};

/// Feature set names used by experiment grids: "HFD", "SampEn", "HFD+SampEn".
FeatureMatrix select_feature_set(const FeatureMatrix& fm, std::string_view set);

/// Labels are matched to vectors by subject id. Vectors must share names.
FeatureMatrix to_feature_matrix(std::span<const FeatureVector> vectors,
                                std::span<const std::string> subject_ids,
                                std::span<const int> labels);

/// Header "subject_id,label,<feature names...>", 17-significant-digit reals.
void write_features_csv(const FeatureMatrix& fm, const std::filesystem::path& path);
FeatureMatrix read_features_csv(const std::filesystem::path& path);

/// Square named matrix with names in the header row and first column.
void write_named_matrix_csv(const Eigen::MatrixXd& m, std::span<const std::string> row_names,
                            std::span<const std::string> col_names,
                            const std::filesystem::path& path);

std::string format_real(double v);

}  // namespace ncx
