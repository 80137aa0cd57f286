#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "ncx/feature_matrix.hpp"

namespace ncx {

struct Normalized {
  FeatureMatrix matrix;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

/// Column-wise z-scores using the sample SD (n-1). Throws ZeroVarianceFeature.
Normalized zscore_normalize(const FeatureMatrix& fm);

/// Applies stored statistics to another matrix with the same columns.
FeatureMatrix apply_zscore(const FeatureMatrix& fm, const Eigen::VectorXd& mean,
                           const Eigen::VectorXd& sd);
FeatureMatrix denormalize(const FeatureMatrix& z, const Eigen::VectorXd& mean,
                          const Eigen::VectorXd& sd);

struct CorrelationMatrix {
  std::vector<std::string> names;
  Eigen::MatrixXd r;
  /// Two-sided p-values of H0: rho = 0 via the t transform with n-2 dof.
  Eigen::MatrixXd p_value;
};

CorrelationMatrix pearson_correlation(const FeatureMatrix& fm);

/// Two-sided tail probability of a Student t statistic.
double student_t_two_sided_p(double t, double dof);

enum class EigenMethod {
  /// Dense self-adjoint solver.
  Direct,
  /// Power iteration with Hotelling deflation.
  PowerIteration,
};

struct SymmetricEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns match values
};

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& a, EigenMethod method);

/// Power iteration with deflation. Converges each pair until
/// ||A v - lambda v|| <= tol * max(1, |lambda_1|).
SymmetricEigen power_iteration_eigen(const Eigen::MatrixXd& a, double tol = 1e-14,
                                     long max_iterations = 2'000'000);

/// Flips each column so its largest-magnitude entry is positive.
void canonicalize_signs(Eigen::MatrixXd& vectors);

struct PcaModel {
  std::vector<std::string> feature_names;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  Eigen::MatrixXd loads;        // features x components, orthonormal columns
  Eigen::VectorXd eigenvalues;  // descending, non-negative

  std::size_t components() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
};

PcaModel fit_pca(const FeatureMatrix& fm, EigenMethod method = EigenMethod::Direct);

/// Percent of total variance captured by the first m components.
double explained_variance(const PcaModel& model, std::size_t m);

/// Z-scores with the model statistics and projects on the first m loads.
/// Output columns are named PC1..PCm.
FeatureMatrix project(const PcaModel& model, const FeatureMatrix& fm, std::size_t m);

/// Maps PC scores back to z-scored feature space.
Eigen::MatrixXd inverse_project(const PcaModel& model, const Eigen::MatrixXd& scores);

struct GroupStats {
  std::string feature;
  // Index 0 = control (label 0), 1 = patient (label 1).
  std::size_t n[2] = {0, 0};
  double mean[2] = {0, 0};
  double sd[2] = {0, 0};
  double min[2] = {0, 0};
  double max[2] = {0, 0};
  /// Welch t of patient minus control, with two-sided p-value.
  double welch_t = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

std::vector<GroupStats> group_summary(const FeatureMatrix& fm);

}  // namespace ncx
