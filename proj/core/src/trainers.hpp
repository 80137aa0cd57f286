#pragma once

// Per-kind training and scoring on canonical-order dense data.

#include <Eigen/Dense>
#include <cstdint>
#include <span>

#include "ncx/classifiers.hpp"

namespace ncx::detail {

NaiveBayesModel fit_naive_bayes(const Eigen::MatrixXd& x, std::span<const int> y,
                                const NaiveBayesParams& p);
double score_naive_bayes(const NaiveBayesModel& m, std::span<const double> x);

LogisticModel fit_logistic(const Eigen::MatrixXd& x, std::span<const int> y,
                           const LogisticParams& p);
double score_logistic(const LogisticModel& m, std::span<const double> x);

SvmModel fit_svm(const Eigen::MatrixXd& x, std::span<const int> y, SvmKernel kernel,
                 const SvmParams& p);
double score_svm(const SvmModel& m, std::span<const double> x);

MlpModel fit_mlp(const Eigen::MatrixXd& x, std::span<const int> y, const MlpParams& p,
                 std::uint64_t seed);

DecisionTreeModel fit_decision_tree(const Eigen::MatrixXd& x, std::span<const int> y,
                                    const TreeParams& p);
double score_decision_tree(const DecisionTreeModel& m, std::span<const double> x);

ForestModel fit_forest(const Eigen::MatrixXd& x, std::span<const int> y, const ForestParams& p,
                       std::uint64_t seed);
double score_forest(const ForestModel& m, std::span<const double> x);

}  // namespace ncx::detail
