#include "ncx/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ncx/error.hpp"
#include "trainers.hpp"

namespace ncx {

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::NaiveBayes: return "naive_bayes";
    case ClassifierKind::Logistic: return "logistic";
    case ClassifierKind::SvmLinear: return "svm_linear";
    case ClassifierKind::SvmPoly2: return "svm_poly2";
    case ClassifierKind::Mlp: return "mlp";
    case ClassifierKind::DecisionTree: return "decision_tree";
    case ClassifierKind::RandomForest: return "random_forest";
  }
  return "unknown";
}

std::optional<ClassifierKind> parse_classifier_kind(std::string_view name) {
  for (auto kind : kAllClassifiers) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

TrainerSpec default_spec(ClassifierKind kind, std::uint64_t seed) {
  TrainerSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  return spec;
}

int mlp_hidden_units(std::size_t k) { return static_cast<int>((k + 2) / 2); }

int forest_split_features(std::size_t k) {
  if (k == 0) return 1;
  int bits = 0;
  while ((std::size_t{1} << (bits + 1)) <= k) ++bits;
  return bits + 1;
}

double kernel_value(SvmKernel kernel, std::span<const double> u, std::span<const double> v) {
  double dot = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
  return kernel == SvmKernel::Poly2 ? dot * dot : dot;
}

ClassifierModel::ClassifierModel(TrainerSpec spec, std::vector<std::string> feature_names,
                                 ModelParams params)
    : spec_(spec), feature_names_(std::move(feature_names)), params_(std::move(params)) {
  canonical_.resize(feature_names_.size());
  std::iota(canonical_.begin(), canonical_.end(), std::size_t{0});
  std::stable_sort(canonical_.begin(), canonical_.end(), [&](std::size_t a, std::size_t b) {
    return feature_names_[a] < feature_names_[b];
  });
}

double ClassifierModel::threshold() const noexcept {
  return (spec_.kind == ClassifierKind::SvmLinear || spec_.kind == ClassifierKind::SvmPoly2) ? 0.0
                                                                                              : 0.5;
}

std::vector<double> ClassifierModel::canonical(std::span<const double> x) const {
  if (x.size() != feature_names_.size()) {
    fail(ErrorCode::FeatureNameMismatch, "expected " + std::to_string(feature_names_.size()) +
                                             " features, got " + std::to_string(x.size()));
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < canonical_.size(); ++i) out[i] = x[canonical_[i]];
  return out;
}

double ClassifierModel::score(std::span<const double> x) const {
  const auto c = canonical(x);
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, NaiveBayesModel>) return detail::score_naive_bayes(m, c);
        if constexpr (std::is_same_v<M, LogisticModel>) return detail::score_logistic(m, c);
        if constexpr (std::is_same_v<M, SvmModel>) return detail::score_svm(m, c);
        if constexpr (std::is_same_v<M, MlpModel>) return mlp_forward(m.network, c);
        if constexpr (std::is_same_v<M, DecisionTreeModel>) return detail::score_decision_tree(m, c);
        if constexpr (std::is_same_v<M, ForestModel>) return detail::score_forest(m, c);
      },
      params_);
}

double ClassifierModel::score(std::span<const std::string> names, std::span<const double> x) const {
  if (!std::equal(names.begin(), names.end(), feature_names_.begin(), feature_names_.end())) {
    fail(ErrorCode::FeatureNameMismatch, "feature names differ from the trained model");
  }
  return score(x);
}

int ClassifierModel::label(std::span<const double> x) const {
  return score(x) > threshold() ? 1 : 0;
}

ClassifierModel train(const TrainerSpec& spec, const FeatureMatrix& fm) {
  fm.check();
  if (fm.rows() == 0 || fm.cols() == 0) fail(ErrorCode::InvalidArgument, "empty training matrix");
  const auto positives = std::count(fm.labels.begin(), fm.labels.end(), 1);
  if (positives == 0 || positives == static_cast<long>(fm.rows())) {
    fail(ErrorCode::SingleClassInput, std::string(to_string(spec.kind)) + " needs both classes");
  }
  for (Eigen::Index i = 0; i < fm.values.size(); ++i) {
    if (!std::isfinite(fm.values.data()[i])) {
      fail(ErrorCode::NonFiniteSample, "training matrix contains non-finite values");
    }
  }

  ClassifierModel shell(spec, fm.feature_names, NaiveBayesModel{});
  Eigen::MatrixXd x(fm.values.rows(), fm.values.cols());
  {
    std::vector<double> row(fm.cols());
    for (Eigen::Index i = 0; i < fm.values.rows(); ++i) {
      for (std::size_t j = 0; j < fm.cols(); ++j) row[j] = fm.values(i, static_cast<Eigen::Index>(j));
      const auto c = shell.canonical(row);
      for (std::size_t j = 0; j < c.size(); ++j) x(i, static_cast<Eigen::Index>(j)) = c[j];
    }
  }
  const std::span<const int> y(fm.labels);

  ModelParams params;
  switch (spec.kind) {
    case ClassifierKind::NaiveBayes:
      params = detail::fit_naive_bayes(x, y, spec.naive_bayes);
      break;
    case ClassifierKind::Logistic:
      params = detail::fit_logistic(x, y, spec.logistic);
      break;
    case ClassifierKind::SvmLinear:
      params = detail::fit_svm(x, y, SvmKernel::Linear, spec.svm);
      break;
    case ClassifierKind::SvmPoly2:
      params = detail::fit_svm(x, y, SvmKernel::Poly2, spec.svm);
      break;
    case ClassifierKind::Mlp:
      params = detail::fit_mlp(x, y, spec.mlp, spec.seed);
      break;
    case ClassifierKind::DecisionTree:
      params = detail::fit_decision_tree(x, y, spec.tree);
      break;
    case ClassifierKind::RandomForest:
      params = detail::fit_forest(x, y, spec.forest, spec.seed);
      break;
  }
  return ClassifierModel(spec, fm.feature_names, std::move(params));
}

}  // namespace ncx
