#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ncx/feature_matrix.hpp"

namespace ncx {

enum class ClassifierKind { NaiveBayes, Logistic, SvmLinear, SvmPoly2, Mlp, DecisionTree, RandomForest };

inline constexpr ClassifierKind kAllClassifiers[] = {
    ClassifierKind::Mlp,         ClassifierKind::Logistic,     ClassifierKind::SvmLinear,
    ClassifierKind::SvmPoly2,    ClassifierKind::DecisionTree, ClassifierKind::RandomForest,
    ClassifierKind::NaiveBayes};

std::string_view to_string(ClassifierKind kind);
std::optional<ClassifierKind> parse_classifier_kind(std::string_view name);

// Defaults mirror the reference toolkit's defaults.

struct NaiveBayesParams {
  double variance_floor = 1e-9;
};

struct LogisticParams {
  double ridge = 1e-8;
  double gradient_tolerance = 1e-8;
  int max_iterations = 200;
};

struct SvmParams {
  double c = 1.0;
  /// KKT tolerance on the maximal violating pair.
  double tolerance = 1e-3;
  /// Iteration cap is max_passes * n pair updates.
  long max_passes = 10'000;
  /// Min-max scale each feature to [0, 1] on the training data before solving.
  bool normalize = true;
};

struct MlpParams {
  double learning_rate = 0.3;
  double momentum = 0.2;
  int epochs = 500;
  double init_range = 0.5;
};

struct TreeParams {
  double confidence = 0.25;
  int min_per_node = 2;
  bool prune = true;
};

struct ForestParams {
  int trees = 100;
  /// 0 selects int(log2 k) + 1.
  int features_per_split = 0;
};

struct TrainerSpec {
  ClassifierKind kind = ClassifierKind::NaiveBayes;
  NaiveBayesParams naive_bayes;
  LogisticParams logistic;
  SvmParams svm;
  MlpParams mlp;
  TreeParams tree;
  ForestParams forest;
  std::uint64_t seed = 1;
};

TrainerSpec default_spec(ClassifierKind kind, std::uint64_t seed = 1);

/// ceil((k + 1) / 2).
int mlp_hidden_units(std::size_t k);
/// int(log2 k) + 1.
int forest_split_features(std::size_t k);

// Learned parameters. All vectors are indexed in canonical feature order
// (features sorted by name), see ClassifierModel.

struct NaiveBayesModel {
  double log_prior[2] = {0, 0};
  Eigen::MatrixXd mean;      // 2 x k
  Eigen::MatrixXd variance;  // 2 x k
};

struct LogisticModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
};

enum class SvmKernel { Linear, Poly2 };

double kernel_value(SvmKernel kernel, std::span<const double> u, std::span<const double> v);

struct SvmModel {
  SvmKernel kernel = SvmKernel::Linear;
  /// Inputs are mapped to (x - offset) * scale before the kernel; empty when
  /// normalization is off.
  Eigen::VectorXd offset;
  Eigen::VectorXd scale;
  Eigen::MatrixXd support;       // support vectors (scaled space), one per row
  Eigen::VectorXd coefficients;  // alpha_i * y_i
  double bias = 0.0;
  bool converged = true;
  long iterations = 0;
};

/// Output of the SMO dual solver; exposed for dual-feasibility checks.
struct SvmSolution {
  Eigen::VectorXd alpha;
  double bias = 0.0;
  double dual_objective = 0.0;
  /// Final maximal KKT violation m(alpha) - M(alpha).
  double kkt_gap = 0.0;
  long iterations = 0;
  bool converged = true;
};

/// Maximizes sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij subject to
/// 0 <= alpha <= C and sum(alpha y) = 0. y must hold -1/+1.
SvmSolution solve_svm_dual(const Eigen::MatrixXd& x, std::span<const int> y, SvmKernel kernel,
                           const SvmParams& params);

double svm_dual_objective(const Eigen::MatrixXd& x, std::span<const int> y, SvmKernel kernel,
                          const Eigen::VectorXd& alpha);

/// Single hidden layer; the last column of `hidden` and last entry of
/// `output` are biases.
struct MlpNetwork {
  Eigen::MatrixXd hidden;  // h x (k + 1)
  Eigen::VectorXd output;  // h + 1
};

struct MlpModel {
  MlpNetwork network;
};

/// 1/2 sum (o - t)^2 over the batch, t in {0, 1}.
double mlp_loss(const MlpNetwork& net, const Eigen::MatrixXd& x, std::span<const int> y);
/// Backpropagated gradient of mlp_loss.
MlpNetwork mlp_gradient(const MlpNetwork& net, const Eigen::MatrixXd& x, std::span<const int> y);
double mlp_forward(const MlpNetwork& net, std::span<const double> x);

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;   // x[feature] <= threshold
  int right = -1;  // x[feature] > threshold
  double count[2] = {0, 0};

  bool leaf() const noexcept { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& leaf_for(std::span<const double> x) const;
  std::size_t leaves() const;
  /// Majority label of the reached leaf; ties go to class 0.
  int vote(std::span<const double> x) const;
};

struct DecisionTreeModel {
  Tree tree;
};

struct ForestModel {
  std::vector<Tree> trees;
  int features_per_split = 1;
};

using ModelParams = std::variant<NaiveBayesModel, LogisticModel, SvmModel, MlpModel,
                                 DecisionTreeModel, ForestModel>;

/// A trained binary classifier. Internally features are reordered by name so
/// that column permutations of the training matrix do not change the model.
class ClassifierModel {
 public:
  ClassifierModel() = default;
  ClassifierModel(TrainerSpec spec, std::vector<std::string> feature_names, ModelParams params);

  ClassifierKind kind() const noexcept { return spec_.kind; }
  const TrainerSpec& spec() const noexcept { return spec_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const ModelParams& params() const noexcept { return params_; }

  /// 0.5 for probabilistic models, 0 for SVM margins.
  double threshold() const noexcept;

  /// `x` follows feature_names() order.
  double score(std::span<const double> x) const;
  /// Throws FeatureNameMismatch unless `names` equals feature_names().
  double score(std::span<const std::string> names, std::span<const double> x) const;
  /// 1 when score > threshold; ties go to class 0.
  int label(std::span<const double> x) const;

  /// Canonical-order copy of `x`.
  std::vector<double> canonical(std::span<const double> x) const;

  std::string to_json() const;
  static ClassifierModel from_json(std::string_view text);

 private:
  TrainerSpec spec_;
  std::vector<std::string> feature_names_;
  std::vector<std::size_t> canonical_;  // canonical slot -> input column
  ModelParams params_;
};

/// Trains on every row of `fm`. Throws SingleClassInput when a class is absent.
ClassifierModel train(const TrainerSpec& spec, const FeatureMatrix& fm);

}  // namespace ncx
