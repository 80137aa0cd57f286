#include <json.hpp>

#include "ncx/classifiers.hpp"
#include "ncx/error.hpp"

namespace ncx {
namespace {

using nlohmann::json;

constexpr int kModelVersion = 1;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  Eigen::MatrixXd m(rows, cols);
  const auto& data = j.at("data");
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(i, c) = data.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(c)).get<double>();
    }
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json tree_to_json(const Tree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.count[0], n.count[1]});
  }
  return nodes;
}

Tree tree_from_json(const json& j) {
  Tree t;
  for (const auto& n : j) {
    TreeNode node;
    node.feature = n.at(0).get<int>();
    node.threshold = n.at(1).get<double>();
    node.left = n.at(2).get<int>();
    node.right = n.at(3).get<int>();
    node.count[0] = n.at(4).get<double>();
    node.count[1] = n.at(5).get<double>();
    t.nodes.push_back(node);
  }
  if (t.nodes.empty()) fail(ErrorCode::MalformedFile, "empty tree in model JSON");
  return t;
}

json hyperparameters(const TrainerSpec& s) {
  switch (s.kind) {
    case ClassifierKind::NaiveBayes:
      return {{"variance_floor", s.naive_bayes.variance_floor}};
    case ClassifierKind::Logistic:
      return {{"ridge", s.logistic.ridge},
              {"gradient_tolerance", s.logistic.gradient_tolerance},
              {"max_iterations", s.logistic.max_iterations}};
    case ClassifierKind::SvmLinear:
    case ClassifierKind::SvmPoly2:
      return {{"c", s.svm.c},
              {"tolerance", s.svm.tolerance},
              {"max_passes", s.svm.max_passes},
              {"normalize", s.svm.normalize}};
    case ClassifierKind::Mlp:
      return {{"learning_rate", s.mlp.learning_rate},
              {"momentum", s.mlp.momentum},
              {"epochs", s.mlp.epochs},
              {"init_range", s.mlp.init_range}};
    case ClassifierKind::DecisionTree:
      return {{"confidence", s.tree.confidence},
              {"min_per_node", s.tree.min_per_node},
              {"prune", s.tree.prune}};
    case ClassifierKind::RandomForest:
      return {{"trees", s.forest.trees}, {"features_per_split", s.forest.features_per_split}};
  }
  return json::object();
}

void read_hyperparameters(TrainerSpec& s, const json& h) {
  switch (s.kind) {
    case ClassifierKind::NaiveBayes:
      s.naive_bayes.variance_floor = h.at("variance_floor").get<double>();
      break;
    case ClassifierKind::Logistic:
      s.logistic.ridge = h.at("ridge").get<double>();
      s.logistic.gradient_tolerance = h.at("gradient_tolerance").get<double>();
      s.logistic.max_iterations = h.at("max_iterations").get<int>();
      break;
    case ClassifierKind::SvmLinear:
    case ClassifierKind::SvmPoly2:
      s.svm.c = h.at("c").get<double>();
      s.svm.tolerance = h.at("tolerance").get<double>();
      s.svm.max_passes = h.at("max_passes").get<long>();
      s.svm.normalize = h.at("normalize").get<bool>();
      break;
    case ClassifierKind::Mlp:
      s.mlp.learning_rate = h.at("learning_rate").get<double>();
      s.mlp.momentum = h.at("momentum").get<double>();
      s.mlp.epochs = h.at("epochs").get<int>();
      s.mlp.init_range = h.at("init_range").get<double>();
      break;
    case ClassifierKind::DecisionTree:
      s.tree.confidence = h.at("confidence").get<double>();
      s.tree.min_per_node = h.at("min_per_node").get<int>();
      s.tree.prune = h.at("prune").get<bool>();
      break;
    case ClassifierKind::RandomForest:
      s.forest.trees = h.at("trees").get<int>();
      s.forest.features_per_split = h.at("features_per_split").get<int>();
      break;
  }
}

}  // namespace

std::string ClassifierModel::to_json() const {
  json params = std::visit(
      [](const auto& m) -> json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, NaiveBayesModel>) {
          return {{"log_prior", {m.log_prior[0], m.log_prior[1]}},
                  {"mean", matrix_to_json(m.mean)},
                  {"variance", matrix_to_json(m.variance)}};
        } else if constexpr (std::is_same_v<M, LogisticModel>) {
          return {{"weights", vector_to_json(m.weights)},
                  {"bias", m.bias},
                  {"iterations", m.iterations},
                  {"gradient_norm", m.gradient_norm}};
        } else if constexpr (std::is_same_v<M, SvmModel>) {
          return {{"kernel", m.kernel == SvmKernel::Poly2 ? "poly2" : "linear"},
                  {"offset", vector_to_json(m.offset)},
                  {"scale", vector_to_json(m.scale)},
                  {"support", matrix_to_json(m.support)},
                  {"coefficients", vector_to_json(m.coefficients)},
                  {"bias", m.bias},
                  {"converged", m.converged},
                  {"iterations", m.iterations}};
        } else if constexpr (std::is_same_v<M, MlpModel>) {
          return {{"hidden", matrix_to_json(m.network.hidden)},
                  {"output", vector_to_json(m.network.output)}};
        } else if constexpr (std::is_same_v<M, DecisionTreeModel>) {
          return {{"tree", tree_to_json(m.tree)}};
        } else {
          json trees = json::array();
          for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
          return {{"features_per_split", m.features_per_split}, {"trees", std::move(trees)}};
        }
      },
      params_);

  json doc{{"format", "ncx-model"},
           {"version", kModelVersion},
           {"kind", std::string(to_string(spec_.kind))},
           {"seed", spec_.seed},
           {"hyperparameters", hyperparameters(spec_)},
           {"feature_names", feature_names_},
           {"parameters", std::move(params)}};
  return doc.dump(2);
}

ClassifierModel ClassifierModel::from_json(std::string_view text) {
  try {
    const auto doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "ncx-model") {
      fail(ErrorCode::MalformedFile, "not a model document");
    }
    if (doc.at("version").get<int>() != kModelVersion) {
      fail(ErrorCode::MalformedFile, "unsupported model version");
    }
    const auto kind = parse_classifier_kind(doc.at("kind").get<std::string>());
    if (!kind) fail(ErrorCode::MalformedFile, "unknown classifier kind");
    TrainerSpec spec = default_spec(*kind, doc.at("seed").get<std::uint64_t>());
    read_hyperparameters(spec, doc.at("hyperparameters"));
    auto names = doc.at("feature_names").get<std::vector<std::string>>();
    const auto& p = doc.at("parameters");

    ModelParams params;
    switch (*kind) {
      case ClassifierKind::NaiveBayes: {
        NaiveBayesModel m;
        m.log_prior[0] = p.at("log_prior").at(0).get<double>();
        m.log_prior[1] = p.at("log_prior").at(1).get<double>();
        m.mean = matrix_from_json(p.at("mean"));
        m.variance = matrix_from_json(p.at("variance"));
        params = std::move(m);
        break;
      }
      case ClassifierKind::Logistic: {
        LogisticModel m;
        m.weights = vector_from_json(p.at("weights"));
        m.bias = p.at("bias").get<double>();
        m.iterations = p.at("iterations").get<int>();
        m.gradient_norm = p.at("gradient_norm").get<double>();
        params = std::move(m);
        break;
      }
      case ClassifierKind::SvmLinear:
      case ClassifierKind::SvmPoly2: {
        SvmModel m;
        m.kernel = p.at("kernel").get<std::string>() == "poly2" ? SvmKernel::Poly2 : SvmKernel::Linear;
        m.offset = vector_from_json(p.at("offset"));
        m.scale = vector_from_json(p.at("scale"));
        m.support = matrix_from_json(p.at("support"));
        m.coefficients = vector_from_json(p.at("coefficients"));
        m.bias = p.at("bias").get<double>();
        m.converged = p.at("converged").get<bool>();
        m.iterations = p.at("iterations").get<long>();
        params = std::move(m);
        break;
      }
      case ClassifierKind::Mlp: {
        MlpModel m;
        m.network.hidden = matrix_from_json(p.at("hidden"));
        m.network.output = vector_from_json(p.at("output"));
        params = std::move(m);
        break;
      }
      case ClassifierKind::DecisionTree:
        params = DecisionTreeModel{tree_from_json(p.at("tree"))};
        break;
      case ClassifierKind::RandomForest: {
        ForestModel m;
        m.features_per_split = p.at("features_per_split").get<int>();
        for (const auto& t : p.at("trees")) m.trees.push_back(tree_from_json(t));
        params = std::move(m);
        break;
      }
    }
    return ClassifierModel(spec, std::move(names), std::move(params));
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedFile, std::string("model JSON: ") + e.what());
  }
}

}  // namespace ncx
