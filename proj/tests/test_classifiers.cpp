#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ncx/classifiers.hpp"
#include "ncx/error.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ncx;
using testing_util::code_of;

namespace {

// Two Gaussian blobs in k dimensions, class 1 shifted by `shift` on every axis.
FeatureMatrix blobs(std::size_t per_class, std::size_t k, double shift, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  FeatureMatrix fm;
  fm.values.resize(static_cast<Eigen::Index>(2 * per_class), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int label = i < per_class ? 0 : 1;
    for (std::size_t j = 0; j < k; ++j) {
      fm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d(rng) + label * shift;
    }
    fm.labels.push_back(label);
    fm.subject_ids.push_back("s" + std::to_string(i));
  }
  for (std::size_t j = 0; j < k; ++j) fm.feature_names.push_back("f" + std::to_string(j));
  return fm;
}

// Four corners of the unit square, XOR labels, `per_corner` noisy points each.
FeatureMatrix clustered_xor(std::size_t per_corner, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, noise);
  FeatureMatrix fm;
  fm.values.resize(static_cast<Eigen::Index>(4 * per_corner), 2);
  Eigen::Index row = 0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (std::size_t p = 0; p < per_corner; ++p, ++row) {
        fm.values(row, 0) = (a ? 1.0 : -1.0) + d(rng);
        fm.values(row, 1) = (b ? 1.0 : -1.0) + d(rng);
        fm.labels.push_back(a ^ b);
        fm.subject_ids.push_back("x" + std::to_string(row));
      }
    }
  }
  fm.feature_names = {"u", "v"};
  return fm;
}

std::span<const double> row_of(const FeatureMatrix& fm, Eigen::Index i, std::vector<double>& buf) {
  buf.resize(static_cast<std::size_t>(fm.values.cols()));
  for (Eigen::Index j = 0; j < fm.values.cols(); ++j) buf[static_cast<std::size_t>(j)] = fm.values(i, j);
  return buf;
}

double training_accuracy(const ClassifierModel& m, const FeatureMatrix& fm) {
  std::vector<double> buf;
  int right = 0;
  for (Eigen::Index i = 0; i < fm.values.rows(); ++i) {
    right += m.label(row_of(fm, i, buf)) == fm.labels[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(right) / static_cast<double>(fm.values.rows());
}

std::vector<int> signs_of(const std::vector<int>& labels) {
  std::vector<int> s;
  for (int l : labels) s.push_back(l == 1 ? 1 : -1);
  return s;
}

}  // namespace

TEST_CASE("classifier names round-trip") {
  for (auto kind : kAllClassifiers) CHECK(parse_classifier_kind(to_string(kind)) == kind);
  CHECK_FALSE(parse_classifier_kind("knn").has_value());
}

TEST_CASE("derived hyperparameters") {
  CHECK(mlp_hidden_units(1) == 1);
  CHECK(mlp_hidden_units(2) == 2);
  CHECK(mlp_hidden_units(19) == 10);
  CHECK(mlp_hidden_units(38) == 20);
  CHECK(forest_split_features(1) == 1);
  CHECK(forest_split_features(2) == 2);
  CHECK(forest_split_features(19) == 5);
  CHECK(forest_split_features(38) == 6);
}

TEST_CASE("training needs both classes") {
  auto fm = blobs(5, 2, 1.0, 1);
  std::fill(fm.labels.begin(), fm.labels.end(), 1);
  for (auto kind : kAllClassifiers) {
    CHECK(code_of([&] { train(default_spec(kind), fm); }) == ErrorCode::SingleClassInput);
  }
}

TEST_CASE("naive bayes posterior matches the Gaussian formula") {
  const auto fm = blobs(15, 3, 1.0, 2);
  const auto model = train(default_spec(ClassifierKind::NaiveBayes), fm);
  const auto pdf = [](double x, double mean, double var) {
    return std::exp(-(x - mean) * (x - mean) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
  };
  std::vector<double> buf;
  for (Eigen::Index i = 0; i < fm.values.rows(); ++i) {
    double like[2] = {0.5, 0.5};
    for (int c = 0; c < 2; ++c) {
      for (Eigen::Index j = 0; j < 3; ++j) {
        double mean = 0.0, var = 0.0;
        for (Eigen::Index r = 0; r < 30; ++r) if (fm.labels[static_cast<std::size_t>(r)] == c) mean += fm.values(r, j) / 15.0;
        for (Eigen::Index r = 0; r < 30; ++r) {
          if (fm.labels[static_cast<std::size_t>(r)] == c) var += (fm.values(r, j) - mean) * (fm.values(r, j) - mean) / 15.0;
        }
        like[c] *= pdf(fm.values(i, j), mean, var);
      }
    }
    CHECK(model.score(row_of(fm, i, buf)) == doctest::Approx(like[1] / (like[0] + like[1])).epsilon(1e-10));
  }
}

TEST_CASE("logistic regression matches IRLS") {
  const auto fm = blobs(30, 4, 0.7, 3);
  const auto model = train(default_spec(ClassifierKind::Logistic), fm);
  const auto& lm = std::get<LogisticModel>(model.params());
  const auto want = oracle::irls_logistic(fm.values, fm.labels, 1e-8);
  CHECK((lm.weights - want.head(4)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(std::abs(lm.bias - want(4)) < 1e-6);
  CHECK(lm.gradient_norm < 1e-8);
}

TEST_CASE("logistic regression label flip negates the model") {
  auto fm = blobs(25, 3, 0.8, 4);
  const auto a = std::get<LogisticModel>(train(default_spec(ClassifierKind::Logistic), fm).params());
  for (auto& l : fm.labels) l = 1 - l;
  const auto b = std::get<LogisticModel>(train(default_spec(ClassifierKind::Logistic), fm).params());
  CHECK((a.weights + b.weights).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(std::abs(a.bias + b.bias) < 1e-6);
}

TEST_CASE("svm dual reaches the QP optimum and stays feasible") {
  for (auto kernel : {SvmKernel::Linear, SvmKernel::Poly2}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto fm = blobs(12, 3, 1.0, 10 + seed);
      const auto y = signs_of(fm.labels);
      SvmParams p;
      p.tolerance = 1e-8;
      const auto sol = solve_svm_dual(fm.values, y, kernel, p);
      CHECK(sol.converged);
      double balance = 0.0;
      for (Eigen::Index i = 0; i < sol.alpha.size(); ++i) {
        CHECK(sol.alpha(i) >= 0.0);
        CHECK(sol.alpha(i) <= p.c);
        balance += sol.alpha(i) * y[static_cast<std::size_t>(i)];
      }
      CHECK(std::abs(balance) < 1e-10);

      Eigen::MatrixXd k(fm.values.rows(), fm.values.rows());
      for (Eigen::Index i = 0; i < k.rows(); ++i) {
        for (Eigen::Index j = 0; j < k.cols(); ++j) {
          const double dot = fm.values.row(i).dot(fm.values.row(j));
          k(i, j) = kernel == SvmKernel::Poly2 ? dot * dot : dot;
        }
      }
      const double best = oracle::svm_dual_max(k, y, p.c, 20000);
      CHECK(sol.dual_objective >= best - 1e-6 * std::max(1.0, std::abs(best)));
      CHECK(sol.dual_objective == doctest::Approx(svm_dual_objective(fm.values, y, kernel, sol.alpha)).epsilon(1e-12));
    }
  }
}

TEST_CASE("linear svm separates well-separated blobs") {
  const auto fm = blobs(20, 2, 6.0, 6);
  const auto model = train(default_spec(ClassifierKind::SvmLinear), fm);
  CHECK(model.threshold() == 0.0);
  CHECK(training_accuracy(model, fm) == 1.0);
}

TEST_CASE("quadratic svm solves XOR and linear svm cannot") {
  const auto fm = clustered_xor(10, 0.1, 7);
  CHECK(training_accuracy(train(default_spec(ClassifierKind::SvmPoly2), fm), fm) == 1.0);
  CHECK(training_accuracy(train(default_spec(ClassifierKind::SvmLinear), fm), fm) <= 0.75);
}

TEST_CASE("mlp gradient matches finite differences") {
  const auto fm = blobs(6, 3, 1.0, 8);
  MlpNetwork net;
  const auto w = testing_util::gaussian(4 * 2 + 3, 9);
  net.hidden = Eigen::Map<const Eigen::MatrixXd>(w.data(), 2, 4);
  net.output = Eigen::Map<const Eigen::VectorXd>(w.data() + 8, 3);
  const auto g = mlp_gradient(net, fm.values, fm.labels);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < net.hidden.size(); ++i) {
    auto up = net, down = net;
    up.hidden.data()[i] += h;
    down.hidden.data()[i] -= h;
    const double fd = (mlp_loss(up, fm.values, fm.labels) - mlp_loss(down, fm.values, fm.labels)) / (2 * h);
    CHECK(g.hidden.data()[i] == doctest::Approx(fd).epsilon(1e-6));
  }
  for (Eigen::Index i = 0; i < net.output.size(); ++i) {
    auto up = net, down = net;
    up.output(i) += h;
    down.output(i) -= h;
    const double fd = (mlp_loss(up, fm.values, fm.labels) - mlp_loss(down, fm.values, fm.labels)) / (2 * h);
    CHECK(g.output(i) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("mlp learns clustered XOR for most seeds") {
  const auto fm = clustered_xor(10, 0.1, 11);
  int solved = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto model = train(default_spec(ClassifierKind::Mlp, seed), fm);
    CHECK(std::get<MlpModel>(model.params()).network.hidden.rows() == mlp_hidden_units(2));
    solved += training_accuracy(model, fm) == 1.0;
  }
  CHECK(solved >= 8);
}

TEST_CASE("decision tree on a threshold rule") {
  FeatureMatrix fm;
  fm.values.resize(20, 1);
  for (int i = 0; i < 20; ++i) {
    fm.values(i, 0) = i;
    fm.labels.push_back(i >= 12 ? 1 : 0);
    fm.subject_ids.push_back("t" + std::to_string(i));
  }
  fm.feature_names = {"x"};
  const auto model = train(default_spec(ClassifierKind::DecisionTree), fm);
  const auto& tree = std::get<DecisionTreeModel>(model.params()).tree;
  CHECK(tree.leaves() == 2);
  CHECK(tree.nodes[0].feature == 0);
  CHECK(tree.nodes[0].threshold == 11.5);
  CHECK(training_accuracy(model, fm) == 1.0);
  const std::vector<double> lo{3.0}, hi{30.0};
  CHECK(model.score(lo) == doctest::Approx(1.0 / 14.0));
  CHECK(model.score(hi) == doctest::Approx(9.0 / 10.0));
}

TEST_CASE("pruning trades training accuracy for fewer leaves") {
  const auto fm = blobs(60, 3, 0.5, 12);
  auto spec = default_spec(ClassifierKind::DecisionTree);
  const auto pruned = train(spec, fm);
  spec.tree.prune = false;
  const auto full = train(spec, fm);
  const auto leaves = [](const ClassifierModel& m) { return std::get<DecisionTreeModel>(m.params()).tree.leaves(); };
  CHECK(leaves(pruned) <= leaves(full));
  CHECK(training_accuracy(pruned, fm) <= training_accuracy(full, fm));
}

TEST_CASE("forest score is the fraction of tree votes") {
  const auto fm = blobs(20, 4, 1.0, 13);
  const auto model = train(default_spec(ClassifierKind::RandomForest, 5), fm);
  const auto& forest = std::get<ForestModel>(model.params());
  CHECK(forest.trees.size() == 100);
  CHECK(forest.features_per_split == 3);
  std::vector<double> buf;
  for (Eigen::Index i = 0; i < fm.values.rows(); ++i) {
    const auto x = row_of(fm, i, buf);
    int votes = 0;
    for (const auto& t : forest.trees) votes += t.vote(x);
    CHECK(model.score(x) == static_cast<double>(votes) / 100.0);
  }
}

TEST_CASE("forest is deterministic per seed and stable across seeds") {
  const auto fm = blobs(20, 4, 2.0, 14);
  const auto a = train(default_spec(ClassifierKind::RandomForest, 21), fm);
  const auto b = train(default_spec(ClassifierKind::RandomForest, 21), fm);
  CHECK(a.to_json() == b.to_json());
  const auto test = blobs(50, 4, 2.0, 15);
  for (std::uint64_t seed = 30; seed < 35; ++seed) {
    CHECK(training_accuracy(train(default_spec(ClassifierKind::RandomForest, seed), fm), test) >= 0.85);
  }
}

TEST_CASE("models ignore feature column order") {
  const auto fm = blobs(15, 4, 1.0, 16);
  FeatureMatrix perm = fm;
  const std::vector<Eigen::Index> order{2, 0, 3, 1};
  for (std::size_t j = 0; j < 4; ++j) {
    perm.values.col(static_cast<Eigen::Index>(j)) = fm.values.col(order[j]);
    perm.feature_names[j] = fm.feature_names[static_cast<std::size_t>(order[j])];
  }
  for (auto kind : kAllClassifiers) {
    CAPTURE(to_string(kind));
    const auto a = train(default_spec(kind, 3), fm);
    const auto b = train(default_spec(kind, 3), perm);
    std::vector<double> ba, bb;
    for (Eigen::Index i = 0; i < fm.values.rows(); ++i) {
      CHECK(a.score(row_of(fm, i, ba)) == b.score(row_of(perm, i, bb)));
    }
  }
}

TEST_CASE("model JSON round-trips scores") {
  const auto fm = blobs(15, 3, 1.0, 17);
  for (auto kind : kAllClassifiers) {
    CAPTURE(to_string(kind));
    const auto model = train(default_spec(kind, 4), fm);
    const auto back = ClassifierModel::from_json(model.to_json());
    CHECK(back.kind() == kind);
    CHECK(back.feature_names() == model.feature_names());
    std::vector<double> buf;
    for (Eigen::Index i = 0; i < fm.values.rows(); ++i) {
      const auto x = row_of(fm, i, buf);
      const double s = model.score(x);
      CHECK(std::abs(back.score(x) - s) <= 1e-15 * std::max(1.0, std::abs(s)));
    }
  }
  CHECK_THROWS_AS(ClassifierModel::from_json("{\"kind\":\"nope\"}"), Error);
}

TEST_CASE("scoring by name checks the feature list") {
  const auto fm = blobs(10, 2, 1.0, 18);
  const auto model = train(default_spec(ClassifierKind::Logistic), fm);
  const std::vector<std::string> wrong{"f1", "f0"};
  const std::vector<double> x{0.0, 0.0};
  CHECK(code_of([&] { model.score(wrong, x); }) == ErrorCode::FeatureNameMismatch);
  CHECK(model.score(fm.feature_names, x) == model.score(x));
}
