#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <random>
#include <set>

#include "ncx/error.hpp"
#include "ncx/evaluation.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ncx;
using testing_util::code_of;

namespace {

std::vector<int> cohort_labels(std::size_t patients = 21, std::size_t controls = 20) {
  std::vector<int> y(patients, 1);
  y.insert(y.end(), controls, 0);
  return y;
}

FeatureMatrix separable(std::size_t patients, std::size_t controls, std::size_t k, double shift, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  FeatureMatrix fm;
  fm.labels = cohort_labels(patients, controls);
  const auto n = static_cast<Eigen::Index>(fm.labels.size());
  fm.values.resize(n, static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < fm.values.cols(); ++j) fm.values(i, j) = d(rng) + shift * fm.labels[static_cast<std::size_t>(i)];
    fm.subject_ids.push_back("S" + std::to_string(i));
  }
  for (std::size_t j = 0; j < k; ++j) fm.feature_names.push_back("f" + std::to_string(j));
  return fm;
}

// Predicts the majority label of its training partition.
Scorer majority(const FeatureMatrix& train) {
  const auto ones = std::count(train.labels.begin(), train.labels.end(), 1);
  const double s = 2 * ones > static_cast<long>(train.labels.size()) ? 1.0 : 0.0;
  return {[s](std::span<const double>) { return s; }, 0.5};
}

}  // namespace

TEST_CASE("ten folds over 41 subjects") {
  const auto y = cohort_labels();
  const auto plan = stratified_kfold(y, 10, 7);
  REQUIRE(plan.assignments.size() == 41);
  std::vector<std::size_t> sizes(10, 0);
  for (auto f : plan.assignments) ++sizes[f];
  std::sort(sizes.begin(), sizes.end());
  CHECK(sizes.front() == 4);
  CHECK(sizes.back() == 5);
  CHECK(std::count(sizes.begin(), sizes.end(), 5) == 1);
  for (std::size_t f = 0; f < 10; ++f) {
    int pos = 0, neg = 0;
    for (auto r : plan.test_rows(f)) (y[r] ? pos : neg) += 1;
    CHECK(pos >= 2);
    CHECK(pos <= 3);
    CHECK(neg == 2);
    std::set<std::size_t> seen;
    for (auto r : plan.test_rows(f)) seen.insert(r);
    for (auto r : plan.train_rows(f)) CHECK(seen.count(r) == 0);
    CHECK(plan.test_rows(f).size() + plan.train_rows(f).size() == 41);
  }
}

TEST_CASE("fold plans are deterministic per seed") {
  const auto y = cohort_labels();
  CHECK(stratified_kfold(y, 10, 3).assignments == stratified_kfold(y, 10, 3).assignments);
  CHECK(stratified_kfold(y, 10, 3).assignments != stratified_kfold(y, 10, 4).assignments);
}

TEST_CASE("leave-one-out and fold contract") {
  const auto y = cohort_labels();
  const auto loo = stratified_kfold(y, 41, 1);
  for (std::size_t f = 0; f < 41; ++f) CHECK(loo.test_rows(f).size() == 1);
  CHECK(code_of([&] { stratified_kfold(y, 42, 1); }) == ErrorCode::KTooLarge);
  CHECK(code_of([&] { stratified_kfold(y, 1, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("auc against the pairwise definition") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = testing_util::uniform(30, seed);
    for (auto& v : s) v = std::round(v * 8.0);  // force ties
    const auto y = cohort_labels(15, 15);
    CHECK(roc_auc(s, y) == doctest::Approx(oracle::auc_pairs(s, y)).epsilon(1e-14));
  }
  const std::vector<double> perfect{0.9, 0.8, 0.1, 0.2};
  const std::vector<int> y{1, 1, 0, 0};
  CHECK(roc_auc(perfect, y) == 1.0);
  const std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
  CHECK(roc_auc(flat, y) == 0.5);
  const std::vector<int> one{1, 1, 1, 1};
  CHECK(code_of([&] { roc_auc(flat, one); }) == ErrorCode::SingleClassInput);
}

TEST_CASE("pooled accuracy of 39 of 41") {
  std::vector<Prediction> rows;
  const auto y = cohort_labels();
  for (std::size_t i = 0; i < 41; ++i) {
    const int pred = i == 0 || i == 40 ? 1 - y[i] : y[i];
    rows.push_back({y[i], pred, static_cast<double>(pred), i % 10});
  }
  const auto r = summarize(rows);
  CHECK(r.accuracy_pct == doctest::Approx(100.0 * 39.0 / 41.0));
  CHECK(std::round(r.accuracy_pct * 100.0) / 100.0 == 95.12);
  CHECK(r.confusion.tp == 20);
  CHECK(r.confusion.fn == 1);
  CHECK(r.confusion.tn == 19);
  CHECK(r.confusion.fp == 1);
}

TEST_CASE("majority trainer under leave-one-out scores zero") {
  // Holding out one subject always tips the training majority to the other class.
  const auto fm = separable(20, 20, 2, 1.0, 1);
  const auto plan = stratified_kfold(fm.labels, 40, 1);
  const auto r = cross_validate(FoldTrainer(majority), fm, plan);
  CHECK(r.accuracy_pct == 0.0);
  CHECK(r.rows.size() == 40);
}

TEST_CASE("trainers see only z-scored training rows") {
  const auto fm = separable(21, 20, 3, 1.0, 2);
  const auto plan = stratified_kfold(fm.labels, 10, 5);
  std::vector<std::size_t> seen_rows;
  const FoldTrainer spy = [&](const FeatureMatrix& train) {
    seen_rows.push_back(train.rows());
    for (Eigen::Index j = 0; j < train.values.cols(); ++j) {
      const auto col = train.values.col(j);
      const double mean = col.mean();
      CHECK(std::abs(mean) < 1e-12);
      CHECK(std::sqrt((col.array() - mean).square().sum() / static_cast<double>(col.size() - 1)) ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
    return majority(train);
  };
  cross_validate(spy, fm, plan);
  REQUIRE(seen_rows.size() == 10);
  for (std::size_t f = 0; f < 10; ++f) CHECK(seen_rows[f] == plan.train_rows(f).size());
}

TEST_CASE("per-fold pca hands the trainer m components") {
  const auto fm = separable(21, 20, 6, 1.0, 3);
  const auto plan = stratified_kfold(fm.labels, 5, 5);
  const FoldTrainer spy = [&](const FeatureMatrix& train) {
    CHECK(train.cols() == 2);
    CHECK(train.feature_names.front() == "PC1");
    return majority(train);
  };
  cross_validate(spy, fm, plan, {PcaScope::PerFold, 2});
  cross_validate(spy, fm, plan, {PcaScope::Global, 2});
  CHECK(parse_pca_scope(to_string(PcaScope::PerFold)) == PcaScope::PerFold);
  CHECK(parse_pca_scope(to_string(PcaScope::Global)) == PcaScope::Global);
}

TEST_CASE("cross-validation is independent of thread count") {
  const auto fm = separable(21, 20, 4, 1.0, 4);
  const auto plan = stratified_kfold(fm.labels, 10, 9);
  for (auto kind : {ClassifierKind::Logistic, ClassifierKind::RandomForest, ClassifierKind::Mlp}) {
    const auto a = cross_validate(default_spec(kind, 3), fm, plan, {}, 1);
    const auto b = cross_validate(default_spec(kind, 3), fm, plan, {}, 4);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].score == b.rows[i].score);
    CHECK(a.auc == b.auc);
  }
}

TEST_CASE("separable cohort is classified perfectly") {
  const auto shifted = separable(21, 20, 4, 6.0, 6);
  const auto plan = stratified_kfold(shifted.labels, 10, 1);
  for (auto kind : kAllClassifiers) {
    CAPTURE(to_string(kind));
    const auto r = cross_validate(default_spec(kind, 2), shifted, plan);
    CHECK(r.accuracy_pct == 100.0);
    CHECK(r.auc == 1.0);
  }
}

TEST_CASE("margins are row and column means") {
  std::vector<GridCell> cells;
  const auto cell = [](std::string c, std::string f, double acc) {
    GridCell g{std::move(c), std::move(f), {}};
    g.result.accuracy_pct = acc;
    return g;
  };
  cells.push_back(cell("mlp", "HFD", 80));
  cells.push_back(cell("mlp", "SampEn", 90));
  cells.push_back(cell("logistic", "HFD", 70));
  cells.push_back(cell("logistic", "SampEn", 100));
  const auto m = compute_margins(cells);
  REQUIRE(m.per_classifier.size() == 2);
  CHECK(m.per_classifier[0].name == "mlp");
  CHECK(m.per_classifier[0].accuracy_pct == 85.0);
  CHECK(m.per_classifier[1].accuracy_pct == 85.0);
  REQUIRE(m.per_feature_set.size() == 2);
  CHECK(m.per_feature_set[0].name == "HFD");
  CHECK(m.per_feature_set[0].accuracy_pct == 75.0);
  CHECK(m.per_feature_set[1].accuracy_pct == 95.0);
}

TEST_CASE("single-cell report") {
  testing_util::TempDir dir("eval");
  Report rep;
  rep.run_id = "ncx-test";
  rep.seed = 9;
  rep.config_digest = "abc";
  std::vector<Prediction> rows{{1, 1, 0.9, 0}, {0, 0, 0.1, 0}, {1, 0, 0.4, 1}, {0, 0, 0.2, 1}};
  rep.grid.push_back({"logistic", "HFD", summarize(rows)});
  rep.explained_variance.push_back({1, 60.0});
  emit_report(rep, dir.path());
  const auto doc = nlohmann::json::parse(testing_util::read_file(dir.path() / "report.json"));
  CHECK(doc["run_id"] == "ncx-test");
  CHECK(doc["grid"].size() == 1);
  CHECK(doc["grid"][0]["accuracy_pct"] == 75.0);
  CHECK(doc["margins"]["per_classifier"][0]["accuracy_pct"] == 75.0);
  const auto csv = testing_util::read_file(dir.path() / "report_grid.csv");
  CHECK(csv.rfind("classifier,features,accuracy_pct,auc,tp,fp,tn,fn\nlogistic,HFD,75,", 0) == 0);
  CHECK(std::filesystem::exists(dir.path() / "report_explained_variance.csv"));

  Report empty;
  CHECK(code_of([&] { emit_report(empty, dir.path() / "e"); }) == ErrorCode::InvalidArgument);
}
