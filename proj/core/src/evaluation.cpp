#include "ncx/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "ncx/error.hpp"
#include "ncx/feature_stats.hpp"
#include "ncx/parallel.hpp"

namespace ncx {

std::vector<std::size_t> FoldPlan::test_rows(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FoldPlan::train_rows(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) rows.push_back(i);
  }
  return rows;
}

FoldPlan stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) fail(ErrorCode::InvalidArgument, "K must be at least 2");
  if (k > labels.size()) {
    fail(ErrorCode::KTooLarge, "K=" + std::to_string(k) + " exceeds " +
                                   std::to_string(labels.size()) + " rows");
  }
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(labels.size(), 0);
  std::size_t next = 0;
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) rows.push_back(i);
    }
    if (!rows.empty() && rows.size() < k) {
      plan.warnings.push_back("class " + std::to_string(cls) + " has " +
                              std::to_string(rows.size()) + " rows for " + std::to_string(k) +
                              " folds; some folds lack it");
    }
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(cls)));
    std::shuffle(rows.begin(), rows.end(), rng);
    for (auto r : rows) {
      plan.assignments[r] = next;
      next = (next + 1) % k;
    }
  }
  return plan;
}

std::optional<PcaScope> parse_pca_scope(std::string_view name) {
  if (name == "none") return PcaScope::None;
  if (name == "per_fold" || name == "per-fold") return PcaScope::PerFold;
  if (name == "global") return PcaScope::Global;
  return std::nullopt;
}

std::string_view to_string(PcaScope scope) {
  switch (scope) {
    case PcaScope::None: return "none";
    case PcaScope::PerFold: return "per_fold";
    case PcaScope::Global: return "global";
  }
  return "none";
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) fail(ErrorCode::InvalidArgument, "score/label size mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum = 0.0;
  double n_pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) {
      if (labels[order[t]] == 1) {
        rank_sum += midrank;
        n_pos += 1.0;
      }
    }
    i = j + 1;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) fail(ErrorCode::SingleClassInput, "AUC needs both classes");
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

EvalResult summarize(std::vector<Prediction> rows) {
  EvalResult r;
  r.rows = std::move(rows);
  std::vector<double> scores;
  std::vector<int> truth;
  for (const auto& p : r.rows) {
    if (p.truth == 1) {
      (p.predicted == 1 ? r.confusion.tp : r.confusion.fn)++;
    } else {
      (p.predicted == 1 ? r.confusion.fp : r.confusion.tn)++;
    }
    scores.push_back(p.score);
    truth.push_back(p.truth);
  }
  const auto total = r.rows.size();
  if (total == 0) fail(ErrorCode::InvalidArgument, "no predictions to summarize");
  r.accuracy_pct = 100.0 * static_cast<double>(r.confusion.tp + r.confusion.tn) / static_cast<double>(total);
  r.auc = roc_auc(scores, truth);
  return r;
}

FoldTrainer make_fold_trainer(const TrainerSpec& spec) {
  return [spec](const FeatureMatrix& train_fm) {
    auto model = std::make_shared<ClassifierModel>(train(spec, train_fm));
    return Scorer{[model](std::span<const double> x) { return model->score(x); }, model->threshold()};
  };
}

namespace {

struct Prepared {
  FeatureMatrix train;
  FeatureMatrix test;
};

Prepared prepare_fold(const FeatureMatrix& fm, const std::vector<std::size_t>& train_rows,
                      const std::vector<std::size_t>& test_rows, PcaMode pca) {
  auto train_fm = fm.select_rows(train_rows);
  auto test_fm = fm.select_rows(test_rows);
  if (pca.scope == PcaScope::PerFold) {
    const auto model = fit_pca(train_fm);
    train_fm = project(model, train_fm, pca.components);
    test_fm = project(model, test_fm, pca.components);
  }
  const auto norm = zscore_normalize(train_fm);
  return {norm.matrix, apply_zscore(test_fm, norm.mean, norm.sd)};
}

}  // namespace

EvalResult cross_validate(const FoldTrainer& trainer, const FeatureMatrix& fm,
                          const FoldPlan& plan, PcaMode pca, unsigned threads) {
  fm.check();
  if (plan.assignments.size() != fm.rows()) {
    fail(ErrorCode::InvalidArgument, "fold plan does not match matrix rows");
  }
  if (pca.scope != PcaScope::None && pca.components == 0) {
    fail(ErrorCode::InvalidArgument, "PCA mode needs a component count");
  }

  const FeatureMatrix* source = &fm;
  FeatureMatrix projected;
  if (pca.scope == PcaScope::Global) {
    const auto model = fit_pca(fm);
    projected = project(model, fm, pca.components);
    source = &projected;
  }

  std::vector<Prediction> rows(fm.rows());
  parallel_for(plan.k, threads, [&](std::size_t fold) {
    const auto test = plan.test_rows(fold);
    if (test.empty()) return;
    const auto train_rows = plan.train_rows(fold);
    try {
      const auto data = prepare_fold(*source, train_rows, test, pca);
      const auto scorer = trainer(data.train);
      std::vector<double> x(data.test.cols());
      for (std::size_t i = 0; i < test.size(); ++i) {
        for (std::size_t j = 0; j < x.size(); ++j) {
          x[j] = data.test.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        Prediction p;
        p.truth = fm.labels[test[i]];
        p.score = scorer.score(x);
        p.predicted = p.score > scorer.threshold ? 1 : 0;
        p.fold = fold;
        rows[test[i]] = p;
      }
    } catch (const Error& e) {
      throw Error(e.code(), "fold " + std::to_string(fold) + ": " + e.detail());
    }
  });
  return summarize(std::move(rows));
}

EvalResult cross_validate(const TrainerSpec& spec, const FeatureMatrix& fm, const FoldPlan& plan,
                          PcaMode pca, unsigned threads) {
  return cross_validate(make_fold_trainer(spec), fm, plan, pca, threads);
}

Margins compute_margins(std::span<const GridCell> cells) {
  Margins m;
  std::vector<std::pair<double, int>> by_clf, by_feat;
  const auto add = [](std::vector<MarginEntry>& names, std::vector<std::pair<double, int>>& acc,
                      const std::string& key, double v) {
    auto it = std::find_if(names.begin(), names.end(), [&](const MarginEntry& e) { return e.name == key; });
    if (it == names.end()) {
      names.push_back({key, 0.0});
      acc.emplace_back(0.0, 0);
      it = names.end() - 1;
    }
    auto& slot = acc[static_cast<std::size_t>(it - names.begin())];
    slot.first += v;
    slot.second += 1;
  };
  for (const auto& c : cells) {
    add(m.per_classifier, by_clf, c.classifier, c.result.accuracy_pct);
    add(m.per_feature_set, by_feat, c.features, c.result.accuracy_pct);
  }
  for (std::size_t i = 0; i < by_clf.size(); ++i) {
    m.per_classifier[i].accuracy_pct = by_clf[i].first / by_clf[i].second;
  }
  for (std::size_t i = 0; i < by_feat.size(); ++i) {
    m.per_feature_set[i].accuracy_pct = by_feat[i].first / by_feat[i].second;
  }
  return m;
}

}  // namespace ncx
