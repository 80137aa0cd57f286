#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numeric>
#include <random>

#include "ncx/error.hpp"
#include "ncx/parallel.hpp"
#include "trainers.hpp"

namespace ncx {

const TreeNode& Tree::leaf_for(std::span<const double> x) const {
  const TreeNode* node = &nodes.front();
  while (!node->leaf()) {
    node = &nodes[static_cast<std::size_t>(
        x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right)];
  }
  return *node;
}

std::size_t Tree::leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.leaf(); }));
}

int Tree::vote(std::span<const double> x) const {
  const auto& leaf = leaf_for(x);
  return leaf.count[1] > leaf.count[0] ? 1 : 0;
}

namespace {

double entropy(double n0, double n1) {
  const double n = n0 + n1;
  double h = 0.0;
  if (n0 > 0) h -= n0 / n * std::log2(n0 / n);
  if (n1 > 0) h -= n1 / n * std::log2(n1 / n);
  return h;
}

struct Split {
  bool valid = false;
  double gain = 0.0;
  double gain_ratio = 0.0;
  double threshold = 0.0;
};

// Best threshold on one feature by information gain; equal gains keep the
// lowest threshold.
Split best_split(const Eigen::MatrixXd& x, std::span<const int> y, std::vector<std::size_t>& rows,
                 Eigen::Index feature, double min_child) {
  std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    return x(static_cast<Eigen::Index>(a), feature) < x(static_cast<Eigen::Index>(b), feature);
  });
  double total[2] = {0, 0};
  for (auto r : rows) total[y[r]] += 1.0;
  const double n = total[0] + total[1];
  const double parent = entropy(total[0], total[1]);

  Split best;
  double left[2] = {0, 0};
  for (std::size_t p = 0; p + 1 < rows.size(); ++p) {
    left[y[rows[p]]] += 1.0;
    const double lo = x(static_cast<Eigen::Index>(rows[p]), feature);
    const double hi = x(static_cast<Eigen::Index>(rows[p + 1]), feature);
    if (!(lo < hi)) continue;
    const double nl = left[0] + left[1];
    const double nr = n - nl;
    if (nl < min_child || nr < min_child) continue;
    const double gain = parent - nl / n * entropy(left[0], left[1]) -
                        nr / n * entropy(total[0] - left[0], total[1] - left[1]);
    if (!best.valid || gain > best.gain) {
      best.valid = true;
      best.gain = gain;
      double mid = lo + (hi - lo) / 2.0;
      if (!(mid < hi)) mid = lo;
      best.threshold = mid;
      const double split_info = entropy(nl, nr);
      best.gain_ratio = split_info > 0.0 ? gain / split_info : 0.0;
    }
  }
  return best;
}

constexpr double kMinGain = 1e-12;

class Builder {
 public:
  Builder(const Eigen::MatrixXd& x, std::span<const int> y) : x_(x), y_(y) {}

  // C4.5: gain ratio among features whose gain reaches the average gain.
  int grow_c45(std::vector<std::size_t> rows, double min_per_node) {
    const int id = add_node(rows);
    auto& counts = tree.nodes[static_cast<std::size_t>(id)].count;
    if (counts[0] == 0 || counts[1] == 0 || static_cast<double>(rows.size()) < 2 * min_per_node) {
      return id;
    }
    std::vector<Split> splits(static_cast<std::size_t>(x_.cols()));
    double gain_sum = 0.0;
    int eligible = 0;
    for (Eigen::Index f = 0; f < x_.cols(); ++f) {
      splits[static_cast<std::size_t>(f)] = best_split(x_, y_, rows, f, min_per_node);
      const auto& s = splits[static_cast<std::size_t>(f)];
      if (s.valid && s.gain > kMinGain) {
        gain_sum += s.gain;
        ++eligible;
      }
    }
    if (eligible == 0) return id;
    const double avg = gain_sum / eligible;
    Eigen::Index chosen = -1;
    for (Eigen::Index f = 0; f < x_.cols(); ++f) {
      const auto& s = splits[static_cast<std::size_t>(f)];
      if (!s.valid || s.gain <= kMinGain || s.gain < avg - 1e-12) continue;
      if (chosen < 0 || s.gain_ratio > splits[static_cast<std::size_t>(chosen)].gain_ratio) chosen = f;
    }
    if (chosen < 0) return id;
    return split_node(id, rows, chosen, splits[static_cast<std::size_t>(chosen)].threshold,
                      [&](std::vector<std::size_t> part) { return grow_c45(std::move(part), min_per_node); });
  }

  // Random tree: best information gain over a random feature subset, looking
  // past the subset only until some positive gain is found.
  int grow_random(std::vector<std::size_t> rows, int subset, std::mt19937_64& rng) {
    const int id = add_node(rows);
    auto& counts = tree.nodes[static_cast<std::size_t>(id)].count;
    if (counts[0] == 0 || counts[1] == 0 || rows.size() < 2) return id;

    std::vector<Eigen::Index> features(static_cast<std::size_t>(x_.cols()));
    std::iota(features.begin(), features.end(), Eigen::Index{0});
    std::shuffle(features.begin(), features.end(), rng);

    Eigen::Index chosen = -1;
    Split best;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (static_cast<int>(i) >= subset && chosen >= 0) break;
      const auto f = features[i];
      const auto s = best_split(x_, y_, rows, f, 1.0);
      if (!s.valid || s.gain <= kMinGain) continue;
      if (chosen < 0 || s.gain > best.gain || (s.gain == best.gain && f < chosen)) {
        chosen = f;
        best = s;
      }
    }
    if (chosen < 0) return id;
    return split_node(id, rows, chosen, best.threshold,
                      [&](std::vector<std::size_t> part) { return grow_random(std::move(part), subset, rng); });
  }

  Tree tree;

 private:
  int add_node(const std::vector<std::size_t>& rows) {
    TreeNode node;
    for (auto r : rows) node.count[y_[r]] += 1.0;
    tree.nodes.push_back(node);
    return static_cast<int>(tree.nodes.size() - 1);
  }

  template <class Grow>
  int split_node(int id, const std::vector<std::size_t>& rows, Eigen::Index feature,
                 double threshold, Grow&& grow) {
    std::vector<std::size_t> left, right;
    for (auto r : rows) {
      (x_(static_cast<Eigen::Index>(r), feature) <= threshold ? left : right).push_back(r);
    }
    const int l = grow(std::move(left));
    const int r = grow(std::move(right));
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<int>(feature);
    node.threshold = threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  const Eigen::MatrixXd& x_;
  std::span<const int> y_;
};

// Upper confidence bound on extra errors at a leaf (normal approximation to
// the binomial, as in C4.5 / J48).
double added_errors(double n, double e, double cf) {
  if (e < 1.0) {
    const double base = n * (1.0 - std::pow(cf, 1.0 / n));
    if (e == 0.0) return base;
    return base + e * (added_errors(n, 1.0, cf) - base);
  }
  if (e + 0.5 >= n) return std::max(n - e, 0.0);
  const double z = boost::math::quantile(boost::math::normal(), 1.0 - cf);
  const double f = (e + 0.5) / n;
  const double r =
      (f + z * z / (2 * n) + z * std::sqrt(f / n - f * f / n + z * z / (4 * n * n))) /
      (1 + z * z / n);
  return r * n - e;
}

double leaf_errors(const TreeNode& node) { return node.count[1] > node.count[0] ? node.count[0] : node.count[1]; }

double estimated_errors(const TreeNode& node, double cf) {
  const double n = node.count[0] + node.count[1];
  const double e = leaf_errors(node);
  return e + added_errors(n, e, cf);
}

double subtree_errors(const Tree& t, int id, double cf) {
  const auto& node = t.nodes[static_cast<std::size_t>(id)];
  if (node.leaf()) return estimated_errors(node, cf);
  return subtree_errors(t, node.left, cf) + subtree_errors(t, node.right, cf);
}

void prune(Tree& t, int id, double cf) {
  auto& node = t.nodes[static_cast<std::size_t>(id)];
  if (node.leaf()) return;
  prune(t, node.left, cf);
  prune(t, node.right, cf);
  const double as_leaf = estimated_errors(t.nodes[static_cast<std::size_t>(id)], cf);
  const double as_tree = subtree_errors(t, id, cf);
  if (as_leaf <= as_tree + 0.1) {
    auto& n = t.nodes[static_cast<std::size_t>(id)];
    n.feature = -1;
    n.left = n.right = -1;
  }
}

// Drops nodes no longer reachable after pruning.
Tree compact(const Tree& t) {
  Tree out;
  std::vector<std::pair<int, int>> stack;  // (old id, new id)
  out.nodes.push_back(t.nodes.front());
  stack.emplace_back(0, 0);
  while (!stack.empty()) {
    auto [old_id, new_id] = stack.back();
    stack.pop_back();
    const auto& src = t.nodes[static_cast<std::size_t>(old_id)];
    if (src.leaf()) continue;
    out.nodes.push_back(t.nodes[static_cast<std::size_t>(src.left)]);
    const int l = static_cast<int>(out.nodes.size() - 1);
    out.nodes.push_back(t.nodes[static_cast<std::size_t>(src.right)]);
    const int r = static_cast<int>(out.nodes.size() - 1);
    out.nodes[static_cast<std::size_t>(new_id)].left = l;
    out.nodes[static_cast<std::size_t>(new_id)].right = r;
    stack.emplace_back(src.right, r);
    stack.emplace_back(src.left, l);
  }
  return out;
}

}  // namespace

namespace detail {

DecisionTreeModel fit_decision_tree(const Eigen::MatrixXd& x, std::span<const int> y,
                                    const TreeParams& p) {
  if (!(p.confidence > 0.0 && p.confidence <= 0.5)) {
    fail(ErrorCode::InvalidArgument, "pruning confidence must be in (0, 0.5]");
  }
  Builder b(x, y);
  std::vector<std::size_t> rows(static_cast<std::size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  b.grow_c45(std::move(rows), static_cast<double>(p.min_per_node));
  DecisionTreeModel m;
  m.tree = std::move(b.tree);
  if (p.prune) {
    prune(m.tree, 0, p.confidence);
    m.tree = compact(m.tree);
  }
  return m;
}

double score_decision_tree(const DecisionTreeModel& m, std::span<const double> x) {
  const auto& leaf = m.tree.leaf_for(x);
  return (leaf.count[1] + 1.0) / (leaf.count[0] + leaf.count[1] + 2.0);
}

ForestModel fit_forest(const Eigen::MatrixXd& x, std::span<const int> y, const ForestParams& p,
                       std::uint64_t seed) {
  if (p.trees < 1) fail(ErrorCode::InvalidArgument, "forest needs at least one tree");
  ForestModel m;
  const auto k = static_cast<std::size_t>(x.cols());
  m.features_per_split = p.features_per_split > 0
                             ? std::min(p.features_per_split, static_cast<int>(k))
                             : forest_split_features(k);
  m.trees.resize(static_cast<std::size_t>(p.trees));
  const auto n = static_cast<std::size_t>(x.rows());
  for (std::size_t t = 0; t < m.trees.size(); ++t) {
    std::mt19937_64 rng(mix_seed(seed, t));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = pick(rng);
    std::sort(rows.begin(), rows.end());
    Builder b(x, y);
    b.grow_random(std::move(rows), m.features_per_split, rng);
    m.trees[t] = std::move(b.tree);
  }
  return m;
}

double score_forest(const ForestModel& m, std::span<const double> x) {
  int votes = 0;
  for (const auto& t : m.trees) votes += t.vote(x);
  return static_cast<double>(votes) / static_cast<double>(m.trees.size());
}

}  // namespace detail
}  // namespace ncx
