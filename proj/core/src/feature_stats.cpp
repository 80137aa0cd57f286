#include "ncx/feature_stats.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>

#include "ncx/error.hpp"

namespace ncx {
namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

}  // namespace

Normalized zscore_normalize(const FeatureMatrix& fm) {
  fm.check();
  if (fm.rows() < 2) fail(ErrorCode::InvalidArgument, "z-scoring needs at least 2 rows");
  Normalized out;
  const double n = static_cast<double>(fm.rows());
  out.mean = fm.values.colwise().mean().transpose();
  out.sd.resize(fm.values.cols());
  for (Eigen::Index j = 0; j < fm.values.cols(); ++j) {
    const double ss = (fm.values.col(j).array() - out.mean(j)).square().sum();
    out.sd(j) = std::sqrt(ss / (n - 1.0));
    if (!(out.sd(j) > 0.0)) {
      fail(ErrorCode::ZeroVarianceFeature, fm.feature_names[static_cast<std::size_t>(j)]);
    }
  }
  out.matrix = apply_zscore(fm, out.mean, out.sd);
  return out;
}

FeatureMatrix apply_zscore(const FeatureMatrix& fm, const Eigen::VectorXd& mean,
                           const Eigen::VectorXd& sd) {
  FeatureMatrix out = fm;
  out.values = ((fm.values.rowwise() - mean.transpose()).array().rowwise() /
                sd.transpose().array())
                   .matrix();
  return out;
}

FeatureMatrix denormalize(const FeatureMatrix& z, const Eigen::VectorXd& mean,
                          const Eigen::VectorXd& sd) {
  FeatureMatrix out = z;
  out.values = ((z.values.array().rowwise() * sd.transpose().array()).rowwise() +
                mean.transpose().array())
                   .matrix();
  return out;
}

double student_t_two_sided_p(double t, double dof) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

CorrelationMatrix pearson_correlation(const FeatureMatrix& fm) {
  fm.check();
  if (fm.rows() < 3) fail(ErrorCode::InvalidArgument, "correlation needs at least 3 rows");
  const auto norm = zscore_normalize(fm);
  const Eigen::MatrixXd c = fm.values.rowwise() - norm.mean.transpose();
  const double n = static_cast<double>(fm.rows());
  const Eigen::Index d = c.cols();
  Eigen::VectorXd ss(d);
  for (Eigen::Index j = 0; j < d; ++j) ss(j) = c.col(j).dot(c.col(j));

  CorrelationMatrix out;
  out.names = fm.feature_names;
  out.r.resize(d, d);
  out.p_value.resize(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    out.r(a, a) = 1.0;
    out.p_value(a, a) = 0.0;
    for (Eigen::Index b = a + 1; b < d; ++b) {
      double r = c.col(a).dot(c.col(b)) / std::sqrt(ss(a) * ss(b));
      r = std::clamp(r, -1.0, 1.0);
      out.r(a, b) = out.r(b, a) = r;
      const double denom = 1.0 - r * r;
      const double t = denom > 0.0 ? r * std::sqrt((n - 2.0) / denom)
                                   : std::copysign(std::numeric_limits<double>::infinity(), r);
      out.p_value(a, b) = out.p_value(b, a) = student_t_two_sided_p(t, n - 2.0);
    }
  }
  return out;
}

void canonicalize_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    const double peak = vectors.col(j).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
      // First entry within rounding of the peak decides, so near-ties resolve
      // the same way regardless of which solver produced the vector.
      if (std::abs(vectors(i, j)) >= peak - 1e-12) {
        if (vectors(i, j) < 0.0) vectors.col(j) *= -1.0;
        break;
      }
    }
  }
}

SymmetricEigen power_iteration_eigen(const Eigen::MatrixXd& a, double tol, long max_iterations) {
  const Eigen::Index n = a.rows();
  SymmetricEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  Eigen::MatrixXd work = a;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff() * static_cast<double>(n));

  for (Eigen::Index k = 0; k < n; ++k) {
    // Deterministic start vector with components in every direction.
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 0.1 * static_cast<double>((i * 7 + k * 3) % 11);
    for (Eigen::Index j = 0; j < k; ++j) v -= out.vectors.col(j).dot(v) * out.vectors.col(j);
    v.normalize();

    double lambda = 0.0;
    bool converged = false;
    for (long it = 0; it < max_iterations; ++it) {
      Eigen::VectorXd w = work * v;
      // Re-orthogonalize against found vectors to stop round-off drift back
      // into the deflated subspace.
      for (Eigen::Index j = 0; j < k; ++j) w -= out.vectors.col(j).dot(w) * out.vectors.col(j);
      const double norm = w.norm();
      if (norm <= 1e-15 * scale) {
        lambda = 0.0;
        converged = true;
        break;
      }
      lambda = v.dot(w);
      const double residual = (w - lambda * v).norm();
      v = w / norm;
      if (residual <= tol * scale) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      fail(ErrorCode::NonConvergence, "power iteration stalled at component " + std::to_string(k));
    }
    lambda = v.dot(a * v);
    out.values(k) = lambda;
    out.vectors.col(k) = v;
    work -= lambda * v * v.transpose();
  }
  return out;
}

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& a, EigenMethod method) {
  SymmetricEigen out;
  if (method == EigenMethod::PowerIteration) {
    out = power_iteration_eigen(a);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) fail(ErrorCode::NonConvergence, "eigen solver failed");
    // Eigen returns ascending order.
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
  }
  // Stable descending order (power iteration can emit near-equal values
  // out of order).
  std::vector<Eigen::Index> order(static_cast<std::size_t>(out.values.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = idx(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index l, Eigen::Index r) { return out.values(l) > out.values(r); });
  SymmetricEigen sorted;
  sorted.values.resize(out.values.size());
  sorted.vectors.resize(out.vectors.rows(), out.vectors.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    sorted.values(idx(i)) = out.values(order[i]);
    sorted.vectors.col(idx(i)) = out.vectors.col(order[i]);
  }
  canonicalize_signs(sorted.vectors);
  return sorted;
}

PcaModel fit_pca(const FeatureMatrix& fm, EigenMethod method) {
  auto norm = zscore_normalize(fm);
  const auto& z = norm.matrix.values;
  const Eigen::MatrixXd cov = (z.transpose() * z) / static_cast<double>(z.rows() - 1);
  auto eig = symmetric_eigen(cov, method);

  PcaModel model;
  model.feature_names = fm.feature_names;
  model.mean = std::move(norm.mean);
  model.sd = std::move(norm.sd);
  model.eigenvalues = eig.values.cwiseMax(0.0);
  model.loads = std::move(eig.vectors);
  return model;
}

double explained_variance(const PcaModel& model, std::size_t m) {
  if (m < 1 || m > model.components()) {
    fail(ErrorCode::InvalidArgument, "component count " + std::to_string(m) + " outside 1.." +
                                         std::to_string(model.components()));
  }
  const double total = model.eigenvalues.sum();
  if (m == model.components()) return 100.0;
  return 100.0 * model.eigenvalues.head(idx(m)).sum() / total;
}

FeatureMatrix project(const PcaModel& model, const FeatureMatrix& fm, std::size_t m) {
  if (fm.feature_names != model.feature_names) {
    fail(ErrorCode::FeatureNameMismatch, "matrix columns do not match the PCA model");
  }
  if (m < 1 || m > model.components()) {
    fail(ErrorCode::InvalidArgument, "component count " + std::to_string(m) + " outside 1.." +
                                         std::to_string(model.components()));
  }
  FeatureMatrix out;
  out.subject_ids = fm.subject_ids;
  out.labels = fm.labels;
  for (std::size_t i = 1; i <= m; ++i) out.feature_names.push_back("PC" + std::to_string(i));
  out.values = apply_zscore(fm, model.mean, model.sd).values * model.loads.leftCols(idx(m));
  return out;
}

Eigen::MatrixXd inverse_project(const PcaModel& model, const Eigen::MatrixXd& scores) {
  return scores * model.loads.leftCols(scores.cols()).transpose();
}

std::vector<GroupStats> group_summary(const FeatureMatrix& fm) {
  fm.check();
  std::vector<std::size_t> rows[2];
  for (std::size_t i = 0; i < fm.rows(); ++i) rows[fm.labels[i]].push_back(i);
  if (rows[0].empty() || rows[1].empty()) {
    fail(ErrorCode::SingleClassInput, "group summary needs both classes");
  }
  if (rows[0].size() < 2 || rows[1].size() < 2) {
    fail(ErrorCode::InvalidArgument, "group summary needs at least 2 rows per class");
  }

  std::vector<GroupStats> out;
  for (std::size_t j = 0; j < fm.cols(); ++j) {
    GroupStats g;
    g.feature = fm.feature_names[j];
    for (int c = 0; c < 2; ++c) {
      const auto& r = rows[c];
      g.n[c] = r.size();
      double sum = 0.0;
      g.min[c] = std::numeric_limits<double>::infinity();
      g.max[c] = -std::numeric_limits<double>::infinity();
      for (auto i : r) {
        const double v = fm.values(idx(i), idx(j));
        sum += v;
        g.min[c] = std::min(g.min[c], v);
        g.max[c] = std::max(g.max[c], v);
      }
      g.mean[c] = sum / static_cast<double>(r.size());
      double ss = 0.0;
      for (auto i : r) ss += std::pow(fm.values(idx(i), idx(j)) - g.mean[c], 2);
      g.sd[c] = std::sqrt(ss / static_cast<double>(r.size() - 1));
    }
    const double v0 = g.sd[0] * g.sd[0] / static_cast<double>(g.n[0]);
    const double v1 = g.sd[1] * g.sd[1] / static_cast<double>(g.n[1]);
    const double diff = g.mean[1] - g.mean[0];
    const double se2 = v0 + v1;
    if (se2 > 0.0) {
      g.welch_t = diff / std::sqrt(se2);
      g.dof = se2 * se2 /
              (v0 * v0 / static_cast<double>(g.n[0] - 1) + v1 * v1 / static_cast<double>(g.n[1] - 1));
      g.p_value = student_t_two_sided_p(g.welch_t, g.dof);
    } else {
      g.dof = static_cast<double>(g.n[0] + g.n[1] - 2);
      g.welch_t = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
      g.p_value = diff == 0.0 ? 1.0 : 0.0;
    }
    out.push_back(g);
  }
  return out;
}

}  // namespace ncx
