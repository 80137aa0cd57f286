#pragma once

// Straightforward reference implementations used as test oracles. They favour
// obviousness over speed and share no code with the library.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

// Higuchi curve length, 1-based indices as in the textbook formula.
inline double curve_length(const std::vector<double>& x, int k, int m) {
  const int n = static_cast<int>(x.size());
  const int count = (n - m) / k;
  double sum = 0.0;
  for (int i = 1; i <= count; ++i) sum += std::abs(x[m + i * k - 1] - x[m + (i - 1) * k - 1]);
  return sum * (n - 1) / (static_cast<double>(count) * k) / k;
}

inline double higuchi_fd(const std::vector<double>& x, int k_max) {
  std::vector<double> lx, ly;
  for (int k = 1; k <= k_max; ++k) {
    double mean = 0.0;
    for (int m = 1; m <= k; ++m) mean += curve_length(x, k, m);
    mean /= k;
    lx.push_back(std::log(1.0 / k));
    ly.push_back(std::log(mean));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(ly.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

inline double population_sd(const std::vector<double>& x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

struct Counts {
  std::uint64_t a = 0;
  std::uint64_t b = 0;
};

// Ordered pairs (i, j), i != j, over template starts 0..N-m-1.
inline Counts sampen_counts(const std::vector<double>& x, int m, double r) {
  const int n = static_cast<int>(x.size());
  Counts c;
  for (int i = 0; i < n - m; ++i) {
    for (int j = 0; j < n - m; ++j) {
      if (i == j) continue;
      bool match = true;
      for (int t = 0; t < m && match; ++t) match = std::abs(x[i + t] - x[j + t]) <= r;
      if (!match) continue;
      ++c.b;
      if (std::abs(x[i + m] - x[j + m]) <= r) ++c.a;
    }
  }
  return c;
}

// Iteratively reweighted least squares for ridge-penalized logistic
// regression; the intercept (last coefficient) is not penalized.
inline Eigen::VectorXd irls_logistic(const Eigen::MatrixXd& x, const std::vector<int>& y, double ridge,
                                     int iterations = 100) {
  const Eigen::Index n = x.rows(), k = x.cols();
  Eigen::MatrixXd a(n, k + 1);
  a.leftCols(k) = x;
  a.col(k).setOnes();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k + 1);
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd eta = a * beta;
    Eigen::VectorXd w(n), z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = 1.0 / (1.0 + std::exp(-eta(i)));
      w(i) = std::max(p * (1.0 - p), 1e-300);
      z(i) = eta(i) + (y[static_cast<std::size_t>(i)] - p) / w(i);
    }
    Eigen::MatrixXd lhs = a.transpose() * w.asDiagonal() * a;
    for (Eigen::Index j = 0; j < k; ++j) lhs(j, j) += ridge;
    const Eigen::VectorXd rhs = a.transpose() * w.asDiagonal() * z;
    beta = lhs.colPivHouseholderQr().solve(rhs);
  }
  return beta;
}

// Exact Euclidean projection onto {0 <= a <= c, y.a = 0}, by bisection on the
// multiplier of the equality constraint.
inline Eigen::VectorXd project_dual(const Eigen::VectorXd& v, const std::vector<int>& y, double c) {
  const auto at = [&](double nu) {
    Eigen::VectorXd a(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      a(i) = std::clamp(v(i) - nu * y[static_cast<std::size_t>(i)], 0.0, c);
    }
    return a;
  };
  const auto residual = [&](double nu) {
    const auto a = at(nu);
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) s += y[static_cast<std::size_t>(i)] * a(i);
    return s;
  };
  double lo = -1.0, hi = 1.0;
  while (residual(lo) < 0.0) lo *= 2.0;
  while (residual(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (residual(mid) > 0.0 ? lo : hi) = mid;
  }
  return at(0.5 * (lo + hi));
}

// Maximum of the soft-margin SVM dual by accelerated projected gradient.
inline double svm_dual_max(const Eigen::MatrixXd& kernel, const std::vector<int>& y, double c,
                           int iterations = 200000) {
  const Eigen::Index n = kernel.rows();
  Eigen::MatrixXd q(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) q(i, j) = y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)] * kernel(i, j);
  }
  const double lipschitz = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q).eigenvalues().maxCoeff();
  const double step = 1.0 / std::max(lipschitz, 1e-12);
  const auto objective = [&](const Eigen::VectorXd& a) { return a.sum() - 0.5 * a.dot(q * a); };
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n), prev = a, z = a;
  double t = 1.0;
  double best = objective(a);
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd grad = Eigen::VectorXd::Ones(n) - q * z;
    prev = a;
    a = project_dual(z + step * grad, y, c);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = a + ((t - 1.0) / t_next) * (a - prev);
    t = t_next;
    best = std::max(best, objective(a));
  }
  return best;
}

inline double auc_pairs(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

inline Eigen::MatrixXd covariance_two_pass(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows(), k = x.cols();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < n; ++i) mean += x.row(i).transpose();
  mean /= static_cast<double>(n);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) s += (x(i, a) - mean(a)) * (x(i, b) - mean(b));
      cov(a, b) = s / static_cast<double>(n - 1);
    }
  }
  return cov;
}

inline Eigen::MatrixXd correlation_two_pass(const Eigen::MatrixXd& x) {
  const auto cov = covariance_two_pass(x);
  Eigen::MatrixXd r(cov.rows(), cov.cols());
  for (Eigen::Index a = 0; a < cov.rows(); ++a) {
    for (Eigen::Index b = 0; b < cov.cols(); ++b) r(a, b) = cov(a, b) / std::sqrt(cov(a, a) * cov(b, b));
  }
  return r;
}

}  // namespace oracle
