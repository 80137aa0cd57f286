#include <algorithm>
#include <cmath>
#include <limits>

#include "ncx/error.hpp"
#include "trainers.hpp"

namespace ncx {
namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd gram(const Eigen::MatrixXd& x, SvmKernel kernel) {
  Eigen::MatrixXd k = x * x.transpose();
  if (kernel == SvmKernel::Poly2) k = k.array().square().matrix();
  return k;
}

}  // namespace

double svm_dual_objective(const Eigen::MatrixXd& x, std::span<const int> y, SvmKernel kernel,
                          const Eigen::VectorXd& alpha) {
  const auto k = gram(x, kernel);
  Eigen::VectorXd ay(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) ay(i) = alpha(i) * y[static_cast<std::size_t>(i)];
  return alpha.sum() - 0.5 * ay.dot(k * ay);
}

// Pairwise SMO with second-order working set selection (Fan, Chen & Lin).
// Minimizes f(a) = 1/2 a'Qa - e'a with Q_ij = y_i y_j K_ij.
SvmSolution solve_svm_dual(const Eigen::MatrixXd& x, std::span<const int> y, SvmKernel kernel,
                           const SvmParams& params) {
  const Eigen::Index n = x.rows();
  if (static_cast<std::size_t>(n) != y.size()) fail(ErrorCode::InvalidArgument, "label count");
  for (int v : y) {
    if (v != 1 && v != -1) fail(ErrorCode::InvalidArgument, "SVM labels must be -1/+1");
  }
  if (!(params.c > 0.0)) fail(ErrorCode::InvalidArgument, "C must be positive");

  const auto kmat = gram(x, kernel);
  const double c = params.c;
  const auto yy = [&](Eigen::Index i) { return static_cast<double>(y[static_cast<std::size_t>(i)]); };
  const auto q = [&](Eigen::Index i, Eigen::Index j) { return yy(i) * yy(j) * kmat(i, j); };

  SvmSolution sol;
  sol.alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);
  auto& alpha = sol.alpha;
  const auto upper = [&](Eigen::Index t) { return alpha(t) >= c; };
  const auto lower = [&](Eigen::Index t) { return alpha(t) <= 0.0; };

  const long max_iter = params.max_passes * std::max<long>(1, static_cast<long>(n));
  sol.converged = false;
  for (long iter = 0;; ++iter) {
    double gmax = -kInf;
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (yy(t) > 0 ? !upper(t) : !lower(t)) {
        const double v = -yy(t) * grad(t);
        if (v > gmax) {
          gmax = v;
          i = t;
        }
      }
    }
    double gmax2 = -kInf;
    Eigen::Index j = -1;
    double best = kInf;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (yy(t) > 0 ? lower(t) : upper(t)) continue;
      const double v = yy(t) * grad(t);
      gmax2 = std::max(gmax2, v);
      if (i < 0) continue;
      const double diff = gmax + v;
      if (diff > 0.0) {
        double quad = kmat(i, i) + kmat(t, t) - 2.0 * kmat(i, t);
        if (quad <= 0.0) quad = kTau;
        const double obj = -(diff * diff) / quad;
        if (obj < best) {
          best = obj;
          j = t;
        }
      }
    }
    sol.kkt_gap = gmax + gmax2;
    sol.iterations = iter;
    if (i < 0 || j < 0 || sol.kkt_gap < params.tolerance) {
      sol.converged = true;
      break;
    }
    if (iter >= max_iter) break;

    const double old_i = alpha(i), old_j = alpha(j);
    if (yy(i) != yy(j)) {
      double quad = kmat(i, i) + kmat(j, j) + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0.0) {
        if (alpha(j) < 0.0) {
          alpha(j) = 0.0;
          alpha(i) = diff;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = -diff;
      }
      if (diff > 0.0) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = c - diff;
        }
      } else if (alpha(j) > c) {
        alpha(j) = c;
        alpha(i) = c + diff;
      }
    } else {
      double quad = kmat(i, i) + kmat(j, j) - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > c) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = sum - c;
        }
      } else if (alpha(j) < 0.0) {
        alpha(j) = 0.0;
        alpha(i) = sum;
      }
      if (sum > c) {
        if (alpha(j) > c) {
          alpha(j) = c;
          alpha(i) = sum - c;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = sum;
      }
    }
    const double di = alpha(i) - old_i, dj = alpha(j) - old_j;
    for (Eigen::Index t = 0; t < n; ++t) grad(t) += q(i, t) * di + q(j, t) * dj;
  }

  // Bias from free support vectors, else midpoint of the feasible interval.
  double ub = kInf, lb = -kInf, sum_free = 0.0;
  long n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = yy(t) * grad(t);
    if (upper(t)) {
      if (yy(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (yy(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
  sol.bias = -rho;
  Eigen::VectorXd ay(n);
  for (Eigen::Index t = 0; t < n; ++t) ay(t) = alpha(t) * yy(t);
  sol.dual_objective = alpha.sum() - 0.5 * ay.dot(kmat * ay);
  return sol;
}

namespace detail {

SvmModel fit_svm(const Eigen::MatrixXd& x, std::span<const int> y, SvmKernel kernel,
                 const SvmParams& p) {
  std::vector<int> signs(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) signs[i] = y[i] == 1 ? 1 : -1;

  SvmModel m;
  m.kernel = kernel;
  Eigen::MatrixXd xs = x;
  if (p.normalize) {
    m.offset = x.colwise().minCoeff().transpose();
    const Eigen::VectorXd range = x.colwise().maxCoeff().transpose() - m.offset;
    m.scale = range.unaryExpr([](double r) { return r > 0.0 ? 1.0 / r : 0.0; });
    xs = (x.rowwise() - m.offset.transpose()).array().rowwise() * m.scale.transpose().array();
  }
  const auto sol = solve_svm_dual(xs, signs, kernel, p);

  m.bias = sol.bias;
  m.converged = sol.converged;
  m.iterations = sol.iterations;
  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < sol.alpha.size(); ++i) {
    if (sol.alpha(i) > 0.0) sv.push_back(i);
  }
  m.support.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
  m.coefficients.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t s = 0; s < sv.size(); ++s) {
    const auto row = static_cast<Eigen::Index>(s);
    m.support.row(row) = xs.row(sv[s]);
    m.coefficients(row) = sol.alpha(sv[s]) * signs[static_cast<std::size_t>(sv[s])];
  }
  return m;
}

double score_svm(const SvmModel& m, std::span<const double> x) {
  double s = m.bias;
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  if (m.scale.size() == v.size()) v = (v - m.offset).cwiseProduct(m.scale);
  for (Eigen::Index i = 0; i < m.support.rows(); ++i) {
    double dot = m.support.row(i).dot(v);
    if (m.kernel == SvmKernel::Poly2) dot *= dot;
    s += m.coefficients(i) * dot;
  }
  return s;
}

}  // namespace detail
}  // namespace ncx
