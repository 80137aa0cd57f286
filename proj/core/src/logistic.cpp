#include <algorithm>
#include <cmath>

#include "ncx/error.hpp"
#include "trainers.hpp"

namespace ncx::detail {
namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct Objective {
  const Eigen::MatrixXd& x;
  std::span<const int> y;
  double ridge;

  // Penalized negative log-likelihood; theta = (w, b).
  double value(const Eigen::VectorXd& theta) const {
    const Eigen::Index k = x.cols();
    const Eigen::VectorXd z = (x * theta.head(k)).array() + theta(k);
    double f = 0.5 * ridge * theta.head(k).squaredNorm();
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      // -log p for y=1 is softplus(-z); -log(1-p) for y=0 is softplus(z).
      f += y[static_cast<std::size_t>(i)] == 1 ? softplus(-z(i)) : softplus(z(i));
    }
    return f;
  }
};

}  // namespace

LogisticModel fit_logistic(const Eigen::MatrixXd& x, std::span<const int> y,
                           const LogisticParams& p) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  Objective obj{x, y, p.ridge};
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(k + 1);
  double f = obj.value(theta);

  LogisticModel m;
  for (int it = 0;; ++it) {
    const Eigen::VectorXd z = (x * theta.head(k)).array() + theta(k);
    Eigen::VectorXd residual(n);  // p - y
    Eigen::VectorXd curvature(n);  // p (1 - p)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pos = sigmoid(z(i));
      const double neg = sigmoid(-z(i));
      residual(i) = y[static_cast<std::size_t>(i)] == 1 ? -neg : pos;
      curvature(i) = pos * neg;
    }
    Eigen::VectorXd grad(k + 1);
    grad.head(k) = x.transpose() * residual + p.ridge * theta.head(k);
    grad(k) = residual.sum();
    const double gnorm = grad.cwiseAbs().maxCoeff();
    m.iterations = it;
    m.gradient_norm = gnorm;
    if (gnorm < p.gradient_tolerance) break;
    if (it >= p.max_iterations) {
      fail(ErrorCode::NonConvergence,
           "logistic regression gradient norm " + std::to_string(gnorm) + " after " +
               std::to_string(it) + " Newton steps");
    }

    Eigen::MatrixXd hess(k + 1, k + 1);
    const Eigen::MatrixXd wx = x.array().colwise() * curvature.array();
    hess.topLeftCorner(k, k) = x.transpose() * wx;
    hess.topLeftCorner(k, k).diagonal().array() += p.ridge;
    hess.block(0, k, k, 1) = wx.colwise().sum().transpose();
    hess.block(k, 0, 1, k) = wx.colwise().sum();
    hess(k, k) = curvature.sum();

    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    Eigen::VectorXd step = -ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite() || step.dot(grad) >= 0.0) {
      step = -grad;  // fall back to steepest descent
    }

    // Backtracking (Armijo) line search.
    double t = 1.0;
    const double slope = step.dot(grad);
    Eigen::VectorXd next;
    double f_next = f;
    for (int ls = 0; ls < 60; ++ls) {
      next = theta + t * step;
      f_next = obj.value(next);
      if (f_next <= f + 1e-4 * t * slope) break;
      // Near the optimum the decrease of a full Newton step is below the
      // rounding of f itself.
      if (ls == 0 && f_next <= f + 1e-13 * std::max(1.0, std::abs(f))) break;
      t *= 0.5;
    }
    if (!(f_next <= f + 1e-13 * std::max(1.0, std::abs(f)))) {
      // Line search exhausted without descent.
      fail(ErrorCode::NonConvergence,
           "logistic regression line search failed with gradient norm " + std::to_string(gnorm));
    }
    theta = std::move(next);
    f = f_next;
  }
  m.weights = theta.head(k);
  m.bias = theta(k);
  return m;
}

double score_logistic(const LogisticModel& m, std::span<const double> x) {
  double z = m.bias;
  for (std::size_t j = 0; j < x.size(); ++j) z += m.weights(static_cast<Eigen::Index>(j)) * x[j];
  return sigmoid(z);
}

}  // namespace ncx::detail
