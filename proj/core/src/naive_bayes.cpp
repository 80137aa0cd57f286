#include <cmath>
#include <numbers>

#include "trainers.hpp"

namespace ncx::detail {

NaiveBayesModel fit_naive_bayes(const Eigen::MatrixXd& x, std::span<const int> y,
                                const NaiveBayesParams& p) {
  const Eigen::Index k = x.cols();
  NaiveBayesModel m;
  m.mean = Eigen::MatrixXd::Zero(2, k);
  m.variance = Eigen::MatrixXd::Zero(2, k);
  double n[2] = {0, 0};
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int c = y[static_cast<std::size_t>(i)];
    n[c] += 1.0;
    m.mean.row(c) += x.row(i);
  }
  for (int c = 0; c < 2; ++c) m.mean.row(c) /= n[c];
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int c = y[static_cast<std::size_t>(i)];
    m.variance.row(c) += (x.row(i) - m.mean.row(c)).array().square().matrix();
  }
  for (int c = 0; c < 2; ++c) {
    m.variance.row(c) /= n[c];
    m.variance.row(c) = m.variance.row(c).cwiseMax(p.variance_floor);
    m.log_prior[c] = std::log(n[c] / (n[0] + n[1]));
  }
  return m;
}

double score_naive_bayes(const NaiveBayesModel& m, std::span<const double> x) {
  double joint[2];
  for (int c = 0; c < 2; ++c) {
    double s = m.log_prior[c];
    for (std::size_t j = 0; j < x.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double var = m.variance(c, jj);
      const double d = x[j] - m.mean(c, jj);
      s += -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * d * d / var;
    }
    joint[c] = s;
  }
  // P(1|x) = 1 / (1 + exp(l0 - l1)), evaluated on the side that cannot overflow.
  const double diff = joint[0] - joint[1];
  if (diff >= 0.0) {
    const double e = std::exp(-diff);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(diff));
}

}  // namespace ncx::detail
