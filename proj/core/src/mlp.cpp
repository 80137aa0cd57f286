#include <cmath>
#include <random>

#include "ncx/error.hpp"
#include "trainers.hpp"

namespace ncx {
namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Forward {
  Eigen::MatrixXd hidden;  // n x h activations
  Eigen::VectorXd output;  // n
};

Forward forward_batch(const MlpNetwork& net, const Eigen::MatrixXd& x) {
  const Eigen::Index k = x.cols();
  const Eigen::Index h = net.hidden.rows();
  Forward f;
  f.hidden = (x * net.hidden.leftCols(k).transpose()).rowwise() +
             net.hidden.col(k).transpose();
  f.hidden = f.hidden.unaryExpr([](double z) { return sigmoid(z); });
  f.output = (f.hidden * net.output.head(h)).array() + net.output(h);
  f.output = f.output.unaryExpr([](double z) { return sigmoid(z); });
  return f;
}

}  // namespace

double mlp_forward(const MlpNetwork& net, std::span<const double> x) {
  const auto k = static_cast<Eigen::Index>(x.size());
  const Eigen::Index h = net.hidden.rows();
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), k);
  double z = net.output(h);
  for (Eigen::Index u = 0; u < h; ++u) {
    z += net.output(u) * sigmoid(net.hidden.row(u).head(k).dot(v) + net.hidden(u, k));
  }
  return sigmoid(z);
}

double mlp_loss(const MlpNetwork& net, const Eigen::MatrixXd& x, std::span<const int> y) {
  const auto f = forward_batch(net, x);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double e = f.output(i) - y[static_cast<std::size_t>(i)];
    loss += 0.5 * e * e;
  }
  return loss;
}

MlpNetwork mlp_gradient(const MlpNetwork& net, const Eigen::MatrixXd& x, std::span<const int> y) {
  const Eigen::Index k = x.cols();
  const Eigen::Index h = net.hidden.rows();
  const auto f = forward_batch(net, x);

  Eigen::VectorXd delta_out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double o = f.output(i);
    delta_out(i) = (o - y[static_cast<std::size_t>(i)]) * o * (1.0 - o);
  }
  MlpNetwork g;
  g.output.resize(h + 1);
  g.output.head(h) = f.hidden.transpose() * delta_out;
  g.output(h) = delta_out.sum();

  // n x h hidden deltas.
  const Eigen::MatrixXd delta_hidden =
      ((delta_out * net.output.head(h).transpose()).array() * f.hidden.array() *
       (1.0 - f.hidden.array()))
          .matrix();
  g.hidden.resize(h, k + 1);
  g.hidden.leftCols(k) = delta_hidden.transpose() * x;
  g.hidden.col(k) = delta_hidden.colwise().sum().transpose();
  return g;
}

namespace detail {

MlpModel fit_mlp(const Eigen::MatrixXd& x, std::span<const int> y, const MlpParams& p,
                 std::uint64_t seed) {
  const Eigen::Index k = x.cols();
  const Eigen::Index h = mlp_hidden_units(static_cast<std::size_t>(k));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> init(-p.init_range, p.init_range);

  MlpModel m;
  auto& net = m.network;
  net.hidden.resize(h, k + 1);
  for (Eigen::Index u = 0; u < h; ++u) {
    for (Eigen::Index j = 0; j <= k; ++j) net.hidden(u, j) = init(rng);
  }
  net.output.resize(h + 1);
  for (Eigen::Index u = 0; u <= h; ++u) net.output(u) = init(rng);

  // Full-batch gradient descent with momentum on the summed squared error.
  Eigen::MatrixXd v_hidden = Eigen::MatrixXd::Zero(h, k + 1);
  Eigen::VectorXd v_output = Eigen::VectorXd::Zero(h + 1);
  for (int epoch = 0; epoch < p.epochs; ++epoch) {
    const auto g = mlp_gradient(net, x, y);
    v_hidden = -p.learning_rate * g.hidden + p.momentum * v_hidden;
    v_output = -p.learning_rate * g.output + p.momentum * v_output;
    net.hidden += v_hidden;
    net.output += v_output;
  }
  return m;
}

}  // namespace detail
}  // namespace ncx
