#include "neuroadapt/lda.hpp"

#include <algorithm>
#include <stdexcept>

namespace neuroadapt {

ShrunkCovariance ledoit_wolf(const Eigen::MatrixXd& x_in, bool assume_centered) {
  const auto n = static_cast<double>(x_in.rows());
  const auto d = x_in.cols();
  if (x_in.rows() < 1 || d < 1) throw std::invalid_argument("ledoit_wolf: empty data");

  Eigen::MatrixXd x = x_in;
  if (!assume_centered) x.rowwise() -= x.colwise().mean();

  const Eigen::MatrixXd s = (x.transpose() * x) / n;
  const double mu = s.trace() / static_cast<double>(d);

  // delta^2 = ||S - mu I||_F^2 / d ; beta^2 = sum_k ||x_k x_k^T - S||_F^2 / (n^2 d)
  const Eigen::MatrixXd x2 = x.array().square().matrix();
  const double sum_outer_sq = (x2.transpose() * x2).sum();  // sum_k ||x_k||^4 summed over entries
  const double s_sq = s.array().square().sum();
  double beta = (sum_outer_sq / n - s_sq) / (n * static_cast<double>(d));
  const double delta = (s_sq - 2.0 * mu * s.trace() + static_cast<double>(d) * mu * mu) / static_cast<double>(d);
  beta = std::min(beta, delta);
  const double lambda = (beta <= 0.0 || delta <= 0.0) ? 0.0 : std::clamp(beta / delta, 0.0, 1.0);

  ShrunkCovariance out;
  out.lambda = lambda;
  out.covariance = (1.0 - lambda) * s;
  out.covariance.diagonal().array() += lambda * mu;
  return out;
}

LdaModel fit_lda(const Eigen::MatrixXd& x, std::span<const int> y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw std::invalid_argument("fit_lda: row/label count mismatch");
  if (x.cols() < 1) throw std::invalid_argument("fit_lda: need at least one feature");

  const auto d = x.cols();
  Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(d), mu1 = Eigen::VectorXd::Zero(d);
  int n0 = 0, n1 = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (y[static_cast<std::size_t>(i)] == 1) {
      mu1 += x.row(i).transpose();
      ++n1;
    } else {
      mu0 += x.row(i).transpose();
      ++n0;
    }
  }
  if (n0 < 2 || n1 < 2) throw std::invalid_argument("fit_lda: each class needs at least 2 rows");
  mu0 /= n0;
  mu1 /= n1;

  Eigen::MatrixXd centered(x.rows(), d);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    centered.row(i) = x.row(i) - (y[static_cast<std::size_t>(i)] == 1 ? mu1 : mu0).transpose();
  }
  const ShrunkCovariance cov = ledoit_wolf(centered, /*assume_centered=*/true);

  Eigen::LLT<Eigen::MatrixXd> llt(cov.covariance);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) throw std::runtime_error("fit_lda: shrunk covariance is singular");

  LdaModel m;
  m.lambda = cov.lambda;
  m.weights = llt.solve(mu1 - mu0);
  if (!m.weights.allFinite()) throw std::runtime_error("fit_lda: shrunk covariance is singular");
  m.bias = -0.5 * m.weights.dot(mu0 + mu1);
  return m;
}

}  // namespace neuroadapt
