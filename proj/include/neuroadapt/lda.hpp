#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace neuroadapt {

struct ShrunkCovariance {
  Eigen::MatrixXd covariance;  // (1 - lambda) S + lambda mu I
  double lambda{0.0};          // in [0, 1]
};

// Ledoit-Wolf shrinkage of the 1/n sample covariance toward mu I,
// mu = trace(S) / d. Rows of `x` are observations; when `assume_centered`
// is false the column means are removed first.
ShrunkCovariance ledoit_wolf(const Eigen::MatrixXd& x, bool assume_centered = false);

struct LdaModel {
  Eigen::VectorXd weights;
  double bias{0.0};
  double lambda{0.0};

  // Positive score -> class 1 (matching).
  double score(const Eigen::Ref<const Eigen::VectorXd>& row) const { return weights.dot(row) + bias; }
};

// Two-class LDA with equal priors. The pooled within-class scatter is
// Ledoit-Wolf shrunk; w = Sigma^-1 (mu1 - mu0) and the bias puts the
// decision threshold at the midpoint of the projected class means.
// Throws std::invalid_argument when a class has fewer than 2 rows or
// std::runtime_error when the shrunk covariance is singular.
LdaModel fit_lda(const Eigen::MatrixXd& x, std::span<const int> y);

}  // namespace neuroadapt
