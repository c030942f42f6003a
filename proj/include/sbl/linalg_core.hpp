#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "sbl/kernel_design.hpp"

namespace sbl {

/// Coefficient precisions lambda_0..lambda_n. An entry of +infinity marks a
/// pruned coefficient whose column is dropped from every factorization.
struct PrecisionDiag {
  Vector lambda;

  PrecisionDiag() = default;
  explicit PrecisionDiag(Vector l);

  Eigen::Index size() const noexcept { return lambda.size(); }
  bool pruned(Eigen::Index i) const { return std::isinf(lambda(i)); }
  std::vector<Eigen::Index> retained() const;
  void validate() const;
};

/// Lower Cholesky factor of an SPD matrix together with its log-determinant.
struct CovarianceFactor {
  Matrix chol;
  double logdet = 0.0;

  /// Throws NumericError (with a condition estimate) when M is not
  /// numerically positive definite.
  static CovarianceFactor of(const Matrix& M);

  Vector solve(const Eigen::Ref<const Vector>& b) const;
  Matrix inverse() const;
};

/// Columns of K at the given indices.
Matrix select_columns(const Eigen::Ref<const Matrix>& K, const std::vector<Eigen::Index>& idx);

/// 2-norm condition number from singular values; infinity when singular.
double condition_number(const Eigen::Ref<const Matrix>& M);

/// (sigma2 I + K D^-1 K^T)^-1 evaluated as sigma2^-1 (I - K (K^T K + D sigma2)^-1 K^T).
Matrix smw_inverse(double sigma2, const Eigen::Ref<const Matrix>& K, const PrecisionDiag& D);
inline Matrix smw_inverse(double sigma2, const DesignMatrix& K, const PrecisionDiag& D) {
  return smw_inverse(sigma2, K.matrix(), D);
}

/// y^T (I - P_K) y where P_K projects onto the column space of K; computed
/// from an SVD with rank tolerance max(rows, cols) * eps * sigma_max and
/// clamped at zero.
double projection_residual(const Eigen::Ref<const Matrix>& K, const Eigen::Ref<const Vector>& y);
inline double projection_residual(const DesignMatrix& K, const Eigen::Ref<const Vector>& y) {
  return projection_residual(K.matrix(), y);
}

/// Moore-Penrose pseudoinverse with the same rank tolerance.
Matrix pseudo_inverse(const Eigen::Ref<const Matrix>& M);

double gaussian_logpdf(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Vector>& mean,
                       const Eigen::Ref<const Matrix>& cov);

/// Largest eigenvalue of a symmetric matrix; throws on asymmetric input.
double max_eigenvalue(const Eigen::Ref<const Matrix>& M);

}  // namespace sbl
