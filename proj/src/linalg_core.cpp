#include "sbl/linalg_core.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "sbl/errors.hpp"

namespace sbl {

PrecisionDiag::PrecisionDiag(Vector l) : lambda(std::move(l)) { validate(); }

std::vector<Eigen::Index> PrecisionDiag::retained() const {
  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(lambda.size()));
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (!pruned(i)) idx.push_back(i);
  return idx;
}

void PrecisionDiag::validate() const {
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (!(lambda(i) > 0.0)) throw_input("precision lambda_" + std::to_string(i) + " must be positive");
}

double condition_number(const Eigen::Ref<const Matrix>& M) {
  if (M.size() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

CovarianceFactor CovarianceFactor::of(const Matrix& M) {
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success || !M.allFinite()) {
    const double cond = M.allFinite() ? condition_number(M) : std::numeric_limits<double>::infinity();
    std::ostringstream msg;
    msg << "Cholesky factorization failed for a " << M.rows() << "x" << M.cols()
        << " matrix (condition estimate " << cond << ")";
    throw NumericError(msg.str(), cond);
  }
  CovarianceFactor f;
  f.chol = llt.matrixL();
  f.logdet = 2.0 * f.chol.diagonal().array().log().sum();
  return f;
}

Vector CovarianceFactor::solve(const Eigen::Ref<const Vector>& b) const {
  const auto L = chol.triangularView<Eigen::Lower>();
  Vector x = L.solve(b);
  L.transpose().solveInPlace(x);
  return x;
}

Matrix CovarianceFactor::inverse() const {
  const auto L = chol.triangularView<Eigen::Lower>();
  Matrix X = L.solve(Matrix::Identity(chol.rows(), chol.cols()));
  L.transpose().solveInPlace(X);
  return 0.5 * (X + X.transpose());
}

Matrix select_columns(const Eigen::Ref<const Matrix>& K, const std::vector<Eigen::Index>& idx) {
  Matrix out(K.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = K.col(idx[j]);
  return out;
}

Matrix smw_inverse(double sigma2, const Eigen::Ref<const Matrix>& K, const PrecisionDiag& D) {
  if (!(sigma2 > 0.0)) throw_input("smw_inverse: sigma2 must be positive");
  if (D.size() != K.cols()) throw_input("smw_inverse: precision vector length does not match K columns");
  D.validate();
  const Eigen::Index n = K.rows();
  const auto keep = D.retained();
  Matrix result = Matrix::Identity(n, n);
  if (!keep.empty()) {
    const Matrix Kr = select_columns(K, keep);
    Matrix inner = Kr.transpose() * Kr;
    for (std::size_t j = 0; j < keep.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      inner(jj, jj) += D.lambda(keep[j]) * sigma2;
    }
    const auto f = CovarianceFactor::of(inner);
    const auto L = f.chol.triangularView<Eigen::Lower>();
    // K (L L^T)^-1 K^T = W^T W with W = L^-1 K^T
    const Matrix W = L.solve(Kr.transpose());
    result.noalias() -= W.transpose() * W;
  }
  result /= sigma2;
  return 0.5 * (result + result.transpose());
}

namespace {

double rank_tolerance(const Eigen::JacobiSVD<Matrix>& svd, Eigen::Index rows, Eigen::Index cols) {
  const auto& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * smax;
}

}  // namespace

double projection_residual(const Eigen::Ref<const Matrix>& K, const Eigen::Ref<const Vector>& y) {
  if (K.rows() != y.size()) throw_input("projection_residual: K has " + std::to_string(K.rows()) +
                                        " rows but y has " + std::to_string(y.size()) + " entries");
  if (K.size() == 0) return y.squaredNorm();
  Eigen::JacobiSVD<Matrix> svd(K, Eigen::ComputeThinU);
  const double tol = rank_tolerance(svd, K.rows(), K.cols());
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > tol) ++rank;
  const Matrix Ur = svd.matrixU().leftCols(rank);
  const Vector r = y - Ur * (Ur.transpose() * y);
  return std::max(0.0, r.squaredNorm());
}

Matrix pseudo_inverse(const Eigen::Ref<const Matrix>& M) {
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double tol = rank_tolerance(svd, M.rows(), M.cols());
  Vector inv = svd.singularValues();
  for (Eigen::Index i = 0; i < inv.size(); ++i) inv(i) = inv(i) > tol ? 1.0 / inv(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double gaussian_logpdf(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Vector>& mean,
                       const Eigen::Ref<const Matrix>& cov) {
  const Eigen::Index n = y.size();
  if (mean.size() != n || cov.rows() != n || cov.cols() != n)
    throw_input("gaussian_logpdf: dimension mismatch");
  const auto f = CovarianceFactor::of(cov);
  const Vector w = f.chol.triangularView<Eigen::Lower>().solve(y - mean);
  return -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + f.logdet + w.squaredNorm());
}

double max_eigenvalue(const Eigen::Ref<const Matrix>& M) {
  if (M.rows() != M.cols()) throw_input("max_eigenvalue: matrix is not square");
  if (M.size() == 0) return 0.0;
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw_input("max_eigenvalue: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("max_eigenvalue: eigensolver failed", condition_number(M));
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

}  // namespace sbl
