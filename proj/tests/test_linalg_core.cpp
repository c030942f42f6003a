#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "sbl/errors.hpp"
#include "sbl/linalg_core.hpp"
#include "test_util.hpp"

using namespace sbl;
using testutil::log_uniform;
using testutil::random_matrix;
using testutil::random_vector;

namespace {

// Dense oracle: explicit covariance inverted by full-pivot LU.
Matrix dense_inverse(double sigma2, const Matrix& K, const Vector& lambda) {
  const Eigen::Index n = K.rows();
  const Matrix C = sigma2 * Matrix::Identity(n, n) + K * lambda.cwiseInverse().asDiagonal() * K.transpose();
  return C.fullPivLu().inverse();
}

Vector random_lambda(Rng& rng, Eigen::Index m) {
  Vector l(m);
  for (Eigen::Index i = 0; i < m; ++i) l(i) = log_uniform(rng, 1e-3, 1e3);
  return l;
}

}  // namespace

TEST_SUITE("linalg_core") {

TEST_CASE("smw_inverse identity and limit cases") {
  const Matrix K0 = Matrix::Zero(3, 4);
  const Matrix out = smw_inverse(2.0, K0, PrecisionDiag(Vector::Ones(4)));
  CHECK((out - 0.5 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);

  Rng rng(1);
  const Matrix K = random_matrix(rng, 3, 4);
  const Vector inf = Vector::Constant(4, std::numeric_limits<double>::infinity());
  const Matrix pruned = smw_inverse(0.7, K, PrecisionDiag(inf));
  CHECK((pruned - Matrix::Identity(3, 3) / 0.7).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("smw_inverse matches the dense inverse for n = 3") {
  Rng rng(2);
  const Matrix K = random_matrix(rng, 3, 4);
  const Vector lambda = random_lambda(rng, 4);
  const double sigma2 = 0.8;
  const Matrix got = smw_inverse(sigma2, K, PrecisionDiag(lambda));
  CHECK((got - dense_inverse(sigma2, K, lambda)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((got - got.transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("smw_inverse times the covariance is the identity over 1000 instances") {
  Rng rng(3);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.uniform() * 6);
    const Matrix K = random_matrix(rng, n, n + 1, 0.5);
    const Vector lambda = random_lambda(rng, n + 1);
    const double sigma2 = log_uniform(rng, 1e-2, 1e2);
    const Matrix C =
        sigma2 * Matrix::Identity(n, n) + K * lambda.cwiseInverse().asDiagonal() * K.transpose();
    const Matrix P = smw_inverse(sigma2, K, PrecisionDiag(lambda)) * C;
    worst = std::max(worst, (P - Matrix::Identity(n, n)).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("smw_inverse rejects bad input") {
  const Matrix K = Matrix::Ones(2, 3);
  CHECK_THROWS_AS(smw_inverse(0.0, K, PrecisionDiag(Vector::Ones(3))), Error);
  CHECK_THROWS_AS(smw_inverse(1.0, K, PrecisionDiag(Vector::Ones(2))), Error);
  CHECK_THROWS_AS(PrecisionDiag(Vector::Constant(2, -1.0)), Error);
}

TEST_CASE("projection_residual cases") {
  Rng rng(4);
  // full row rank: every y is in the column space
  for (int t = 0; t < 20; ++t) {
    const Matrix K = random_matrix(rng, 4, 5);
    Eigen::JacobiSVD<Matrix> svd(K);
    REQUIRE(svd.singularValues().minCoeff() > 1e-6);
    CHECK(projection_residual(K, random_vector(rng, 4)) < 1e-10);
  }
  // y = K b lies in the column space even when K is rank deficient
  Matrix K(3, 4);
  K.row(0) = random_vector(rng, 4).transpose();
  K.row(1) = random_vector(rng, 4).transpose();
  K.row(2) = K.row(0);
  const Vector b = random_vector(rng, 4);
  CHECK(projection_residual(K, K * b) < 1e-10);

  // duplicate rows: the residual is the squared half-difference of the tied responses
  const Vector y = random_vector(rng, 3);
  const Vector ls = K.colPivHouseholderQr().solve(y);
  const double oracle = (y - K * ls).squaredNorm();
  CHECK(oracle > 1e-6);
  CHECK(projection_residual(K, y) == doctest::Approx(oracle).epsilon(1e-10));
  CHECK(oracle == doctest::Approx(0.5 * std::pow(y(0) - y(2), 2)).epsilon(1e-10));
}

TEST_CASE("projection_residual is invariant to column mixing") {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    Matrix K = random_matrix(rng, 4, 5);
    K.row(3) = K.row(1);
    const Vector y = random_vector(rng, 4);
    const Matrix A = random_matrix(rng, 5, 5) + 3.0 * Matrix::Identity(5, 5);
    REQUIRE(std::abs(A.determinant()) > 1e-3);
    CHECK(std::abs(projection_residual(K, y) - projection_residual(K * A, y)) < 1e-8);
  }
}

TEST_CASE("gaussian_logpdf") {
  Vector z(1);
  z << 0.0;
  Matrix one(1, 1);
  one << 1.0;
  CHECK(gaussian_logpdf(z, z, one) == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-15));

  Rng rng(6);
  const Matrix B = random_matrix(rng, 4, 4);
  const Matrix C = B * B.transpose() + 0.5 * Matrix::Identity(4, 4);
  const Vector y = random_vector(rng, 4), m = random_vector(rng, 4), t = random_vector(rng, 4);
  const Vector r = y - m;
  const double oracle =
      -0.5 * (4 * std::log(2 * std::numbers::pi) + std::log(C.determinant()) + r.dot(C.inverse() * r));
  CHECK(std::abs(gaussian_logpdf(y, m, C) - oracle) < 1e-10);
  CHECK(std::abs(gaussian_logpdf(y, m, C) - gaussian_logpdf(y + t, m + t, C)) < 1e-12);

  Matrix notspd = Matrix::Identity(2, 2);
  notspd(1, 1) = -1.0;
  CHECK_THROWS_AS(gaussian_logpdf(Vector::Zero(2), Vector::Zero(2), notspd), NumericError);
}

TEST_CASE("max_eigenvalue") {
  CHECK(max_eigenvalue(Matrix::Identity(5, 5)) == doctest::Approx(1.0));
  CHECK(max_eigenvalue(Eigen::Vector3d(1, 5, 3).asDiagonal().toDenseMatrix()) == doctest::Approx(5.0));
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const Matrix K = random_matrix(rng, 4, 5);
    const Matrix G = K.transpose() * K;
    Eigen::SelfAdjointEigenSolver<Matrix> es(G);
    const double oracle = es.eigenvalues().maxCoeff();
    CHECK(std::abs(max_eigenvalue(G) - oracle) <= 1e-8 * oracle);
  }
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 1.0;
  CHECK_THROWS_AS(max_eigenvalue(asym), Error);
}

TEST_CASE("prior precision is dominated by the posterior precision") {
  Rng rng(8);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.uniform() * 6);
    const Matrix K = random_matrix(rng, n, n + 1);
    const Vector lambda = random_lambda(rng, n + 1);
    const double sigma2 = log_uniform(rng, 1e-2, 1e2);
    const Matrix Dsig = (lambda * sigma2).asDiagonal();
    const Matrix diff = (K.transpose() * K + Dsig) - Dsig;
    Eigen::SelfAdjointEigenSolver<Matrix> es(diff);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("covariance factor") {
  Rng rng(9);
  const Matrix B = random_matrix(rng, 5, 5);
  const Matrix S = B * B.transpose() + Matrix::Identity(5, 5);
  const CovarianceFactor f = CovarianceFactor::of(S);
  CHECK((f.chol * f.chol.transpose() - S).norm() / S.norm() < 1e-10);
  CHECK(f.logdet == doctest::Approx(std::log(S.determinant())).epsilon(1e-12));
  CHECK((f.inverse() * S - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-10);
  Matrix singular = Matrix::Ones(3, 3);
  try {
    CovarianceFactor::of(singular);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.condition_estimate() > 1e10);
  }
}

TEST_CASE("pseudo_inverse satisfies the Penrose conditions") {
  Rng rng(10);
  Matrix M = random_matrix(rng, 4, 3);
  M.col(2) = M.col(0) + M.col(1);
  const Matrix P = pseudo_inverse(M);
  CHECK((M * P * M - M).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((P * M * P - P).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(((M * P).transpose() - M * P).cwiseAbs().maxCoeff() < 1e-10);
}

}
