#include <cmath>

#include "doctest.h"
#include "sbl/errors.hpp"
#include "sbl/kernel_design.hpp"
#include "test_util.hpp"

using namespace sbl;

namespace {

Vector v(std::initializer_list<double> xs) {
  Vector out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out(i++) = x;
  return out;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an sbl::Error");
  return ErrorCode::input;
}

}  // namespace

TEST_SUITE("kernel_design") {

TEST_CASE("kernel_eval closed forms") {
  const KernelSpec g{KernelKind::gaussian, 1.0};
  CHECK(kernel_eval(g, v({0.3, -1.2}), v({0.3, -1.2})) == 1.0);
  CHECK(kernel_eval(g, v({0.0}), v({1.0})) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(kernel_eval({KernelKind::linear, 1.0}, v({1, 2}), v({3, 4})) == 11.0);
  CHECK(kernel_eval({KernelKind::laplace, 2.0}, v({0, 0}), v({3, 4})) == doctest::Approx(std::exp(-2.5)));
  CHECK(kernel_eval({KernelKind::polynomial, 2.0}, v({1, 2}), v({3, 4})) == doctest::Approx(6.5 * 6.5));
  CHECK(kernel_eval({KernelKind::gaussian, 0.5}, v({1.0}), v({2.0})) == doctest::Approx(std::exp(-2.0)));
}

TEST_CASE("kernel_eval errors") {
  CHECK(code_of([] { kernel_eval({KernelKind::gaussian, 1.0}, v({1, 2}), v({1})); }) == ErrorCode::input);
  CHECK(code_of([] { kernel_eval({KernelKind::gaussian, 0.0}, v({1}), v({1})); }) == ErrorCode::config);
  CHECK(code_of([] { kernel_eval({KernelKind::laplace, -1.0}, v({1}), v({1})); }) == ErrorCode::config);
  CHECK(code_of([] { parse_kernel_kind("spline"); }) == ErrorCode::config);
}

TEST_CASE("kernel kinds round trip through names") {
  for (auto k : {KernelKind::gaussian, KernelKind::laplace, KernelKind::polynomial, KernelKind::linear})
    CHECK(parse_kernel_kind(to_string(k)) == k);
  CHECK(parse_kernel_kind("rbf") == KernelKind::gaussian);
}

TEST_CASE("symmetry and range over random inputs") {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    const Vector a = testutil::random_vector(rng, 3);
    const Vector b = testutil::random_vector(rng, 3);
    const double theta = testutil::uniform(rng, 0.1, 4.0);
    for (auto k : {KernelKind::gaussian, KernelKind::laplace, KernelKind::polynomial, KernelKind::linear}) {
      const KernelSpec s{k, theta};
      CHECK(kernel_eval(s, a, b) == kernel_eval(s, b, a));
    }
    for (auto k : {KernelKind::gaussian, KernelKind::laplace}) {
      const double val = kernel_eval({k, theta}, a, b);
      CHECK(val > 0.0);
      CHECK(val <= 1.0);
    }
  }
}

TEST_CASE("design matrix for the two-point example") {
  Matrix X(2, 1);
  X << 0.0, 1.0;
  const DesignMatrix K = build_design_matrix(CovariateSet(X), {KernelKind::gaussian, 1.0});
  const double e = std::exp(-0.5);
  Matrix expected(2, 3);
  expected << 1, 1, e, 1, e, 1;
  CHECK(K.rows() == 2);
  CHECK(K.cols() == 3);
  CHECK((K.matrix() - expected).cwiseAbs().maxCoeff() < 1e-15);

  const Vector row = build_prediction_row(CovariateSet(X), v({0.0}), {KernelKind::gaussian, 1.0});
  CHECK((row - v({1, 1, e})).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("prediction rows reproduce design rows and decay far away") {
  Rng rng(5);
  const Matrix X = testutil::random_matrix(rng, 7, 2);
  const CovariateSet cs(X);
  for (auto k : {KernelKind::gaussian, KernelKind::laplace, KernelKind::polynomial, KernelKind::linear}) {
    const KernelSpec s{k, 1.3};
    const DesignMatrix K = build_design_matrix(cs, s);
    CHECK(K.cols() == 8);
    CHECK(K.matrix().col(0).isOnes());
    for (Eigen::Index i = 0; i < 7; ++i) {
      const Vector r = build_prediction_row(cs, cs.row(i), s);
      CHECK(r == K.matrix().row(i).transpose());
    }
  }
  const Vector far = build_prediction_row(cs, v({1e6, -1e6}), {KernelKind::gaussian, 1.0});
  CHECK(far(0) == 1.0);
  CHECK(far.tail(7).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("duplicate rows give duplicate columns") {
  Matrix X(3, 2);
  X << 0.1, 0.2, -1.0, 0.5, 0.1, 0.2;
  const DesignMatrix K = build_design_matrix(CovariateSet(X), {KernelKind::laplace, 0.7});
  CHECK(K.matrix().col(1) == K.matrix().col(3));
  CHECK(K.matrix()(0, 1) == 1.0);
}

TEST_CASE("covariate validation") {
  CHECK(code_of([] { CovariateSet(Matrix(0, 2)); }) == ErrorCode::input);
  Matrix bad(2, 1);
  bad << 1.0, std::nan("");
  CHECK(code_of([&] { CovariateSet{bad}; }) == ErrorCode::input);
  Matrix X(2, 2);
  X.setZero();
  CHECK(code_of([&] { build_prediction_row(CovariateSet(X), v({1.0}), {}); }) == ErrorCode::input);
}

}
