#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "sbl/errors.hpp"
#include "sbl/rvm_gibbs.hpp"
#include "sbl/sparse_classifier.hpp"
#include "test_util.hpp"

using namespace sbl;
using testutil::log_uniform;
using testutil::random_matrix;
using testutil::random_vector;

namespace {

struct Data {
  Matrix X;
  Vector y;
};

// Two Gaussian clouds centred at (-1.5, -1.5) and (1.5, 1.5).
Data separable(std::uint64_t seed, int n) {
  Rng rng(seed);
  Data d;
  d.X.resize(n, 2);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const int cls = i % 2;
    const double c = cls ? 1.5 : -1.5;
    d.X(i, 0) = c + 0.5 * rng.normal();
    d.X(i, 1) = c + 0.5 * rng.normal();
    d.y(i) = cls;
  }
  return d;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double ks_statistic(std::vector<double> x, double mean, double sd) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = normal_cdf((x[i] - mean) / sd);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

double spread(const std::vector<double>& d) {
  const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
  return *hi - *lo;
}

ClassifierModel default_model() {
  ClassifierModel m;
  m.priors.u1 = 0.1;
  m.priors.u2 = 10.0;
  return m;
}

}  // namespace

TEST_SUITE("sparse_classifier") {

TEST_CASE("loss values") {
  CHECK(loss_eval(LossKind::logistic, 1, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(loss_eval(LossKind::hinge, 1, 2.0) == 0.0);
  CHECK(loss_eval(LossKind::hinge, 0, 1.0) == 2.0);
  CHECK(loss_eval(LossKind::logistic, 0, 800.0) == doctest::Approx(800.0));
  CHECK(loss_eval(LossKind::logistic, 1, 800.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(loss_eval(LossKind::logistic, 2, 0.0), Error);
  CHECK(parse_loss_kind("hinge") == LossKind::hinge);
  CHECK_THROWS_AS(parse_loss_kind("probit"), Error);
}

TEST_CASE("two-class probabilities") {
  for (double z = -30.0; z <= 30.0; z += 0.37) {
    for (auto kind : {LossKind::logistic, LossKind::hinge}) {
      const double e1 = std::exp(-loss_eval(kind, 1, z));
      const double e0 = std::exp(-loss_eval(kind, 0, z));
      if (kind == LossKind::hinge) {
        CHECK(e1 <= 1.0);
        CHECK(e0 <= 1.0);
      }
      const double p = class_probability(kind, z);
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      CHECK(p == doctest::Approx(e1 / (e1 + e0)).epsilon(1e-12));
    }
    const double p1 = class_probability(LossKind::logistic, z);
    const double p0 = std::exp(-loss_eval(LossKind::logistic, 0, z)) /
                      (std::exp(-loss_eval(LossKind::logistic, 0, z)) + std::exp(-loss_eval(LossKind::logistic, 1, z)));
    CHECK(std::abs(p1 + p0 - 1.0) < 1e-12);
  }
  CHECK(predict_class(0.5) == 0);
  CHECK(predict_class(0.5000001) == 1);
}

TEST_CASE("conjugate blocks satisfy detailed balance") {
  const Data d = separable(1, 6);
  const ClassifierModel model = default_model();
  Rng rng(3);
  for (int pair = 0; pair < 10; ++pair) {
    LatentState s;
    s.z = random_vector(rng, 6);
    s.beta = random_vector(rng, 7);
    s.lambda.resize(7);
    for (int i = 0; i < 7; ++i) s.lambda(i) = log_uniform(rng, 0.1, 10);
    s.lambda(0) = model.priors.lambda0;
    s.sigma2 = log_uniform(rng, 0.2, 5);
    s.theta = testutil::uniform(rng, 0.5, 5);
    const Matrix K = build_design_matrix(CovariateSet(d.X), {model.kernel, s.theta}).matrix();
    const double lj = classifier_log_joint(d.y, K, model, s);

    // pi(x) q(x -> x') = pi(x') q(x' -> x), with q the exact full conditional
    LatentState t = s;
    const GaussianConditional gb = classifier_beta_conditional(s.z, K, s.lambda, s.sigma2);
    t.beta = random_vector(rng, 7);
    CHECK(std::abs((lj + gaussian_conditional_logpdf(t.beta, gb)) -
                   (classifier_log_joint(d.y, K, model, t) + gaussian_conditional_logpdf(s.beta, gb))) < 1e-8);

    for (int i = 1; i < 7; ++i) {
      t = s;
      t.lambda(i) = log_uniform(rng, 0.1, 10);
      const GammaParams g = classifier_lambda_conditional(model.priors.lambda_prior, s.beta(i), s.sigma2);
      CHECK(std::abs((lj + gamma_logpdf(t.lambda(i), g)) -
                     (classifier_log_joint(d.y, K, model, t) + gamma_logpdf(s.lambda(i), g))) < 1e-8);
    }

    t = s;
    t.sigma2 = log_uniform(rng, 0.2, 5);
    const GammaParams gs = classifier_precision_conditional(s.z, K, model.priors, s.beta, s.lambda);
    CHECK(std::abs((lj + gamma_logpdf(1.0 / t.sigma2, gs)) -
                   (classifier_log_joint(d.y, K, model, t) + gamma_logpdf(1.0 / s.sigma2, gs))) < 1e-8);
  }
}

TEST_CASE("seeded runs are reproducible and respect the model constraints") {
  const Data d = separable(2, 20);
  const ClassifierModel model = default_model();
  GibbsConfig cfg;
  cfg.n_iter = 1500;
  cfg.burn_in = 500;
  cfg.seed = 17;
  const McmcTrace a = run_classifier_mcmc(d.y, CovariateSet(d.X), model, cfg);
  const McmcTrace b = run_classifier_mcmc(d.y, CovariateSet(d.X), model, cfg);
  CHECK(a.beta == b.beta);
  CHECK(a.z == b.z);
  CHECK(a.theta == b.theta);
  CHECK(a.sigma2 == b.sigma2);
  CHECK((a.theta.array() > model.priors.u1).all());
  CHECK((a.theta.array() < model.priors.u2).all());
  CHECK((a.lambda.col(0).array() == model.priors.lambda0).all());
  CHECK(a.z.cols() == 20);
  CHECK(a.acceptance.count("z") == 1);
  CHECK(a.acceptance.at("z") > 0.2);
  CHECK(a.acceptance.at("z") < 0.6);
}

TEST_CASE("without the loss the z block targets N(K beta, sigma2 I)") {
  const Data d = separable(4, 3);
  ClassifierModel model = default_model();
  model.theta_init = 1.0;
  Rng rng(8);
  ClassifierInit init;
  init.beta = random_vector(rng, 4);
  init.sigma2 = 0.7;
  ClassifierBlocks blocks;
  blocks.beta = blocks.lambda = blocks.sigma2 = blocks.theta = false;
  blocks.use_loss = false;
  GibbsConfig cfg;
  cfg.burn_in = 5000;
  cfg.thin = 25;
  cfg.n_iter = cfg.burn_in + 10000 * cfg.thin;
  cfg.seed = 21;
  const McmcTrace tr = run_classifier_mcmc(d.y, CovariateSet(d.X), model, cfg, blocks, init);
  REQUIRE(tr.rows() == 10000);
  const Matrix K = build_design_matrix(CovariateSet(d.X), {model.kernel, 1.0}).matrix();
  const Vector mu = K * *init.beta;
  for (Eigen::Index i = 0; i < 3; ++i) {
    std::vector<double> col(tr.z.col(i).data(), tr.z.col(i).data() + tr.rows());
    CHECK(ks_statistic(col, mu(i), std::sqrt(0.7)) < 0.02);
  }
}

TEST_CASE("separable data are classified") {
  const Data d = separable(5, 40);
  const ClassifierModel model = default_model();
  GibbsConfig cfg;
  cfg.n_iter = 4000;
  cfg.burn_in = 1000;
  cfg.thin = 3;
  cfg.seed = 3;
  const CovariateSet X(d.X);
  const McmcTrace tr = run_classifier_mcmc(d.y, X, model, cfg);
  int correct = 0;
  for (int i = 0; i < 40; ++i) {
    const ClassProbability p = predict_prob(tr, X, X.row(i), model);
    CHECK(p.probability >= 0.0);
    CHECK(p.probability <= 1.0);
    correct += predict_class(p.probability) == static_cast<int>(d.y(i));
  }
  CHECK(correct >= 36);
  Vector far(2);
  far << 50.0, -50.0;
  const double pf = predict_prob(tr, X, far, model).probability;
  CHECK(pf >= 0.0);
  CHECK(pf <= 1.0);
}

TEST_CASE("hinge loss runs") {
  const Data d = separable(6, 16);
  ClassifierModel model = default_model();
  model.loss = LossKind::hinge;
  GibbsConfig cfg;
  cfg.n_iter = 2000;
  cfg.burn_in = 500;
  cfg.seed = 9;
  const CovariateSet X(d.X);
  const McmcTrace tr = run_classifier_mcmc(d.y, X, model, cfg);
  int correct = 0;
  for (int i = 0; i < 16; ++i)
    correct += predict_class(predict_prob(tr, X, X.row(i), model).probability) == static_cast<int>(d.y(i));
  CHECK(correct >= 14);
}

TEST_CASE("flipping the labels mirrors a seeded chain") {
  const Data d = separable(11, 12);
  const CovariateSet X(d.X);
  const Vector flipped = (1.0 - d.y.array()).matrix();
  for (LossKind loss : {LossKind::logistic, LossKind::hinge}) {
    ClassifierModel model = default_model();
    model.loss = loss;
    GibbsConfig cfg;
    cfg.n_iter = 1500;
    cfg.burn_in = 500;
    cfg.seed = 21;
    const McmcTrace a = run_classifier_mcmc(d.y, X, model, cfg);
    const McmcTrace b = run_classifier_mcmc(flipped, X, model, cfg);
    CHECK((a.z + b.z).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + a.z.cwiseAbs().maxCoeff()));
    CHECK((a.beta + b.beta).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + a.beta.cwiseAbs().maxCoeff()));
    CHECK((a.theta - b.theta).cwiseAbs().maxCoeff() <= 1e-12);
    Vector x(2);
    x << 0.2, -0.4;
    const double p = predict_prob(a, X, x, model).probability;
    const double q = predict_prob(b, X, x, model).probability;
    CHECK(std::abs(p + q - 1.0) < 1e-9);
  }
}

TEST_CASE("refusals and input checks") {
  const Data d = separable(7, 6);
  ClassifierModel model = default_model();
  model.priors.lambda_prior = LambdaPrior::jeffreys();
  GibbsConfig cfg;
  cfg.n_iter = 100;
  try {
    run_classifier_mcmc(d.y, CovariateSet(d.X), model, cfg);
    FAIL("expected refusal");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::refused);
  }
  model.priors.lambda_prior = LambdaPrior::half_cauchy(1.0);
  try {
    run_classifier_mcmc(d.y, CovariateSet(d.X), model, cfg);
    FAIL("expected unsupported");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unsupported);
  }
  model = default_model();
  Vector bad = d.y;
  bad(0) = 2.0;
  CHECK_THROWS_AS(run_classifier_mcmc(bad, CovariateSet(d.X), model, cfg), Error);
  model.theta_init = 20.0;
  CHECK_THROWS_AS(run_classifier_mcmc(d.y, CovariateSet(d.X), model, cfg), Error);
}

}
