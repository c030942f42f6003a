#pragma once

#include <optional>
#include <string_view>

#include "sbl/mcmc_trace.hpp"
#include "sbl/propriety_gate.hpp"
#include "sbl/rvm_gibbs.hpp"

namespace sbl {

enum class LossKind { logistic, hinge };

std::string_view to_string(LossKind kind) noexcept;
LossKind parse_loss_kind(std::string_view name);

/// logistic: log(1 + e^z) - y z;  hinge: max(0, 1 - (2y - 1) z).
double loss_eval(LossKind kind, int y, double z);

/// P(y = 1 | z) = e^-l(1,z) / (e^-l(1,z) + e^-l(0,z)).
double class_probability(LossKind kind, double z);

struct ClassifierModel {
  LossKind loss = LossKind::logistic;
  ClassifierPriorSpec priors;
  KernelKind kernel = KernelKind::gaussian;
  std::optional<double> theta_init;  // defaults to the midpoint of (u1, u2)

  void validate() const;
  double initial_theta() const;
};

/// One state of the classifier chain. lambda holds lambda_0..lambda_n with
/// lambda_0 fixed at priors.lambda0.
struct LatentState {
  Vector z;
  Vector beta;
  Vector lambda;
  double sigma2 = 1.0;
  double theta = 1.0;
};

/// Test hooks. Disabled blocks keep their initial values; use_loss = false
/// drops the loss term so z | rest is exactly N(K beta, sigma2 I).
struct ClassifierBlocks {
  bool z = true;
  bool beta = true;
  bool lambda = true;
  bool sigma2 = true;
  bool theta = true;
  bool use_loss = true;
};

struct ClassifierInit {
  std::optional<Vector> z;
  std::optional<Vector> beta;
  std::optional<Vector> lambda;
  std::optional<double> sigma2;
};

/// beta | z, lambda, sigma2 ~ N((K^T K + D)^-1 K^T z, sigma2 (K^T K + D)^-1).
GaussianConditional classifier_beta_conditional(const Eigen::Ref<const Vector>& z, const Eigen::Ref<const Matrix>& K,
                                                const Eigen::Ref<const Vector>& lambda, double sigma2);
/// lambda_i | beta_i, sigma2 ~ Gamma(a + 1/2, b + beta_i^2 / (2 sigma2)), i >= 1.
GammaParams classifier_lambda_conditional(const LambdaPrior& prior, double beta_i, double sigma2);
/// 1/sigma2 | rest ~ Gamma(c + n/2 + (n+1)/2, d + |z - K beta|^2 / 2 + beta^T D beta / 2).
GammaParams classifier_precision_conditional(const Eigen::Ref<const Vector>& z, const Eigen::Ref<const Matrix>& K,
                                             const ClassifierPriorSpec& priors, const Eigen::Ref<const Vector>& beta,
                                             const Eigen::Ref<const Vector>& lambda);

/// Unnormalized log posterior in (z, beta, lambda_1..n, 1/sigma2, theta).
/// K must be the design matrix at state.theta.
double classifier_log_joint(const Eigen::Ref<const Vector>& y01, const Eigen::Ref<const Matrix>& K,
                            const ClassifierModel& model, const LatentState& state, bool use_loss = true);

/// Metropolis-within-Gibbs over (z, beta, lambda, sigma2, theta). Refuses
/// (ErrorCode::refused) unless the classifier gate says Proper or
/// cfg.allow_improper is set. Only lambda priors of the form
/// lambda^(a-1) exp(-b lambda) are supported.
McmcTrace run_classifier_mcmc(const Eigen::Ref<const Vector>& y01, const CovariateSet& X,
                              const ClassifierModel& model, const GibbsConfig& cfg,
                              const ClassifierBlocks& blocks = {}, const ClassifierInit& init = {});

struct ClassProbability {
  double probability = 0.5;
  double mcse = 0.0;
};

/// Posterior predictive P(y_new = 1): average over kept draws of the
/// two-class probability integrated against z_new ~ N(k_new^T beta, sigma2)
/// with 32-point Gauss-Hermite.
ClassProbability predict_prob(const McmcTrace& trace, const CovariateSet& X, const Eigen::Ref<const Vector>& x_new,
                              const ClassifierModel& model);

/// Class 1 iff the probability exceeds 0.5.
inline int predict_class(double probability) { return probability > 0.5 ? 1 : 0; }

}  // namespace sbl
