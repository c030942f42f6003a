#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sbl/kernel_design.hpp"
#include "sbl/linalg_core.hpp"

namespace sbl {

/// Gaussian conditional posterior of beta, held on the retained indices.
struct BetaPosterior {
  Vector mean;                           // full length n+1, zeros at pruned indices
  Matrix cov;                            // retained x retained
  std::vector<Eigen::Index> retained;
};

struct RvmFit {
  Vector lambda_hat;                     // +inf marks a pruned coefficient
  double sigma2_hat = 0.0;
  Vector beta_mean;
  Matrix beta_cov;
  std::vector<Eigen::Index> relevance_indices;
  double log_evidence = 0.0;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;               // every column pruned while y != 0
  std::vector<double> evidence_trace;    // log evidence after each accepted step
  std::vector<std::string> warnings;
};

struct PredictiveDistribution {
  double mean = 0.0;
  double variance = 0.0;
};

struct FitOptions {
  int max_iter = 1000;
  double tol = 1e-8;                     // relative change of the log evidence
  double prune_threshold = 1e12;
};

struct FitInit {
  Vector lambda;
  double sigma2 = 0.0;
};

/// log N(y; 0, sigma2 I + K D^-1 K^T), with
/// logdet = n log sigma2 - log|D_r| + log|K_r^T K_r / sigma2 + D_r| on the
/// retained indices r.
double log_marginal_likelihood(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                               const PrecisionDiag& lambda, double sigma2);

struct EvidenceGradient {
  Vector d_log_lambda;                   // zero at pruned indices
  double d_log_sigma2 = 0.0;
};

/// Analytic gradient of log_marginal_likelihood in (log lambda_i, log sigma2).
EvidenceGradient log_marginal_gradient(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                                       const PrecisionDiag& lambda, double sigma2);

/// beta | lambda, sigma2, y ~ N((K^T K + D sigma2)^-1 K^T y, (K^T K / sigma2 + D)^-1).
BetaPosterior posterior_beta(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                             const PrecisionDiag& lambda, double sigma2);

/// Type-II maximum likelihood by fixed-point re-estimation
///   lambda_i <- gamma_i / mu_i^2,  sigma2 <- |y - K mu|^2 / (n - sum gamma_i),
/// with gamma_i = 1 - lambda_i Sigma_ii. A step that would lower the evidence
/// is replaced by the EM update lambda_i <- 1 / (mu_i^2 + Sigma_ii),
/// sigma2 <- (|y - K mu|^2 + sigma2 sum gamma_i) / n, so the evidence trace
/// is nondecreasing.
RvmFit fit_type2_ml(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                    const std::optional<FitInit>& init = std::nullopt, const FitOptions& opts = {});
inline RvmFit fit_type2_ml(const Eigen::Ref<const Vector>& y, const DesignMatrix& K,
                           const std::optional<FitInit>& init = std::nullopt, const FitOptions& opts = {}) {
  return fit_type2_ml(y, K.matrix(), init, opts);
}

PredictiveDistribution predict(const RvmFit& fit, const Eigen::Ref<const Vector>& k_new);

struct CrossValidationResult {
  std::vector<double> thetas;
  std::vector<double> rmse;
  std::size_t best = 0;
};

/// k-fold predictive RMSE over a theta grid; fold of row i is i mod folds.
CrossValidationResult cross_validate_theta(const CovariateSet& X, const Eigen::Ref<const Vector>& y,
                                           KernelKind kind, const std::vector<double>& thetas,
                                           int folds = 5, const FitOptions& opts = {});

}  // namespace sbl
