#pragma once

#include <optional>

#include "sbl/linalg_core.hpp"
#include "sbl/mcmc_trace.hpp"
#include "sbl/propriety_gate.hpp"

namespace sbl {

struct RvmState {
  Vector beta;
  Vector lambda;
  double sigma2 = 1.0;
};

/// Which blocks are updated; a disabled block keeps its initial value.
struct GibbsBlocks {
  bool beta = true;
  bool lambda = true;
  bool sigma2 = true;
};

struct GibbsInit {
  std::optional<Vector> beta;
  std::optional<Vector> lambda;
  std::optional<double> sigma2;
};

/// N(mean, precision^-1), precision given by its Cholesky factor.
struct GaussianConditional {
  Vector mean;
  CovarianceFactor precision;
};

struct GammaParams {
  double shape = 0.0;
  double rate = 0.0;
  bool valid() const noexcept;
};

/// beta | lambda, sigma2, y: precision K^T K / sigma2 + D, mean (K^T K + D sigma2)^-1 K^T y.
GaussianConditional rvm_beta_conditional(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                                         const Eigen::Ref<const Vector>& lambda, double sigma2);
/// lambda_i | beta_i ~ Gamma(a + 1/2, b + beta_i^2 / 2).
GammaParams rvm_lambda_conditional(const RvmHyperParams& hp, double beta_i);
/// 1/sigma2 | beta, y ~ Gamma(c + n/2, d + |y - K beta|^2 / 2).
GammaParams rvm_precision_conditional(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                                      const RvmHyperParams& hp, const Eigen::Ref<const Vector>& beta);

/// Unnormalized log posterior density in (beta, lambda, 1/sigma2).
double rvm_log_joint(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                     const RvmHyperParams& hp, const RvmState& state);

double gamma_logpdf(double x, const GammaParams& g);
double gaussian_conditional_logpdf(const Eigen::Ref<const Vector>& x, const GaussianConditional& g);

/// Gibbs sampler for the full RVM hierarchy, update order beta, lambda,
/// 1/sigma2. Consults the propriety gate first: anything but Proper throws
/// ErrorCode::refused unless cfg.allow_improper is set.
McmcTrace run_chain(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                    const RvmHyperParams& hp, const GibbsConfig& cfg, const GibbsBlocks& blocks = {},
                    const GibbsInit& init = {});

}  // namespace sbl
