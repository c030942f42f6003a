#include "sbl/rvm_gibbs.hpp"

#include <cmath>
#include <numbers>

#include "sbl/errors.hpp"
#include "sbl/random.hpp"

namespace sbl {

bool GammaParams::valid() const noexcept {
  return shape > 0.0 && rate > 0.0 && std::isfinite(shape) && std::isfinite(rate);
}

GaussianConditional rvm_beta_conditional(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                                         const Eigen::Ref<const Vector>& lambda, double sigma2) {
  Matrix P = K.transpose() * K / sigma2;
  P.diagonal() += lambda;
  GaussianConditional g;
  g.precision = CovarianceFactor::of(P);
  g.mean = g.precision.solve(K.transpose() * y / sigma2);
  return g;
}

GammaParams rvm_lambda_conditional(const RvmHyperParams& hp, double beta_i) {
  return {hp.a + 0.5, hp.b + 0.5 * beta_i * beta_i};
}

GammaParams rvm_precision_conditional(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                                      const RvmHyperParams& hp, const Eigen::Ref<const Vector>& beta) {
  return {hp.c + 0.5 * static_cast<double>(y.size()), hp.d + 0.5 * (y - K * beta).squaredNorm()};
}

double rvm_log_joint(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                     const RvmHyperParams& hp, const RvmState& s) {
  const double n = static_cast<double>(y.size());
  const double tau = 1.0 / s.sigma2;
  const double log2pi = std::log(2.0 * std::numbers::pi);
  double lp = 0.5 * n * (std::log(tau) - log2pi) - 0.5 * tau * (y - K * s.beta).squaredNorm();
  for (Eigen::Index i = 0; i < s.beta.size(); ++i) {
    const double l = s.lambda(i);
    lp += 0.5 * (std::log(l) - log2pi) - 0.5 * l * s.beta(i) * s.beta(i);
    lp += (hp.a - 1.0) * std::log(l) - hp.b * l;
  }
  lp += (hp.c - 1.0) * std::log(tau) - hp.d * tau;
  return lp;
}

double gamma_logpdf(double x, const GammaParams& g) {
  return g.shape * std::log(g.rate) - std::lgamma(g.shape) + (g.shape - 1.0) * std::log(x) - g.rate * x;
}

double gaussian_conditional_logpdf(const Eigen::Ref<const Vector>& x, const GaussianConditional& g) {
  const Eigen::Index m = x.size();
  // |P|^(1/2) exp(-(x - mu)^T P (x - mu) / 2), P = L L^T
  const Vector w = g.precision.chol.transpose() * (x - g.mean);
  return -0.5 * (static_cast<double>(m) * std::log(2.0 * std::numbers::pi) - g.precision.logdet + w.squaredNorm());
}

McmcTrace run_chain(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                    const RvmHyperParams& hp, const GibbsConfig& cfg, const GibbsBlocks& blocks,
                    const GibbsInit& init) {
  cfg.validate();
  const Eigen::Index n = y.size();
  const Eigen::Index m = K.cols();
  if (K.rows() != n) throw_input("run_chain: K and y disagree on n");
  if (!y.allFinite() || !K.allFinite()) throw_input("run_chain: non-finite data");

  const ProprietyVerdict verdict = check_rvm_propriety(hp, GateData{y, K});
  if (verdict.status != ProprietyStatus::proper && !cfg.allow_improper)
    throw Error(ErrorCode::refused, "refusing to sample: propriety gate returned " +
                                        std::string(to_string(verdict.status)) + " (" +
                                        std::string(to_string(verdict.rule)) + "): " + verdict.explanation);

  RvmState s;
  s.beta = init.beta.value_or(Vector::Zero(m));
  s.lambda = init.lambda.value_or(Vector::Ones(m));
  if (init.sigma2) {
    s.sigma2 = *init.sigma2;
  } else {
    const double var = (y.array() - y.mean()).square().mean();
    s.sigma2 = var > 0.0 ? var : 1.0;
  }
  if (s.beta.size() != m || s.lambda.size() != m) throw_input("run_chain: initial state has the wrong length");
  if (!(s.sigma2 > 0.0) || !(s.lambda.array() > 0.0).all()) throw_input("run_chain: initial state not positive");

  McmcTrace tr;
  const auto kept = static_cast<Eigen::Index>(cfg.kept());
  tr.beta.resize(kept, m);
  tr.lambda.resize(kept, m);
  tr.sigma2.resize(kept);

  Rng rng(cfg.seed);
  std::size_t ok_beta = 0, ok_lambda = 0, ok_sigma = 0;
  Vector eps(m);
  Eigen::Index row = 0;
  for (std::size_t it = 0; it < cfg.n_iter; ++it) {
    if (blocks.beta) {
      try {
        const GaussianConditional g = rvm_beta_conditional(y, K, s.lambda, s.sigma2);
        for (Eigen::Index j = 0; j < m; ++j) eps(j) = rng.normal();
        // x = L^-T eps has covariance P^-1
        s.beta = g.mean + g.precision.chol.transpose().triangularView<Eigen::Upper>().solve(eps);
        ++ok_beta;
      } catch (const NumericError& e) {
        tr.step_errors.push_back({it, "beta", e.what()});
      }
    }
    if (blocks.lambda) {
      for (Eigen::Index j = 0; j < m; ++j) {
        const GammaParams g = rvm_lambda_conditional(hp, s.beta(j));
        const double v = g.valid() ? rng.gamma(g.shape, g.rate) : 0.0;
        if (v > 0.0 && std::isfinite(v)) {
          s.lambda(j) = v;
          ++ok_lambda;
        } else {
          tr.step_errors.push_back({it, "lambda_" + std::to_string(j),
                                    "invalid Gamma(" + std::to_string(g.shape) + ", " + std::to_string(g.rate) +
                                        ") full conditional or degenerate draw"});
        }
      }
    }
    if (blocks.sigma2) {
      const GammaParams g = rvm_precision_conditional(y, K, hp, s.beta);
      const double tau = g.valid() ? rng.gamma(g.shape, g.rate) : 0.0;
      if (tau > 0.0 && std::isfinite(tau) && std::isfinite(1.0 / tau)) {
        s.sigma2 = 1.0 / tau;
        ++ok_sigma;
      } else {
        tr.step_errors.push_back({it, "sigma2", "invalid Gamma(" + std::to_string(g.shape) + ", " +
                                                    std::to_string(g.rate) + ") full conditional or degenerate draw"});
      }
    }
    if (it >= cfg.burn_in && (it - cfg.burn_in + 1) % cfg.thin == 0 && row < kept) {
      tr.beta.row(row) = s.beta.transpose();
      tr.lambda.row(row) = s.lambda.transpose();
      tr.sigma2(row) = s.sigma2;
      ++row;
    }
  }
  const double iters = static_cast<double>(cfg.n_iter);
  if (blocks.beta) tr.acceptance["beta"] = static_cast<double>(ok_beta) / iters;
  if (blocks.lambda) tr.acceptance["lambda"] = static_cast<double>(ok_lambda) / (iters * static_cast<double>(m));
  if (blocks.sigma2) tr.acceptance["sigma2"] = static_cast<double>(ok_sigma) / iters;
  return tr;
}

}  // namespace sbl
