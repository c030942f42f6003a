#include "sbl/rvm_regression.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "sbl/errors.hpp"

namespace sbl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_shapes(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                  const PrecisionDiag& lambda, double sigma2) {
  if (K.rows() != y.size())
    throw_input("K has " + std::to_string(K.rows()) + " rows but y has " + std::to_string(y.size()) + " entries");
  if (lambda.size() != K.cols())
    throw_input("lambda has " + std::to_string(lambda.size()) + " entries but K has " +
                std::to_string(K.cols()) + " columns");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw_input("sigma2 must be positive and finite");
  lambda.validate();
}

// Posterior moments on the retained columns, shared by evidence and fitting.
struct Retained {
  std::vector<Eigen::Index> idx;
  Matrix Kr;
  Vector lam;
  CovarianceFactor factor;               // of K_r^T K_r / sigma2 + D_r
  Vector mu;
};

Retained factor_retained(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                         const PrecisionDiag& lambda, double sigma2) {
  Retained r;
  r.idx = lambda.retained();
  if (r.idx.empty()) return r;
  r.Kr = select_columns(K, r.idx);
  r.lam.resize(static_cast<Eigen::Index>(r.idx.size()));
  for (std::size_t j = 0; j < r.idx.size(); ++j) r.lam(static_cast<Eigen::Index>(j)) = lambda.lambda(r.idx[j]);
  Matrix A = r.Kr.transpose() * r.Kr / sigma2;
  A.diagonal() += r.lam;
  r.factor = CovarianceFactor::of(A);
  r.mu = r.factor.solve(r.Kr.transpose() * y / sigma2);
  return r;
}

double evidence_from(const Retained& r, const Eigen::Ref<const Vector>& y, double sigma2) {
  const double n = static_cast<double>(y.size());
  double logdet = n * std::log(sigma2);
  double quad;
  if (r.idx.empty()) {
    quad = y.squaredNorm() / sigma2;
  } else {
    logdet += r.factor.logdet - r.lam.array().log().sum();
    // y^T C^-1 y = |y - K mu|^2 / sigma2 + mu^T D mu
    quad = (y - r.Kr * r.mu).squaredNorm() / sigma2 + (r.mu.array().square() * r.lam.array()).sum();
  }
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + logdet + quad);
}

}  // namespace

double log_marginal_likelihood(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                               const PrecisionDiag& lambda, double sigma2) {
  check_shapes(y, K, lambda, sigma2);
  return evidence_from(factor_retained(y, K, lambda, sigma2), y, sigma2);
}

EvidenceGradient log_marginal_gradient(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                                       const PrecisionDiag& lambda, double sigma2) {
  check_shapes(y, K, lambda, sigma2);
  const Matrix Cinv = smw_inverse(sigma2, K, lambda);
  const Vector alpha = Cinv * y;
  EvidenceGradient g;
  g.d_log_sigma2 = 0.5 * sigma2 * (alpha.squaredNorm() - Cinv.trace());
  g.d_log_lambda = Vector::Zero(K.cols());
  for (Eigen::Index i = 0; i < K.cols(); ++i) {
    if (lambda.pruned(i)) continue;
    const auto k = K.col(i);
    const double ka = k.dot(alpha);
    const double d_inv = 0.5 * (ka * ka - k.dot(Cinv * k));  // d/d(1/lambda_i)
    g.d_log_lambda(i) = -d_inv / lambda.lambda(i);
  }
  return g;
}

BetaPosterior posterior_beta(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                             const PrecisionDiag& lambda, double sigma2) {
  check_shapes(y, K, lambda, sigma2);
  const Retained r = factor_retained(y, K, lambda, sigma2);
  BetaPosterior post;
  post.retained = r.idx;
  post.mean = Vector::Zero(K.cols());
  if (r.idx.empty()) {
    post.cov.resize(0, 0);
    return post;
  }
  for (std::size_t j = 0; j < r.idx.size(); ++j) post.mean(r.idx[j]) = r.mu(static_cast<Eigen::Index>(j));
  post.cov = r.factor.inverse();
  return post;
}

namespace {

struct Candidate {
  PrecisionDiag lambda;
  double sigma2;
  double evidence;
};

double evidence_or_neg_inf(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                           const PrecisionDiag& lambda, double sigma2) {
  try {
    return evidence_from(factor_retained(y, K, lambda, sigma2), y, sigma2);
  } catch (const NumericError&) {
    return -kInf;
  }
}

}  // namespace

RvmFit fit_type2_ml(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                    const std::optional<FitInit>& init, const FitOptions& opts) {
  const Eigen::Index n = y.size();
  const Eigen::Index m = K.cols();
  if (n < 2) throw_input("fit_type2_ml needs at least two observations");
  if (K.rows() != n) throw_input("fit_type2_ml: K and y disagree on n");
  if (!y.allFinite() || !K.allFinite()) throw_input("fit_type2_ml: non-finite data");
  if (opts.max_iter < 1 || !(opts.tol > 0.0) || !(opts.prune_threshold > 0.0))
    throw_config("fit_type2_ml: max_iter, tol and prune_threshold must be positive");

  const double mean = y.mean();
  const double var = (y.array() - mean).square().mean();
  const double ms = y.squaredNorm() / static_cast<double>(n);
  const double scale = var > 0.0 ? var : (ms > 0.0 ? ms : 1.0);
  const double floor = 1e-12 * scale;

  PrecisionDiag lam;
  double sigma2;
  if (init) {
    if (init->lambda.size() != m) throw_input("fit_type2_ml: init lambda has the wrong length");
    lam = PrecisionDiag(init->lambda);
    if (!(init->sigma2 > 0.0)) throw_input("fit_type2_ml: init sigma2 must be positive");
    sigma2 = init->sigma2;
  } else {
    lam = PrecisionDiag(Vector::Ones(m));
    sigma2 = 0.1 * scale;
  }
  sigma2 = std::max(sigma2, floor);

  auto prune = [&](double v) { return (v > opts.prune_threshold || !std::isfinite(v)) ? kInf : v; };

  RvmFit fit;
  double L = evidence_from(factor_retained(y, K, lam, sigma2), y, sigma2);
  fit.evidence_trace.push_back(L);

  int it = 0;
  for (; it < opts.max_iter; ++it) {
    const Retained r = factor_retained(y, K, lam, sigma2);
    const Matrix Sigma = r.idx.empty() ? Matrix() : r.factor.inverse();
    const Vector resid = r.idx.empty() ? Vector(y) : Vector(y - r.Kr * r.mu);
    const double rss = resid.squaredNorm();
    double sum_gamma = 0.0;
    Vector gamma(static_cast<Eigen::Index>(r.idx.size()));
    for (Eigen::Index j = 0; j < gamma.size(); ++j) {
      gamma(j) = 1.0 - r.lam(j) * Sigma(j, j);
      sum_gamma += gamma(j);
    }

    // Fixed-point (MacKay) candidate.
    Candidate fp{lam, sigma2, -kInf};
    for (std::size_t j = 0; j < r.idx.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double mu2 = r.mu(jj) * r.mu(jj);
      fp.lambda.lambda(r.idx[j]) = (gamma(jj) > 0.0 && mu2 > 0.0) ? prune(gamma(jj) / mu2) : kInf;
    }
    const double dof = static_cast<double>(n) - sum_gamma;
    if (dof > 0.0) fp.sigma2 = std::max(rss / dof, floor);
    fp.evidence = evidence_or_neg_inf(y, K, fp.lambda, fp.sigma2);

    Candidate next = fp;
    if (!(fp.evidence >= L)) {
      // EM candidate, first with pruning, then without.
      Candidate em{lam, std::max((rss + sigma2 * sum_gamma) / static_cast<double>(n), floor), -kInf};
      Candidate em_raw = em;
      for (std::size_t j = 0; j < r.idx.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double v = 1.0 / (r.mu(jj) * r.mu(jj) + Sigma(jj, jj));
        em.lambda.lambda(r.idx[j]) = prune(v);
        em_raw.lambda.lambda(r.idx[j]) = std::isfinite(v) ? v : kInf;
      }
      em.evidence = evidence_or_neg_inf(y, K, em.lambda, em.sigma2);
      if (em.evidence >= L) {
        next = em;
      } else {
        em_raw.evidence = evidence_or_neg_inf(y, K, em_raw.lambda, em_raw.sigma2);
        if (!(em_raw.evidence >= L)) {
          // no step improves on the current iterate: stationary within round-off
          fit.converged = true;
          break;
        }
        next = em_raw;
      }
    }

    const double change = next.evidence - L;
    lam = next.lambda;
    sigma2 = next.sigma2;
    L = next.evidence;
    fit.evidence_trace.push_back(L);
    if (change <= opts.tol * std::max(1.0, std::abs(L))) {
      fit.converged = true;
      ++it;
      break;
    }
  }

  fit.iterations = it;
  fit.lambda_hat = lam.lambda;
  fit.sigma2_hat = sigma2;
  fit.log_evidence = L;
  const BetaPosterior post = posterior_beta(y, K, lam, sigma2);
  fit.beta_mean = post.mean;
  fit.beta_cov = post.cov;
  fit.relevance_indices = post.retained;
  if (!fit.converged)
    fit.warnings.push_back("type-II ML did not converge within " + std::to_string(opts.max_iter) +
                           " iterations; returning the best iterate");
  if (fit.relevance_indices.empty() && y.squaredNorm() > 0.0) {
    fit.degenerate = true;
    fit.warnings.push_back("degenerate fit: every column was pruned although y is nonzero");
  }
  return fit;
}

PredictiveDistribution predict(const RvmFit& fit, const Eigen::Ref<const Vector>& k_new) {
  if (k_new.size() != fit.beta_mean.size())
    throw_input("predict: k_new has " + std::to_string(k_new.size()) + " entries, expected " +
                std::to_string(fit.beta_mean.size()));
  PredictiveDistribution out;
  out.mean = k_new.dot(fit.beta_mean);
  out.variance = fit.sigma2_hat;
  const auto& idx = fit.relevance_indices;
  if (!idx.empty()) {
    Vector kr(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) kr(static_cast<Eigen::Index>(j)) = k_new(idx[j]);
    out.variance += std::max(0.0, kr.dot(fit.beta_cov * kr));
  }
  return out;
}

CrossValidationResult cross_validate_theta(const CovariateSet& X, const Eigen::Ref<const Vector>& y,
                                           KernelKind kind, const std::vector<double>& thetas, int folds,
                                           const FitOptions& opts) {
  const Eigen::Index n = X.rows();
  if (y.size() != n) throw_input("cross_validate_theta: X and y disagree on n");
  if (thetas.empty()) throw_input("cross_validate_theta: empty theta grid");
  if (folds < 2) throw_config("cross_validate_theta: need at least two folds");
  folds = static_cast<int>(std::min<Eigen::Index>(folds, n));
  if (n - (n + folds - 1) / folds < 2) throw_input("cross_validate_theta: too few rows for the requested folds");

  CrossValidationResult res;
  res.thetas = thetas;
  double best = kInf;
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    const KernelSpec spec{kind, thetas[t]};
    spec.validate();
    double sse = 0.0;
    bool ok = true;
    for (int f = 0; f < folds && ok; ++f) {
      std::vector<Eigen::Index> train, test;
      for (Eigen::Index i = 0; i < n; ++i) (i % folds == f ? test : train).push_back(i);
      Matrix Xt(static_cast<Eigen::Index>(train.size()), X.cols());
      Vector yt(static_cast<Eigen::Index>(train.size()));
      for (std::size_t i = 0; i < train.size(); ++i) {
        Xt.row(static_cast<Eigen::Index>(i)) = X.matrix().row(train[i]);
        yt(static_cast<Eigen::Index>(i)) = y(train[i]);
      }
      const CovariateSet Xtrain(Xt);
      try {
        const RvmFit fit = fit_type2_ml(yt, build_design_matrix(Xtrain, spec), std::nullopt, opts);
        for (Eigen::Index i : test) {
          const double e = predict(fit, build_prediction_row(Xtrain, X.row(i), spec)).mean - y(i);
          sse += e * e;
        }
      } catch (const NumericError&) {
        ok = false;
      }
    }
    const double rmse = ok ? std::sqrt(sse / static_cast<double>(n)) : kInf;
    res.rmse.push_back(rmse);
    if (rmse < best) {
      best = rmse;
      res.best = t;
    }
  }
  return res;
}

}  // namespace sbl
