#include "sbl/sparse_classifier.hpp"

#include <cmath>
#include <numbers>

#include "sbl/errors.hpp"
#include "sbl/quadrature.hpp"
#include "sbl/random.hpp"

namespace sbl {

namespace {

int checked_label(int y) {
  if (y != 0 && y != 1) throw_input("classifier: labels must be 0 or 1, got " + std::to_string(y));
  return y;
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

Vector labels_checked(const Eigen::Ref<const Vector>& y01) {
  for (Eigen::Index i = 0; i < y01.size(); ++i)
    if (y01(i) != 0.0 && y01(i) != 1.0)
      throw_input("classifier: response at row " + std::to_string(i + 1) + " is not 0 or 1");
  return y01;
}

// Reflect into (lo, hi); returns nullopt when the value lands on an endpoint.
std::optional<double> reflect(double x, double lo, double hi) {
  const double w = hi - lo;
  double r = std::fmod(x - lo, 2.0 * w);
  if (r < 0.0) r += 2.0 * w;
  const double v = r <= w ? lo + r : hi - (r - w);
  if (!(v > lo && v < hi)) return std::nullopt;
  return v;
}

}  // namespace

std::string_view to_string(LossKind kind) noexcept {
  return kind == LossKind::logistic ? "logistic" : "hinge";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "logistic") return LossKind::logistic;
  if (name == "hinge") return LossKind::hinge;
  throw_config("unknown loss '" + std::string(name) + "' (expected logistic or hinge)");
}

double loss_eval(LossKind kind, int y, double z) {
  checked_label(y);
  if (kind == LossKind::logistic) return softplus((1.0 - 2.0 * y) * z);
  return std::max(0.0, 1.0 - (2.0 * y - 1.0) * z);
}

double class_probability(LossKind kind, double z) {
  if (kind == LossKind::logistic) return 1.0 / (1.0 + std::exp(-z));
  return 1.0 / (1.0 + std::exp(loss_eval(kind, 1, z) - loss_eval(kind, 0, z)));
}

void ClassifierModel::validate() const {
  priors.validate();
  if (theta_init && !(*theta_init > priors.u1 && *theta_init < priors.u2))
    throw_config("classifier: theta_init must lie in (u1, u2)");
}

double ClassifierModel::initial_theta() const { return theta_init.value_or(0.5 * (priors.u1 + priors.u2)); }

GaussianConditional classifier_beta_conditional(const Eigen::Ref<const Vector>& z, const Eigen::Ref<const Matrix>& K,
                                                const Eigen::Ref<const Vector>& lambda, double sigma2) {
  Matrix P = K.transpose() * K;
  P.diagonal() += lambda;
  P /= sigma2;
  GaussianConditional g;
  g.precision = CovarianceFactor::of(P);
  g.mean = g.precision.solve(K.transpose() * z / sigma2);
  return g;
}

GammaParams classifier_lambda_conditional(const LambdaPrior& prior, double beta_i, double sigma2) {
  return {prior.shape() + 0.5, prior.rate() + 0.5 * beta_i * beta_i / sigma2};
}

GammaParams classifier_precision_conditional(const Eigen::Ref<const Vector>& z, const Eigen::Ref<const Matrix>& K,
                                             const ClassifierPriorSpec& priors, const Eigen::Ref<const Vector>& beta,
                                             const Eigen::Ref<const Vector>& lambda) {
  const double n = static_cast<double>(z.size());
  const double quad = (z - K * beta).squaredNorm() + (lambda.array() * beta.array().square()).sum();
  return {priors.c + 0.5 * n + 0.5 * (n + 1.0), priors.d + 0.5 * quad};
}

double classifier_log_joint(const Eigen::Ref<const Vector>& y01, const Eigen::Ref<const Matrix>& K,
                            const ClassifierModel& model, const LatentState& s, bool use_loss) {
  const double log2pi = std::log(2.0 * std::numbers::pi);
  const double tau = 1.0 / s.sigma2;
  const auto n = static_cast<double>(s.z.size());
  double lp = 0.0;
  if (use_loss)
    for (Eigen::Index i = 0; i < s.z.size(); ++i)
      lp -= loss_eval(model.loss, static_cast<int>(y01(i)), s.z(i));
  lp += 0.5 * n * (std::log(tau) - log2pi) - 0.5 * tau * (s.z - K * s.beta).squaredNorm();
  for (Eigen::Index i = 0; i < s.beta.size(); ++i) {
    const double l = s.lambda(i);
    lp += 0.5 * (std::log(l * tau) - log2pi) - 0.5 * l * tau * s.beta(i) * s.beta(i);
    if (i > 0) lp += (model.priors.lambda_prior.shape() - 1.0) * std::log(l) - model.priors.lambda_prior.rate() * l;
  }
  lp += (model.priors.c - 1.0) * std::log(tau) - model.priors.d * tau;
  if (!(s.theta > model.priors.u1 && s.theta < model.priors.u2))
    return -std::numeric_limits<double>::infinity();
  return lp;
}

McmcTrace run_classifier_mcmc(const Eigen::Ref<const Vector>& y_in, const CovariateSet& X,
                              const ClassifierModel& model, const GibbsConfig& cfg, const ClassifierBlocks& blocks,
                              const ClassifierInit& init) {
  cfg.validate();
  model.validate();
  const Vector y = labels_checked(y_in);
  const Eigen::Index n = y.size();
  if (n == 0) throw_input("classifier: empty training set");
  if (X.rows() != n) throw_input("classifier: X and y disagree on n");
  const ClassifierPriorSpec& pr = model.priors;
  if (!pr.lambda_prior.is_gamma_form())
    throw Error(ErrorCode::unsupported,
                "classifier sampler supports only lambda priors of the form lambda^(a-1) exp(-b lambda), got " +
                    std::string(to_string(pr.lambda_prior.kind)));

  const ProprietyVerdict verdict = check_classifier_propriety(pr);
  if (verdict.status != ProprietyStatus::proper && !cfg.allow_improper)
    throw Error(ErrorCode::refused, "refusing to sample: classifier propriety gate returned " +
                                        std::string(to_string(verdict.status)) + " (" +
                                        std::string(to_string(verdict.rule)) + "): " + verdict.explanation);

  const Eigen::Index m = n + 1;
  LatentState s;
  s.theta = model.initial_theta();
  s.z = init.z.value_or(Vector((2.0 * y.array() - 1.0).matrix()));
  s.beta = init.beta.value_or(Vector::Zero(m));
  if (init.lambda) {
    s.lambda = *init.lambda;
  } else {
    s.lambda = Vector::Ones(m);
  }
  s.lambda(0) = pr.lambda0;
  s.sigma2 = init.sigma2.value_or(1.0);
  if (s.z.size() != n || s.beta.size() != m || s.lambda.size() != m)
    throw_input("classifier: initial state has the wrong length");
  if (!(s.sigma2 > 0.0) || !(s.lambda.array() > 0.0).all()) throw_input("classifier: initial state not positive");

  Matrix K = build_design_matrix(X, {model.kernel, s.theta}).matrix();

  McmcTrace tr;
  const auto kept = static_cast<Eigen::Index>(cfg.kept());
  tr.beta.resize(kept, m);
  tr.lambda.resize(kept, m);
  tr.sigma2.resize(kept);
  tr.z.resize(kept, n);
  tr.theta.resize(kept);

  Rng rng(cfg.seed);
  double z_scale = 1.0;
  const double theta_scale = 0.05 * (pr.u2 - pr.u1);
  std::size_t z_acc = 0, z_tot = 0, z_batch_acc = 0, z_batch_tot = 0, z_batches = 0;
  std::size_t th_acc = 0, th_tot = 0, ok_beta = 0, ok_lambda = 0, ok_sigma = 0;
  Vector eps(m);
  // Noise signs follow the labels, so flipping every label mirrors (z, beta) under the same seed.
  const double beta_sign = 2.0 * y(0) - 1.0;
  Eigen::Index row = 0;

  for (std::size_t it = 0; it < cfg.n_iter; ++it) {
    if (blocks.z) {
      const Vector mu = K * s.beta;
      const double sd = std::sqrt(s.sigma2);
      for (Eigen::Index i = 0; i < n; ++i) {
        const int yi = static_cast<int>(y(i));
        auto logt = [&](double zi) {
          const double r = (zi - mu(i)) / sd;
          return -0.5 * r * r - (blocks.use_loss ? loss_eval(model.loss, yi, zi) : 0.0);
        };
        const double prop = s.z(i) + (2.0 * yi - 1.0) * z_scale * rng.normal();
        const double log_u = std::log(rng.uniform());
        const bool accept = log_u < logt(prop) - logt(s.z(i));
        if (accept) s.z(i) = prop;
        if (it < cfg.burn_in) {
          z_batch_acc += accept;
          ++z_batch_tot;
        } else {
          z_acc += accept;
          ++z_tot;
        }
      }
      // Robbins-Monro step on log scale every 50 sweeps, burn-in only.
      if (it < cfg.burn_in && (it + 1) % 50 == 0) {
        const double rate = static_cast<double>(z_batch_acc) / static_cast<double>(z_batch_tot);
        ++z_batches;
        z_scale *= std::exp((rate - 0.4) / std::sqrt(static_cast<double>(z_batches)));
        z_batch_acc = z_batch_tot = 0;
      }
    }
    if (blocks.beta) {
      try {
        const GaussianConditional g = classifier_beta_conditional(s.z, K, s.lambda, s.sigma2);
        for (Eigen::Index j = 0; j < m; ++j) eps(j) = beta_sign * rng.normal();
        s.beta = g.mean + g.precision.chol.transpose().triangularView<Eigen::Upper>().solve(eps);
        ++ok_beta;
      } catch (const NumericError& e) {
        tr.step_errors.push_back({it, "beta", e.what()});
      }
    }
    if (blocks.lambda) {
      for (Eigen::Index j = 1; j < m; ++j) {
        const GammaParams g = classifier_lambda_conditional(pr.lambda_prior, s.beta(j), s.sigma2);
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
      const GammaParams g = classifier_precision_conditional(s.z, K, pr, s.beta, s.lambda);
      const double tau = g.valid() ? rng.gamma(g.shape, g.rate) : 0.0;
      if (tau > 0.0 && std::isfinite(tau) && std::isfinite(1.0 / tau)) {
        s.sigma2 = 1.0 / tau;
        ++ok_sigma;
      } else {
        tr.step_errors.push_back({it, "sigma2", "invalid Gamma(" + std::to_string(g.shape) + ", " +
                                                    std::to_string(g.rate) + ") full conditional or degenerate draw"});
      }
    }
    if (blocks.theta) {
      const double step = theta_scale * rng.normal();
      const double log_u = std::log(rng.uniform());
      ++th_tot;
      if (const auto prop = reflect(s.theta + step, pr.u1, pr.u2)) {
        const Matrix Kp = build_design_matrix(X, {model.kernel, *prop}).matrix();
        const double cur = (s.z - K * s.beta).squaredNorm();
        const double nxt = (s.z - Kp * s.beta).squaredNorm();
        if (log_u < -0.5 * (nxt - cur) / s.sigma2) {
          s.theta = *prop;
          K = Kp;
          ++th_acc;
        }
      }
    }
    if (it >= cfg.burn_in && (it - cfg.burn_in + 1) % cfg.thin == 0 && row < kept) {
      tr.beta.row(row) = s.beta.transpose();
      tr.lambda.row(row) = s.lambda.transpose();
      tr.sigma2(row) = s.sigma2;
      tr.z.row(row) = s.z.transpose();
      tr.theta(row) = s.theta;
      ++row;
    }
  }
  const double iters = static_cast<double>(cfg.n_iter);
  if (blocks.z && z_tot > 0) tr.acceptance["z"] = static_cast<double>(z_acc) / static_cast<double>(z_tot);
  if (blocks.beta) tr.acceptance["beta"] = static_cast<double>(ok_beta) / iters;
  if (blocks.lambda) tr.acceptance["lambda"] = static_cast<double>(ok_lambda) / (iters * static_cast<double>(n));
  if (blocks.sigma2) tr.acceptance["sigma2"] = static_cast<double>(ok_sigma) / iters;
  if (blocks.theta && th_tot > 0) tr.acceptance["theta"] = static_cast<double>(th_acc) / static_cast<double>(th_tot);
  return tr;
}

ClassProbability predict_prob(const McmcTrace& trace, const CovariateSet& X, const Eigen::Ref<const Vector>& x_new,
                              const ClassifierModel& model) {
  const Eigen::Index r = trace.rows();
  if (r == 0) throw_input("predict_prob: empty trace");
  if (trace.theta.size() != r || trace.beta.cols() != X.rows() + 1)
    throw_input("predict_prob: trace does not match the training covariates");
  if (x_new.size() != X.cols()) throw_input("predict_prob: x_new has the wrong dimension");
  const auto& gh = quad::gauss_hermite(32);
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  std::vector<double> p(static_cast<std::size_t>(r));
  for (Eigen::Index t = 0; t < r; ++t) {
    const Vector k = build_prediction_row(X, x_new, {model.kernel, trace.theta(t)});
    const double mean = k.dot(trace.beta.row(t).transpose());
    const double s = std::sqrt(2.0 * trace.sigma2(t));
    double acc = 0.0;
    for (std::size_t j = 0; j < gh.nodes.size(); ++j)
      acc += gh.weights[j] * class_probability(model.loss, mean + s * gh.nodes[j]);
    p[static_cast<std::size_t>(t)] = std::clamp(acc * inv_sqrt_pi, 0.0, 1.0);
  }
  ClassProbability out;
  double sum = 0.0;
  for (double v : p) sum += v;
  out.probability = std::clamp(sum / static_cast<double>(r), 0.0, 1.0);
  out.mcse = r >= 2 ? mc_standard_error(p) : 0.0;
  return out;
}

}  // namespace sbl
