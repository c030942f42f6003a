#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sbl/linalg_core.hpp"
#include "sbl/mcmc_trace.hpp"
#include "sbl/propriety_gate.hpp"

namespace sbl {

/// Random test problem: lambda_i in [1e-3, 1e3], sigma2 in [1e-2, 1e2],
/// n <= 6. Some instances repeat a covariate row so that K loses rank.
struct RandomInstance {
  int n = 0;
  std::uint64_t seed = 0;
  Vector y;
  Matrix X;
  KernelSpec kernel;
  Matrix K;
  PrecisionDiag lambda;
  double sigma2 = 1.0;
};

/// n = 0 draws n uniformly from 1..6.
RandomInstance random_instance(std::uint64_t seed, int n = 0);

/// f1(s) = exp{-y^T (sigma2 I + K diag(s) K^T)^-1 y / 2} as a function of the
/// inverse precisions s_i = 1 / lambda_i. Evaluated in extended precision.
class F1Evaluator {
 public:
  F1Evaluator(Vector y, Matrix K, double sigma2);

  double log_value(const Eigen::Ref<const Vector>& s) const;
  double value(const Eigen::Ref<const Vector>& s) const { return std::exp(log_value(s)); }
  /// d f1 / d s_i = f1 (k_i^T C^-1 y)^2 / 2.
  double derivative(const Eigen::Ref<const Vector>& s, Eigen::Index i) const;

 private:
  Vector y_;
  Matrix K_;
  double sigma2_;
};

/// Inverse precisions of an instance, 0 at pruned indices.
Vector inverse_precisions(const PrecisionDiag& lambda);

struct Lemma2Check {
  bool lower_ok = false;
  bool upper_ok = false;
  double log_f1 = 0.0;
  double log_lower = 0.0;  // -y^T y / (2 sigma2)
  double log_upper = 0.0;  // -y^T (I - P_K) y / (2 sigma2)
};

/// exp{-y^T y/(2 sigma2)} <= f1 <= exp{-y^T(I - P_K)y/(2 sigma2)}, compared
/// on the log scale with tolerance 1e-12 * max(1, |bound|).
Lemma2Check verify_lemma2_bounds(const RandomInstance& inst);

struct MonotoneCheck {
  bool ok = false;
  double finite_difference = 0.0;
  double analytic = 0.0;
};

/// Central difference of f1 in s_i = 1/lambda_i with step h (forward when
/// s_i < h); ok when it is >= -1e-8.
MonotoneCheck verify_monotone_f1(const RandomInstance& inst, Eigen::Index i, double h);

struct EigenBoundsCheck {
  bool ok = false;
  double log_middle = 0.0;  // -log|K^T K + D sigma2| / 2
  double log_lower = 0.0;   // -sum log(lambda_i sigma2 + e_max) / 2
  double log_upper = 0.0;   // -sum log(lambda_i sigma2) / 2
};

/// Determinant sandwich for K^T K + D sigma2 with tolerance
/// 1e-10 * max(1, |bound|) on the log scale.
EigenBoundsCheck verify_eigen_bounds(const RandomInstance& inst);

struct SmwCheck {
  bool ok = false;
  double max_rel_error = 0.0;
};

/// smw_inverse against an extended-precision dense inverse of
/// sigma2 I + K D^-1 K^T; ok when the max entry error relative to the
/// largest entry is <= 1e-8.
SmwCheck verify_smw(const RandomInstance& inst);

enum class EndpointStatus { finite, divergent_at_zero, divergent_at_infinity };

std::string_view to_string(EndpointStatus s) noexcept;

struct Lemma4Quadrature {
  double value = 0.0;  // infinity when divergent
  double error = 0.0;
  EndpointStatus status = EndpointStatus::finite;
};

/// Integral of t^-(a+1) (k + t)^-1/2 over (lower, T]; T may be infinite.
/// t = u^(-1/a) removes the singularity at 0 when a < 0, and the range
/// t > 1 is integrated in log t (finite T) or through w = t^-(a+1/2).
Lemma4Quadrature lemma4_quadrature(double a, double k, double T, double lower = 0.0);

/// I(T): the marginal-density integral restricted to lambda_i, 1/sigma2 in
/// [1/T, T], computed by nested adaptive quadrature in log coordinates
/// (beta integrated analytically). n <= 2.
struct MassOptions {
  double rel_tol = 1e-6;
  int max_panels = 200;
  int initial_panels = 8;
};

struct MassResult {
  double value = 0.0;
  double log_value = 0.0;
  bool converged = false;
};

MassResult truncated_marginal_mass(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                                   const RvmHyperParams& hp, double T, const MassOptions& opt = {});

/// Classifier analog under the Jeffreys prior prod_{i=0..n} lambda_i^-1 with
/// z fixed and sigma2 = 1: integral of N(z; 0, I + K D^-1 K^T) pi(lambda)
/// over lambda in [1/T, T]^(n+1). n <= 2.
MassResult truncated_classifier_jeffreys_mass(const Eigen::Ref<const Vector>& z, const Eigen::Ref<const Matrix>& K,
                                              double T, const MassOptions& opt = {});

/// Lower-bound check for b = 0: integral over lambda in [1/T, T]^(n+1) of
/// f(y | lambda, sigma2) prod lambda_i^(a-1) against
/// sigma (2 pi)^-n/2 exp{-y^T y/(2 sigma2)} [e_max^-1/2 J]^(n+1), where J
/// integrates t^-(a+1)(sigma2/e_max + t)^-1/2 over [1/T, T].
struct LowerBoundCheck {
  bool ok = false;
  double integral = 0.0;
  double bound = 0.0;
};

LowerBoundCheck verify_thm1_lower_bound(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                                        double a, double sigma2, double T);

enum class ProbeVerdict { convergent_estimate, divergence_evidence };

std::string_view to_string(ProbeVerdict v) noexcept;

struct TruncationReport {
  std::vector<double> T_grid;
  std::vector<double> I_values;
  double growth_exponent = 0.0;   // slope of log I against log T over the last interval
  double decade_growth = 0.0;     // I(T_last) / I(T_last / 10) - 1, interpolated on the grid
  ProbeVerdict verdict = ProbeVerdict::convergent_estimate;
  std::optional<double> estimate; // extrapolated limit, convergent case only
  bool converged = true;          // every quadrature met its tolerance

  void write_csv(std::ostream& out) const;
};

/// Geometric grid from 10^lo to 10^hi with `per_decade` points per decade.
std::vector<double> geometric_grid(double lo_exp, double hi_exp, int per_decade = 1);

/// Verdict from raw values: DivergenceEvidence when the final-decade growth
/// exceeds 5%, else ConvergentEstimate with an Aitken-extrapolated limit.
TruncationReport make_truncation_report(std::vector<double> T_grid, std::vector<double> I_values,
                                        bool converged = true);

TruncationReport divergence_probe(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                                  const RvmHyperParams& hp, const std::vector<double>& T_grid,
                                  const MassOptions& opt = {});
TruncationReport classifier_jeffreys_probe(const Eigen::Ref<const Vector>& z, const Eigen::Ref<const Matrix>& K,
                                           const std::vector<double>& T_grid, const MassOptions& opt = {});

/// Posterior mean of beta under the full hierarchy by quadrature: with
/// lambda = eta / sigma2 the conditional mean (K^T K + D_eta)^-1 K^T y no
/// longer depends on sigma2, which is integrated out in closed form.
/// Requires a proper configuration with a > 0 and b > 0; n <= 2.
Vector posterior_beta_mean_quadrature(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                                      const RvmHyperParams& hp, double rel_tol = 1e-6);

struct DemoReport {
  ProprietyVerdict gate;
  std::vector<ParameterSummary> summaries;  // lambda and sigma2 as log_lambda_i, log_sigma2
  std::size_t step_errors = 0;
  TruncationReport probe;
  std::vector<std::string> notes;
};

/// Runs the Gibbs sampler on a gate-Improper configuration next to a
/// divergence probe of the same configuration. Refuses when the gate does
/// not say Improper; cfg.allow_improper must be set.
DemoReport impropriety_demo(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& K,
                            const RvmHyperParams& hp, const GibbsConfig& cfg,
                            const std::vector<double>& T_grid = geometric_grid(1, 5));

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string first_failure;
};

/// Every property suite of the lab over `instances` random instances.
std::vector<SuiteResult> run_bound_suites(std::uint64_t seed, std::size_t instances);

}  // namespace sbl
