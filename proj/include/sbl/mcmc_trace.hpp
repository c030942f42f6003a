#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "sbl/kernel_design.hpp"

namespace sbl {

struct GibbsConfig {
  std::size_t n_iter = 1000;
  std::size_t burn_in = 0;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  bool allow_improper = false;

  void validate() const;
  /// Kept iterations: (n_iter - burn_in) / thin.
  std::size_t kept() const noexcept { return (n_iter - burn_in) / thin; }
};

/// Invalid full-conditional parameters met during a step (only reachable
/// under improper hyperparameters); the block keeps its previous value.
struct StepError {
  std::size_t iteration;
  std::string block;
  std::string message;
};

/// Kept draws, one row per kept iteration. z and theta are filled by the
/// classifier sampler only.
struct McmcTrace {
  Matrix beta;
  Matrix lambda;
  Vector sigma2;
  Matrix z;
  Vector theta;
  std::map<std::string, double> acceptance;  // per block; 1.0 for exact Gibbs blocks
  std::vector<StepError> step_errors;

  Eigen::Index rows() const noexcept { return sigma2.size(); }
  std::vector<std::string> column_names() const;
  /// All columns side by side, in column_names() order.
  Matrix columns() const;
};

/// CSV with header beta_0..beta_n, lambda_0..lambda_n, sigma2[, z_1..z_n, theta].
void write_trace_csv(const McmcTrace& trace, std::ostream& out);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q05 = 0.0;
  double median = 0.0;
  double q95 = 0.0;
  double ess = 0.0;
};

/// Effective sample size from the initial positive sequence of
/// autocovariance pair sums. A constant column reports its length.
double effective_sample_size(std::span<const double> x);
/// Linear-interpolation quantile of a sample.
double quantile(std::vector<double> x, double p);
/// Monte Carlo standard error of the mean, sd / sqrt(ESS).
double mc_standard_error(std::span<const double> x);

std::vector<ParameterSummary> summarize(const McmcTrace& trace);

}  // namespace sbl
