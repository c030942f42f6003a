#include "sbl/mcmc_trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "sbl/errors.hpp"

namespace sbl {

void GibbsConfig::validate() const {
  if (n_iter == 0) throw_config("gibbs: n_iter must be positive");
  if (burn_in >= n_iter) throw_config("gibbs: burn_in must be smaller than n_iter");
  if (thin == 0) throw_config("gibbs: thin must be positive");
  if (kept() == 0) throw_config("gibbs: configuration keeps no draws");
}

std::vector<std::string> McmcTrace::column_names() const {
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < beta.cols(); ++j) names.push_back("beta_" + std::to_string(j));
  for (Eigen::Index j = 0; j < lambda.cols(); ++j) names.push_back("lambda_" + std::to_string(j));
  names.emplace_back("sigma2");
  for (Eigen::Index j = 0; j < z.cols(); ++j) names.push_back("z_" + std::to_string(j + 1));
  if (theta.size() > 0) names.emplace_back("theta");
  return names;
}

Matrix McmcTrace::columns() const {
  const Eigen::Index r = rows();
  const Eigen::Index c = beta.cols() + lambda.cols() + 1 + z.cols() + (theta.size() > 0 ? 1 : 0);
  Matrix M(r, c);
  Eigen::Index at = 0;
  M.middleCols(at, beta.cols()) = beta;
  at += beta.cols();
  M.middleCols(at, lambda.cols()) = lambda;
  at += lambda.cols();
  M.col(at++) = sigma2;
  if (z.cols() > 0) {
    M.middleCols(at, z.cols()) = z;
    at += z.cols();
  }
  if (theta.size() > 0) M.col(at) = theta;
  return M;
}

void write_trace_csv(const McmcTrace& trace, std::ostream& out) {
  const auto names = trace.column_names();
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  out << '\n';
  const Matrix M = trace.columns();
  char buf[32];
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", M(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

double effective_sample_size(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) throw_input("effective_sample_size: empty sample");
  if (n < 4) return static_cast<double>(n);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mean) * (x[i + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double g0 = autocov(0);
  if (!(g0 > 0.0)) return static_cast<double>(n);
  // Geyer: sum consecutive pairs while positive and monotone.
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = autocov(2 * k) + autocov(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    sum += pair;
    prev = pair;
  }
  const double tau = std::max(-1.0 + 2.0 * sum / g0, 1.0 / std::log10(static_cast<double>(n)));
  return std::min(static_cast<double>(n) / tau, static_cast<double>(n) * std::log10(static_cast<double>(n)));
}

double quantile(std::vector<double> x, double p) {
  if (x.empty()) throw_input("quantile: empty sample");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double mc_standard_error(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw_input("mc_standard_error: need at least two draws");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return sd / std::sqrt(effective_sample_size(x));
}

std::vector<ParameterSummary> summarize(const McmcTrace& trace) {
  if (trace.rows() == 0) throw_input("summarize: empty trace");
  const Matrix M = trace.columns();
  const auto names = trace.column_names();
  std::vector<ParameterSummary> out;
  out.reserve(names.size());
  const auto n = static_cast<std::size_t>(M.rows());
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = M(static_cast<Eigen::Index>(i), j);
    ParameterSummary s;
    s.name = names[static_cast<std::size_t>(j)];
    s.mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : col) ss += (v - s.mean) * (v - s.mean);
    s.sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    s.q05 = quantile(col, 0.05);
    s.median = quantile(col, 0.5);
    s.q95 = quantile(col, 0.95);
    s.ess = effective_sample_size(col);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace sbl
