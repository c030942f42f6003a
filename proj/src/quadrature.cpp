#include "sbl/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <map>
#include <mutex>
#include <numbers>

#include "sbl/errors.hpp"

namespace sbl::quad {

namespace {

GaussHermiteRule build_gauss_hermite(int m) {
  // Jacobi matrix of the Hermite recurrence: zero diagonal, sqrt(k/2) off-diagonal.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  for (int k = 1; k < m; ++k) {
    const double b = std::sqrt(0.5 * k);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  GaussHermiteRule rule;
  rule.nodes.resize(static_cast<std::size_t>(m));
  rule.weights.resize(static_cast<std::size_t>(m));
  const double mu0 = std::sqrt(std::numbers::pi);
  for (int i = 0; i < m; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    rule.nodes[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    rule.weights[static_cast<std::size_t>(i)] = mu0 * v0 * v0;
  }
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite(int m) {
  if (m < 1) throw_input("gauss_hermite: need at least one node");
  static std::mutex mu;
  static std::map<int, GaussHermiteRule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(m);
  if (it == cache.end()) it = cache.emplace(m, build_gauss_hermite(m)).first;
  return it->second;
}

}  // namespace sbl::quad
