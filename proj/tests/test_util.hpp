#pragma once

#include <Eigen/Dense>

#include "sbl/random.hpp"

namespace testutil {

inline Eigen::MatrixXd random_matrix(sbl::Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  Eigen::MatrixXd M(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) M(i, j) = scale * rng.normal();
  return M;
}

inline Eigen::VectorXd random_vector(sbl::Rng& rng, Eigen::Index n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale).col(0);
}

inline double uniform(sbl::Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

inline double log_uniform(sbl::Rng& rng, double lo, double hi) {
  return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

}  // namespace testutil
