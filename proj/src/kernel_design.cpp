#include "sbl/kernel_design.hpp"

#include <cmath>

#include "sbl/errors.hpp"

namespace sbl {

std::string_view to_string(KernelKind kind) noexcept {
  switch (kind) {
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::laplace: return "laplace";
    case KernelKind::polynomial: return "polynomial";
    case KernelKind::linear: return "linear";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "gaussian" || name == "rbf") return KernelKind::gaussian;
  if (name == "laplace") return KernelKind::laplace;
  if (name == "polynomial") return KernelKind::polynomial;
  if (name == "linear") return KernelKind::linear;
  throw_config("unknown kernel kind '" + std::string(name) +
               "' (expected gaussian, laplace, polynomial or linear)");
}

void KernelSpec::validate() const {
  if (!(theta > 0.0) || !std::isfinite(theta))
    throw_config("kernel parameter theta must be positive and finite, got " + std::to_string(theta));
}

CovariateSet::CovariateSet(Matrix X) : X_(std::move(X)) {
  if (X_.rows() < 1 || X_.cols() < 1) throw_input("covariate set needs n >= 1 rows and p >= 1 columns");
  if (!X_.allFinite()) throw_input("covariate set contains missing or non-finite entries");
}

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Vector>& x1,
                   const Eigen::Ref<const Vector>& x2) {
  if (x1.size() != x2.size())
    throw_input("kernel_eval: dimension mismatch (" + std::to_string(x1.size()) + " vs " +
                std::to_string(x2.size()) + ")");
  spec.validate();
  switch (spec.kind) {
    case KernelKind::gaussian: {
      const double d2 = (x1 - x2).squaredNorm();
      return std::exp(-d2 / (2.0 * spec.theta * spec.theta));
    }
    case KernelKind::laplace: return std::exp(-(x1 - x2).norm() / spec.theta);
    case KernelKind::polynomial: {
      const double s = 1.0 + x1.dot(x2) / spec.theta;
      return s * s;
    }
    case KernelKind::linear: return x1.dot(x2);
  }
  return 0.0;
}

DesignMatrix::DesignMatrix(const CovariateSet& X, const KernelSpec& spec) : spec_(spec) {
  spec_.validate();
  const Eigen::Index n = X.rows();
  const Matrix& x = X.matrix();
  K_.resize(n, n + 1);
  K_.col(0).setOnes();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector xi = x.row(i).transpose();
    K_(i, i + 1) = kernel_eval(spec_, xi, xi);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = kernel_eval(spec_, xi, x.row(j).transpose());
      K_(i, j + 1) = v;
      K_(j, i + 1) = v;
    }
  }
}

DesignMatrix build_design_matrix(const CovariateSet& X, const KernelSpec& spec) {
  return DesignMatrix(X, spec);
}

Vector build_prediction_row(const CovariateSet& X, const Eigen::Ref<const Vector>& x_new,
                            const KernelSpec& spec) {
  if (x_new.size() != X.cols())
    throw_input("prediction row: x_new has " + std::to_string(x_new.size()) + " entries, expected " +
                std::to_string(X.cols()));
  const Eigen::Index n = X.rows();
  Vector k(n + 1);
  k(0) = 1.0;
  for (Eigen::Index j = 0; j < n; ++j) k(j + 1) = kernel_eval(spec, x_new, X.matrix().row(j).transpose());
  return k;
}

}  // namespace sbl
