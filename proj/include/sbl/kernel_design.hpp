#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>

namespace sbl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class KernelKind { gaussian, laplace, polynomial, linear };

std::string_view to_string(KernelKind kind) noexcept;
KernelKind parse_kernel_kind(std::string_view name);

/// A reproducing kernel k_theta. theta is the bandwidth for gaussian and
/// laplace kernels and the scale for the polynomial kernel; the linear
/// kernel ignores it but still requires it to be positive.
struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;
  double theta = 1.0;

  void validate() const;
};

/// Observations stored row-wise: row i is x_i.
class CovariateSet {
 public:
  explicit CovariateSet(Matrix X);

  const Matrix& matrix() const noexcept { return X_; }
  Eigen::Index rows() const noexcept { return X_.rows(); }
  Eigen::Index cols() const noexcept { return X_.cols(); }
  Vector row(Eigen::Index i) const { return X_.row(i).transpose(); }

 private:
  Matrix X_;
};

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Vector>& x1,
                   const Eigen::Ref<const Vector>& x2);

/// n x (n+1) kernel design matrix with a leading column of ones.
/// Immutable after construction.
class DesignMatrix {
 public:
  DesignMatrix(const CovariateSet& X, const KernelSpec& spec);

  const Matrix& matrix() const noexcept { return K_; }
  const KernelSpec& spec() const noexcept { return spec_; }
  Eigen::Index rows() const noexcept { return K_.rows(); }
  Eigen::Index cols() const noexcept { return K_.cols(); }

 private:
  Matrix K_;
  KernelSpec spec_;
};

DesignMatrix build_design_matrix(const CovariateSet& X, const KernelSpec& spec);

/// k_new = (1, k(x_new, x_1), ..., k(x_new, x_n)).
Vector build_prediction_row(const CovariateSet& X, const Eigen::Ref<const Vector>& x_new,
                            const KernelSpec& spec);

}  // namespace sbl
