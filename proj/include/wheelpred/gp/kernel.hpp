#ifndef WHEELPRED_GP_KERNEL_HPP
#define WHEELPRED_GP_KERNEL_HPP

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "wheelpred/error.hpp"

namespace wheelpred::gp {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Squared-exponential ARD hyperparameters, stored as logs so that every
/// value of the packed vector is a valid parameter set.
///
/// Packed layout: [log signal_var, log lengthscale_0 .. log lengthscale_{D-1},
/// log noise_var].
template <typename Scalar>
class KernelParams {
 public:
  KernelParams() = default;

  KernelParams(Scalar signal_var, const Vector<Scalar>& lengthscales, Scalar noise_var) {
    if (!(signal_var > 0) || !(noise_var > 0) || lengthscales.size() == 0 ||
        !(lengthscales.array() > 0).all()) {
      throw Error(ErrorCode::InvalidArgument,
                  "kernel parameters must be strictly positive with D >= 1");
    }
    packed_.resize(lengthscales.size() + 2);
    packed_(0) = std::log(signal_var);
    packed_.segment(1, lengthscales.size()) = lengthscales.array().log().matrix();
    packed_(packed_.size() - 1) = std::log(noise_var);
  }

  /// Isotropic start point with every lengthscale equal.
  static KernelParams isotropic(Eigen::Index dim, Scalar signal_var, Scalar lengthscale,
                                Scalar noise_var) {
    return KernelParams(signal_var, Vector<Scalar>::Constant(dim, lengthscale), noise_var);
  }

  static KernelParams from_packed(const Vector<Scalar>& packed) {
    if (packed.size() < 3) {
      throw Error(ErrorCode::DimensionMismatch, "packed kernel parameters need D + 2 >= 3");
    }
    if (!packed.allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "packed kernel parameters must be finite");
    }
    KernelParams p;
    p.packed_ = packed;
    return p;
  }

  const Vector<Scalar>& packed() const { return packed_; }
  Eigen::Index dimension() const { return packed_.size() - 2; }

  Scalar signal_var() const { return std::exp(packed_(0)); }
  Scalar noise_var() const { return std::exp(packed_(packed_.size() - 1)); }
  Vector<Scalar> lengthscales() const {
    return packed_.segment(1, dimension()).array().exp().matrix();
  }

 private:
  Vector<Scalar> packed_;
};

template <typename Scalar>
void check_dimension(const KernelParams<Scalar>& params, Eigen::Index cols, const char* what) {
  if (cols != params.dimension()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + " has " + std::to_string(cols) +
                    " columns, kernel expects " + std::to_string(params.dimension()));
  }
}

/// Inputs divided by their lengthscales, one row per point.
template <typename Scalar, typename Derived>
Matrix<Scalar> scale_inputs(const KernelParams<Scalar>& params,
                            const Eigen::MatrixBase<Derived>& inputs) {
  const RowVector<Scalar> inv = params.lengthscales().cwiseInverse().transpose();
  return inputs.array().rowwise() * inv.array();
}

/// k(A_i, B_j) = sf2 * exp(-0.5 * sum_d (A_id - B_jd)^2 / l_d^2). Pairwise
/// differences are formed directly so k(x, x) is exactly sf2 and the result
/// is exactly symmetric when A and B are the same rows.
template <typename Scalar, typename DerivedA, typename DerivedB>
Matrix<Scalar> kernel_matrix(const KernelParams<Scalar>& params,
                             const Eigen::MatrixBase<DerivedA>& a,
                             const Eigen::MatrixBase<DerivedB>& b) {
  check_dimension(params, a.cols(), "left input");
  check_dimension(params, b.cols(), "right input");
  const Matrix<Scalar> as = scale_inputs(params, a).transpose();
  const Matrix<Scalar> bs = scale_inputs(params, b).transpose();
  const Scalar sf2 = params.signal_var();
  Matrix<Scalar> k(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < bs.cols(); ++j) {
    k.col(j) = ((as.colwise() - bs.col(j)).colwise().squaredNorm().array() * Scalar(-0.5))
                   .exp()
                   .transpose() *
               sf2;
  }
  return k;
}

template <typename Scalar, typename Derived>
Vector<Scalar> kernel_vector(const KernelParams<Scalar>& params,
                             const Eigen::MatrixBase<Derived>& a,
                             const Eigen::Ref<const Vector<Scalar>>& x) {
  check_dimension(params, x.size(), "query point");
  return kernel_matrix(params, a, x.transpose());
}

/// Contracts a weight matrix G against the kernel derivatives:
/// returns sum_ij G_ij dK_ij / d(packed) for the signal variance and the
/// lengthscales (D + 1 entries; the noise entry is the caller's). `k` is the
/// kernel matrix between `a` and `b` and scales linearly with the signal
/// variance, including any jitter proportional to it.
template <typename Scalar, typename DerivedA, typename DerivedB>
Vector<Scalar> contract_kernel_gradient(const KernelParams<Scalar>& params,
                                        const Eigen::MatrixBase<DerivedA>& a,
                                        const Eigen::MatrixBase<DerivedB>& b,
                                        const Matrix<Scalar>& k, const Matrix<Scalar>& g) {
  const Eigen::Index dim = params.dimension();
  Vector<Scalar> out(dim + 1);
  const Matrix<Scalar> p = g.cwiseProduct(k);
  out(0) = p.sum();

  // sum_ij P_ij (a_i - b_j)^2 = sum_i a_i^2 r_i + sum_j b_j^2 c_j - 2 sum_ij P_ij a_i b_j
  const Matrix<Scalar> as = scale_inputs(params, a);
  const Matrix<Scalar> bs = scale_inputs(params, b);
  const Vector<Scalar> row_sums = p.rowwise().sum();
  const Vector<Scalar> col_sums = p.colwise().sum().transpose();
  const Matrix<Scalar> pb = p * bs;
  for (Eigen::Index d = 0; d < dim; ++d) {
    out(1 + d) = as.col(d).array().square().matrix().dot(row_sums) +
                 bs.col(d).array().square().matrix().dot(col_sums) -
                 Scalar(2) * as.col(d).dot(pb.col(d));
  }
  return out;
}

/// Cholesky with jitter escalation: 0, then 1e-10, 1e-8, 1e-6 times the mean
/// diagonal.
template <typename Scalar>
struct JitteredCholesky {
  Eigen::LLT<Matrix<Scalar>> llt;
  Scalar jitter = 0;  // absolute value added to the diagonal
};

template <typename Scalar>
JitteredCholesky<Scalar> jittered_cholesky(const Matrix<Scalar>& m,
                                           Scalar min_relative_jitter = 0) {
  static constexpr double kLevels[] = {0.0, 1e-10, 1e-8, 1e-6};
  const Scalar mean_diag = m.diagonal().mean();
  JitteredCholesky<Scalar> out;
  Scalar tried = -1;
  for (double level : kLevels) {
    const Scalar rel = std::max(Scalar(level), min_relative_jitter);
    if (rel == tried) continue;
    tried = rel;
    out.jitter = rel * mean_diag;
    Matrix<Scalar> shifted = m;
    shifted.diagonal().array() += out.jitter;
    out.llt.compute(shifted);
    if (out.llt.info() == Eigen::Success && out.llt.matrixLLT().diagonal().allFinite() &&
        (out.llt.matrixLLT().diagonal().array() > 0).all()) {
      return out;
    }
  }
  throw Error(ErrorCode::NotPositiveDefinite,
              "Cholesky failed after jitter escalation to 1e-6 x mean diagonal");
}

}  // namespace wheelpred::gp

#endif  // WHEELPRED_GP_KERNEL_HPP
