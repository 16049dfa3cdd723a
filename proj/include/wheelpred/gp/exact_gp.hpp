#ifndef WHEELPRED_GP_EXACT_GP_HPP
#define WHEELPRED_GP_EXACT_GP_HPP

#include <numbers>
#include <type_traits>

#include "wheelpred/gp/kernel.hpp"

namespace wheelpred::gp {

/// Latent predictive distribution at one query point.
template <typename Scalar>
struct Prediction {
  Scalar mean = 0;
  Scalar variance = 0;
  bool clamped = false;  // variance came out negative and was set to 0
};

/// Value and gradient with respect to KernelParams::packed().
template <typename Scalar>
struct Objective {
  Scalar value = 0;
  Vector<Scalar> gradient;
};

template <typename Scalar>
void check_training_data(const KernelParams<Scalar>& params, const Matrix<Scalar>& x,
                         const Vector<Scalar>& y) {
  if (x.rows() == 0) throw Error(ErrorCode::EmptyInput, "no training points");
  if (x.rows() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "inputs and targets have different lengths");
  }
  check_dimension(params, x.cols(), "training inputs");
}

/// Full-covariance GP posterior.
template <typename Scalar>
class ExactGP {
 public:
  ExactGP(Matrix<Scalar> x, Vector<Scalar> y, KernelParams<Scalar> params)
      : x_(std::move(x)), y_(std::move(y)), params_(std::move(params)) {
    check_training_data(params_, x_, y_);
    Matrix<Scalar> k = kernel_matrix(params_, x_, x_);
    k.diagonal().array() += params_.noise_var();
    JitteredCholesky<Scalar> chol = jittered_cholesky(k);
    llt_ = std::move(chol.llt);
    jitter_ = chol.jitter;
    alpha_ = llt_.solve(y_);
  }

  const Matrix<Scalar>& inputs() const { return x_; }
  const Vector<Scalar>& targets() const { return y_; }
  const KernelParams<Scalar>& params() const { return params_; }
  /// Solves (K + noise I) alpha = y.
  const Vector<Scalar>& alpha() const { return alpha_; }
  Matrix<Scalar> cholesky_factor() const { return llt_.matrixL(); }
  Scalar jitter() const { return jitter_; }

  Prediction<Scalar> predict(const Eigen::Ref<const Vector<Scalar>>& query) const {
    const Vector<Scalar> ks = kernel_vector(params_, x_, query);
    Prediction<Scalar> out;
    out.mean = ks.dot(alpha_);
    const Vector<Scalar> v = llt_.matrixL().solve(ks);
    out.variance = params_.signal_var() - v.squaredNorm();
    if (out.variance < 0) {
      out.variance = 0;
      out.clamped = true;
    }
    return out;
  }

 private:
  Matrix<Scalar> x_;
  Vector<Scalar> y_;
  KernelParams<Scalar> params_;
  Eigen::LLT<Matrix<Scalar>> llt_;
  Vector<Scalar> alpha_;
  Scalar jitter_ = 0;
};

template <typename Scalar>
ExactGP<Scalar> fit_exact(Matrix<Scalar> x, Vector<Scalar> y, KernelParams<Scalar> params) {
  return ExactGP<Scalar>(std::move(x), std::move(y), std::move(params));
}

template <typename Scalar>
Prediction<Scalar> predict_exact(const ExactGP<Scalar>& gp,
                                 const std::type_identity_t<Eigen::Ref<const Vector<Scalar>>>& query) {
  return gp.predict(query);
}

/// log p(y | X) = -0.5 y' C^-1 y - 0.5 log|C| - n/2 log 2 pi with
/// C = K + noise I, and its gradient over the packed log-parameters.
template <typename Scalar>
Objective<Scalar> exact_log_marginal_and_grad(const Matrix<Scalar>& x, const Vector<Scalar>& y,
                                     const KernelParams<Scalar>& params) {
  check_training_data(params, x, y);
  const auto n = x.rows();
  const Matrix<Scalar> k = kernel_matrix(params, x, x);
  Matrix<Scalar> c = k;
  c.diagonal().array() += params.noise_var();
  const JitteredCholesky<Scalar> chol = jittered_cholesky(c);
  const Vector<Scalar> alpha = chol.llt.solve(y);

  Objective<Scalar> out;
  out.value = Scalar(-0.5) * y.dot(alpha) -
              chol.llt.matrixLLT().diagonal().array().log().sum() -
              Scalar(0.5) * Scalar(n) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>);

  // d/dtheta = 0.5 tr((alpha alpha' - C^-1) dC/dtheta)
  Matrix<Scalar> r = alpha * alpha.transpose();
  r -= chol.llt.solve(Matrix<Scalar>::Identity(n, n));
  out.gradient.resize(params.packed().size());
  out.gradient.head(params.dimension() + 1) =
      Scalar(0.5) * contract_kernel_gradient(params, x, x, k, r);
  out.gradient(out.gradient.size() - 1) = Scalar(0.5) * r.trace() * params.noise_var();
  return out;
}

}  // namespace wheelpred::gp

#endif  // WHEELPRED_GP_EXACT_GP_HPP
