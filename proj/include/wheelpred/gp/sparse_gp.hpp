#ifndef WHEELPRED_GP_SPARSE_GP_HPP
#define WHEELPRED_GP_SPARSE_GP_HPP

#include <numbers>
#include <type_traits>

#include "wheelpred/gp/exact_gp.hpp"

namespace wheelpred::gp {

struct FitcOptions {
  /// Lower bound on the relative jitter added to K_uu; escalation starts here.
  double min_relative_jitter = 0.0;
};

namespace detail {

// Shared factorization of the FITC covariance Q_ff + Lambda, where
// Q_ff = K_fu K_uu^-1 K_uf and Lambda = diag(K_ff - Q_ff) + noise I.
// With K_uu = L_uu L_uu' and V = L_uu^-1 K_uf, the Woodbury core is
// B = I + V Lambda^-1 V' = L_B L_B'.
template <typename Scalar>
struct FitcFactors {
  Matrix<Scalar> kuu;  // with jitter
  Scalar jitter = 0;
  Eigen::LLT<Matrix<Scalar>> luu;
  Matrix<Scalar> kuf;
  Matrix<Scalar> v;
  Vector<Scalar> lambda;
  Matrix<Scalar> v_scaled;  // V Lambda^-1
  Eigen::LLT<Matrix<Scalar>> lb;
  Vector<Scalar> gamma;  // L_B^-1 V Lambda^-1 y
};

template <typename Scalar>
FitcFactors<Scalar> factor_fitc(const Matrix<Scalar>& x, const Vector<Scalar>& y,
                                const Matrix<Scalar>& z, const KernelParams<Scalar>& params,
                                const FitcOptions& options) {
  check_training_data(params, x, y);
  check_dimension(params, z.cols(), "inducing inputs");
  if (z.rows() == 0) throw Error(ErrorCode::TooFewPoints, "need at least one inducing point");
  if (z.rows() > x.rows()) {
    throw Error(ErrorCode::TooFewPoints, "more inducing points than training points");
  }

  FitcFactors<Scalar> f;
  f.kuu = kernel_matrix(params, z, z);
  JitteredCholesky<Scalar> chol =
      jittered_cholesky(f.kuu, Scalar(options.min_relative_jitter));
  f.jitter = chol.jitter;
  f.kuu.diagonal().array() += f.jitter;
  f.luu = std::move(chol.llt);

  f.kuf = kernel_matrix(params, z, x);
  f.v = f.luu.matrixL().solve(f.kuf);
  const Vector<Scalar> qdiag = f.v.colwise().squaredNorm().transpose();
  f.lambda = (params.signal_var() - qdiag.array()).max(Scalar(0)) + params.noise_var();
  f.v_scaled = f.v * f.lambda.cwiseInverse().asDiagonal();

  Matrix<Scalar> b = f.v_scaled * f.v.transpose();
  b.diagonal().array() += Scalar(1);
  f.lb.compute(b);
  if (f.lb.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "FITC Woodbury core is not positive definite");
  }
  f.gamma = f.lb.matrixL().solve(f.v_scaled * y);
  return f;
}

}  // namespace detail

/// FITC posterior summarized by its inducing points. Predictions need only
/// Z, the kernel parameters, the K_uu jitter, the Woodbury factor L_B and the
/// mean weights, so the training set is not retained.
template <typename Scalar>
class SparseGP {
 public:
  SparseGP(Matrix<Scalar> z, KernelParams<Scalar> params, Scalar jitter,
           Matrix<Scalar> lb_lower, Vector<Scalar> mean_weights)
      : z_(std::move(z)),
        params_(std::move(params)),
        jitter_(jitter),
        lb_(std::move(lb_lower)),
        mean_weights_(std::move(mean_weights)) {
    check_dimension(params_, z_.cols(), "inducing inputs");
    const Eigen::Index m = z_.rows();
    if (m == 0 || lb_.rows() != m || lb_.cols() != m || mean_weights_.size() != m) {
      throw Error(ErrorCode::DimensionMismatch, "inconsistent sparse GP factor shapes");
    }
    if (!lb_.allFinite() || !mean_weights_.allFinite() || !std::isfinite(jitter_)) {
      throw Error(ErrorCode::InvalidArgument, "sparse GP factors must be finite");
    }
    Matrix<Scalar> kuu = kernel_matrix(params_, z_, z_);
    kuu.diagonal().array() += jitter_;
    luu_.compute(kuu);
    if (luu_.info() != Eigen::Success) {
      throw Error(ErrorCode::NotPositiveDefinite, "K_uu with stored jitter is not positive definite");
    }
  }

  const Matrix<Scalar>& inducing() const { return z_; }
  const KernelParams<Scalar>& params() const { return params_; }
  Scalar jitter() const { return jitter_; }
  const Matrix<Scalar>& woodbury_factor() const { return lb_; }
  const Vector<Scalar>& mean_weights() const { return mean_weights_; }

  Prediction<Scalar> predict(const Eigen::Ref<const Vector<Scalar>>& query) const {
    const Vector<Scalar> ku = kernel_vector(params_, z_, query);
    Prediction<Scalar> out;
    out.mean = ku.dot(mean_weights_);
    const Vector<Scalar> a = luu_.matrixL().solve(ku);
    const Vector<Scalar> b = lb_.template triangularView<Eigen::Lower>().solve(a);
    out.variance = params_.signal_var() - a.squaredNorm() + b.squaredNorm();
    if (out.variance < 0) {
      out.variance = 0;
      out.clamped = true;
    }
    return out;
  }

  /// Mean only, for rollouts.
  Scalar predict_mean(const Eigen::Ref<const Vector<Scalar>>& query) const {
    return kernel_vector(params_, z_, query).dot(mean_weights_);
  }

 private:
  Matrix<Scalar> z_;
  KernelParams<Scalar> params_;
  Scalar jitter_ = 0;
  Matrix<Scalar> lb_;
  Vector<Scalar> mean_weights_;
  Eigen::LLT<Matrix<Scalar>> luu_;
};

template <typename Scalar>
SparseGP<Scalar> fit_fitc(const Matrix<Scalar>& x, const Vector<Scalar>& y,
                          const Matrix<Scalar>& z, const KernelParams<Scalar>& params,
                          const FitcOptions& options = {}) {
  const detail::FitcFactors<Scalar> f = detail::factor_fitc(x, y, z, params, options);
  const Vector<Scalar> t = f.lb.matrixU().solve(f.gamma);
  Vector<Scalar> weights = f.luu.matrixU().solve(t);
  return SparseGP<Scalar>(z, params, f.jitter, f.lb.matrixL(), std::move(weights));
}

template <typename Scalar>
Prediction<Scalar> predict_fitc(const SparseGP<Scalar>& gp,
                                const std::type_identity_t<Eigen::Ref<const Vector<Scalar>>>& query) {
  return gp.predict(query);
}

/// FITC log marginal likelihood log N(y | 0, Q_ff + Lambda) and its gradient
/// over the packed log-parameters, in O(n M^2).
template <typename Scalar>
Objective<Scalar> fitc_log_marginal_and_grad(const Matrix<Scalar>& x, const Vector<Scalar>& y,
                                             const Matrix<Scalar>& z,
                                             const KernelParams<Scalar>& params,
                                             const FitcOptions& options = {}) {
  const detail::FitcFactors<Scalar> f = detail::factor_fitc(x, y, z, params, options);
  const auto n = x.rows();
  const Vector<Scalar> inv_lambda = f.lambda.cwiseInverse();

  Objective<Scalar> out;
  const Scalar quad = y.cwiseProduct(inv_lambda).dot(y) - f.gamma.squaredNorm();
  const Scalar logdet = Scalar(2) * f.lb.matrixLLT().diagonal().array().log().sum() +
                        f.lambda.array().log().sum();
  out.value = Scalar(-0.5) * (quad + logdet) -
              Scalar(0.5) * Scalar(n) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>);

  // With S = Q_ff + Lambda, alpha = S^-1 y and R = alpha alpha' - S^-1:
  //   d value = 0.5 tr(R dS),  dS = dQ_ff + diag(dK_ff - dQ_ff) (+ d noise).
  // Writing P = K_uu^-1 K_uf, dQ_ff = dK_fu P + P' dK_uf - P' dK_uu P, so
  //   d value = <G_uf, dK_uf> + <G_uu, dK_uu> + 0.5 sum_i r_i (dK_ii + d noise)
  //   G_uf = P R - P diag(r),  G_uu = -0.5 P R P' + 0.5 P diag(r) P'
  // where r = diag(R). S^-1 = Lambda^-1 - U'U with U = L_B^-1 V Lambda^-1.
  const Matrix<Scalar> u = f.lb.matrixL().solve(f.v_scaled);
  const Vector<Scalar> alpha =
      y.cwiseProduct(inv_lambda) - f.v_scaled.transpose() * f.lb.matrixU().solve(f.gamma);
  const Vector<Scalar> r =
      alpha.array().square() - (inv_lambda.array() - u.colwise().squaredNorm().transpose().array());

  const Matrix<Scalar> p = f.luu.matrixU().solve(f.v);
  const Vector<Scalar> p_alpha = p * alpha;
  Matrix<Scalar> p_sinv = p * inv_lambda.asDiagonal();
  p_sinv.noalias() -= (p * u.transpose()) * u;
  const Matrix<Scalar> p_r = p_alpha * alpha.transpose() - p_sinv;
  const Matrix<Scalar> p_r_pt = p_alpha * p_alpha.transpose() - p_sinv * p.transpose();
  const Matrix<Scalar> p_diag_r = p * r.asDiagonal();

  const Matrix<Scalar> g_uf = p_r - p_diag_r;
  Matrix<Scalar> g_uu = Scalar(-0.5) * p_r_pt;
  g_uu.noalias() += Scalar(0.5) * p_diag_r * p.transpose();

  const Eigen::Index dim = params.dimension();
  out.gradient.resize(dim + 2);
  out.gradient.head(dim + 1) = contract_kernel_gradient(params, z, x, f.kuf, g_uf) +
                               contract_kernel_gradient(params, z, z, f.kuu, g_uu);
  out.gradient(0) += Scalar(0.5) * r.sum() * params.signal_var();
  out.gradient(dim + 1) = Scalar(0.5) * r.sum() * params.noise_var();
  return out;
}

}  // namespace wheelpred::gp

#endif  // WHEELPRED_GP_SPARSE_GP_HPP
