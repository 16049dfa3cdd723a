#ifndef WHEELPRED_GP_HYPEROPT_HPP
#define WHEELPRED_GP_HYPEROPT_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "wheelpred/gp/sparse_gp.hpp"

namespace wheelpred::gp {

enum class ObjectiveKind { Fitc, Exact };

struct OptimizerConfig {
  int steps = 200;
  double lr = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Stops when the gradient norm falls below this.
  double gradient_tolerance = 1e-10;
  ObjectiveKind objective = ObjectiveKind::Fitc;
  FitcOptions fitc;
};

template <typename Scalar>
struct OptimizerResult {
  KernelParams<Scalar> params;  // best iterate seen
  Scalar initial_objective = 0;
  Scalar best_objective = 0;
  std::vector<Scalar> best_so_far;  // one entry per evaluated iterate
  int steps_taken = 0;
};

/// Adam ascent on the log marginal likelihood over the packed
/// log-parameters. Any non-finite objective raises NonFiniteObjective with
/// the step index.
template <typename Scalar>
OptimizerResult<Scalar> maximize(
    const std::function<Objective<Scalar>(const KernelParams<Scalar>&)>& objective,
    const KernelParams<Scalar>& init, const OptimizerConfig& config) {
  OptimizerResult<Scalar> result;
  Vector<Scalar> theta = init.packed();
  Vector<Scalar> m1 = Vector<Scalar>::Zero(theta.size());
  Vector<Scalar> m2 = Vector<Scalar>::Zero(theta.size());

  result.params = init;
  for (int step = 0; step <= config.steps; ++step) {
    const KernelParams<Scalar> current = KernelParams<Scalar>::from_packed(theta);
    const Objective<Scalar> obj = objective(current);
    if (!std::isfinite(obj.value) || !obj.gradient.allFinite()) {
      throw Error(ErrorCode::NonFiniteObjective,
                  "objective not finite at step " + std::to_string(step),
                  static_cast<std::size_t>(step));
    }
    if (step == 0) {
      result.initial_objective = obj.value;
      result.best_objective = obj.value;
    } else if (obj.value > result.best_objective) {
      result.best_objective = obj.value;
      result.params = current;
    }
    result.best_so_far.push_back(result.best_objective);
    result.steps_taken = step;
    if (step == config.steps || obj.gradient.norm() < config.gradient_tolerance) break;

    const Scalar b1 = Scalar(config.beta1);
    const Scalar b2 = Scalar(config.beta2);
    m1 = b1 * m1 + (1 - b1) * obj.gradient;
    m2 = b2 * m2 + (1 - b2) * obj.gradient.cwiseAbs2();
    const Scalar c1 = 1 - std::pow(b1, Scalar(step + 1));
    const Scalar c2 = 1 - std::pow(b2, Scalar(step + 1));
    theta.array() += Scalar(config.lr) * (m1.array() / c1) /
                     ((m2.array() / c2).sqrt() + Scalar(config.epsilon));
  }
  return result;
}

template <typename Scalar>
OptimizerResult<Scalar> optimize_hyperparams(const Matrix<Scalar>& x, const Vector<Scalar>& y,
                                             const Matrix<Scalar>& z,
                                             const KernelParams<Scalar>& init,
                                             const OptimizerConfig& config) {
  if (config.objective == ObjectiveKind::Exact) {
    return maximize<Scalar>(
        [&](const KernelParams<Scalar>& p) { return exact_log_marginal_and_grad(x, y, p); },
        init, config);
  }
  return maximize<Scalar>(
      [&](const KernelParams<Scalar>& p) {
        return fitc_log_marginal_and_grad(x, y, z, p, config.fitc);
      },
      init, config);
}

}  // namespace wheelpred::gp

#endif  // WHEELPRED_GP_HYPEROPT_HPP
