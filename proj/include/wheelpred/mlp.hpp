#ifndef WHEELPRED_MLP_HPP
#define WHEELPRED_MLP_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace wheelpred {

/// Single-hidden-layer tanh regressor with one output:
/// y = w2' tanh(W1 x + b1) + b2.
struct MLPParams {
  Eigen::MatrixXd w1;  // hidden x D
  Eigen::VectorXd b1;  // hidden
  Eigen::VectorXd w2;  // hidden
  double b2 = 0.0;

  Eigen::Index hidden() const { return w1.rows(); }
  Eigen::Index input_dim() const { return w1.cols(); }

  /// Layout: W1 column-major, b1, w2, b2.
  Eigen::VectorXd pack() const;
  static MLPParams unpack(const Eigen::VectorXd& packed, Eigen::Index hidden,
                          Eigen::Index input_dim);
  static MLPParams zeros(Eigen::Index hidden, Eigen::Index input_dim);

  bool operator==(const MLPParams& other) const;
};

struct MLPConfig {
  int hidden = 64;
  double lr = 1e-3;
  int epochs = 60;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Weights uniform in +-1/sqrt(fan_in), biases zero.
MLPParams mlp_init(Eigen::Index input_dim, const MLPConfig& config);

double mlp_forward(const MLPParams& params, const Eigen::Ref<const Eigen::VectorXd>& x);
/// Row-wise forward pass over a batch (n x D).
Eigen::VectorXd mlp_forward_batch(const MLPParams& params, const Eigen::MatrixXd& inputs);

/// Gradient of 0.5 * mean((pred - target)^2) over all parameters.
MLPParams mlp_grad(const MLPParams& params, const Eigen::MatrixXd& inputs,
                   const Eigen::VectorXd& targets);

double mlp_mse(const MLPParams& params, const Eigen::MatrixXd& inputs,
               const Eigen::VectorXd& targets);

struct MLPTrainResult {
  MLPParams params;                 // lowest training MSE among epoch ends
  double best_mse = 0.0;
  std::vector<double> epoch_mse;    // index 0 is the initialization
};

/// Adam with a seeded shuffle each epoch.
MLPTrainResult mlp_train(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                         const MLPConfig& config);

}  // namespace wheelpred

#endif  // WHEELPRED_MLP_HPP
