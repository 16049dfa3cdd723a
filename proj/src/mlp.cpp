#include "wheelpred/mlp.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "wheelpred/error.hpp"
#include "wheelpred/rng.hpp"

namespace wheelpred {

namespace {

void check_input(const MLPParams& params, Eigen::Index cols) {
  if (cols != params.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "MLP expects " +
                                                  std::to_string(params.input_dim()) +
                                                  " inputs, got " + std::to_string(cols));
  }
}

}  // namespace

Eigen::VectorXd MLPParams::pack() const {
  const Eigen::Index h = hidden();
  const Eigen::Index d = input_dim();
  Eigen::VectorXd out(h * d + 2 * h + 1);
  out.head(h * d) = w1.reshaped();
  out.segment(h * d, h) = b1;
  out.segment(h * d + h, h) = w2;
  out(out.size() - 1) = b2;
  return out;
}

MLPParams MLPParams::unpack(const Eigen::VectorXd& packed, Eigen::Index hidden,
                            Eigen::Index input_dim) {
  if (packed.size() != hidden * input_dim + 2 * hidden + 1) {
    throw Error(ErrorCode::DimensionMismatch, "packed MLP parameter length mismatch");
  }
  MLPParams p;
  p.w1 = packed.head(hidden * input_dim).reshaped(hidden, input_dim);
  p.b1 = packed.segment(hidden * input_dim, hidden);
  p.w2 = packed.segment(hidden * input_dim + hidden, hidden);
  p.b2 = packed(packed.size() - 1);
  return p;
}

MLPParams MLPParams::zeros(Eigen::Index hidden, Eigen::Index input_dim) {
  MLPParams p;
  p.w1 = Eigen::MatrixXd::Zero(hidden, input_dim);
  p.b1 = Eigen::VectorXd::Zero(hidden);
  p.w2 = Eigen::VectorXd::Zero(hidden);
  p.b2 = 0.0;
  return p;
}

bool MLPParams::operator==(const MLPParams& other) const {
  return w1.rows() == other.w1.rows() && w1.cols() == other.w1.cols() && w1 == other.w1 &&
         b1 == other.b1 && w2 == other.w2 && b2 == other.b2;
}

void MLPConfig::validate() const {
  if (hidden < 1) throw Error(ErrorCode::InvalidArgument, "MLP needs at least one hidden unit");
  if (!(lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "MLP learning rate must be > 0");
  if (epochs < 0) throw Error(ErrorCode::InvalidArgument, "MLP epochs must be >= 0");
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "MLP batch size must be >= 1");
}

MLPParams mlp_init(Eigen::Index input_dim, const MLPConfig& config) {
  config.validate();
  Rng rng(config.seed);
  MLPParams p = MLPParams::zeros(config.hidden, input_dim);
  const double r1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double r2 = 1.0 / std::sqrt(static_cast<double>(config.hidden));
  for (Eigen::Index j = 0; j < p.w1.cols(); ++j) {
    for (Eigen::Index i = 0; i < p.w1.rows(); ++i) p.w1(i, j) = rng.uniform(-r1, r1);
  }
  for (Eigen::Index i = 0; i < p.w2.size(); ++i) p.w2(i) = rng.uniform(-r2, r2);
  return p;
}

double mlp_forward(const MLPParams& params, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_input(params, x.size());
  return params.w2.dot((params.w1 * x + params.b1).array().tanh().matrix()) + params.b2;
}

Eigen::VectorXd mlp_forward_batch(const MLPParams& params, const Eigen::MatrixXd& inputs) {
  check_input(params, inputs.cols());
  const Eigen::MatrixXd hidden =
      ((params.w1 * inputs.transpose()).colwise() + params.b1).array().tanh().matrix();
  return (hidden.transpose() * params.w2).array() + params.b2;
}

MLPParams mlp_grad(const MLPParams& params, const Eigen::MatrixXd& inputs,
                   const Eigen::VectorXd& targets) {
  if (inputs.rows() == 0) throw Error(ErrorCode::EmptyBatch, "gradient of an empty batch");
  if (inputs.rows() != targets.size()) {
    throw Error(ErrorCode::DimensionMismatch, "batch inputs and targets differ in length");
  }
  check_input(params, inputs.cols());
  const double inv_n = 1.0 / static_cast<double>(inputs.rows());

  const Eigen::MatrixXd xt = inputs.transpose();                                   // D x n
  const Eigen::MatrixXd act = ((params.w1 * xt).colwise() + params.b1).array().tanh();  // h x n
  const Eigen::VectorXd residual =
      ((act.transpose() * params.w2).array() + params.b2 - targets.array()) * inv_n;

  MLPParams g;
  g.w2 = act * residual;
  g.b2 = residual.sum();
  // back through tanh: d act / d pre = 1 - act^2
  const Eigen::MatrixXd delta =
      (params.w2 * residual.transpose()).array() * (1.0 - act.array().square());
  g.w1 = delta * inputs;
  g.b1 = delta.rowwise().sum();
  return g;
}

double mlp_mse(const MLPParams& params, const Eigen::MatrixXd& inputs,
               const Eigen::VectorXd& targets) {
  return (mlp_forward_batch(params, inputs) - targets).squaredNorm() /
         static_cast<double>(targets.size());
}

MLPTrainResult mlp_train(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                         const MLPConfig& config) {
  config.validate();
  if (inputs.rows() == 0) throw Error(ErrorCode::EmptyInput, "no training pairs");
  if (inputs.rows() != targets.size()) {
    throw Error(ErrorCode::DimensionMismatch, "training inputs and targets differ in length");
  }

  MLPTrainResult result;
  MLPParams params = mlp_init(inputs.cols(), config);
  const Eigen::Index h = params.hidden();
  const Eigen::Index d = params.input_dim();

  result.params = params;
  result.best_mse = mlp_mse(params, inputs, targets);
  result.epoch_mse.push_back(result.best_mse);
  if (!std::isfinite(result.best_mse)) {
    throw Error(ErrorCode::NonFiniteLoss, "initial loss is not finite", 0);
  }

  // Shuffle stream is separate from the initialization stream.
  Rng shuffle_rng(config.seed ^ 0x5deece66dULL);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(inputs.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  Eigen::VectorXd theta = params.pack();
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(theta.size());
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  long long t = 0;

  const auto batch = static_cast<Eigen::Index>(config.batch_size);
  Eigen::MatrixXd xb;
  Eigen::VectorXd yb;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (Eigen::Index start = 0; start < inputs.rows(); start += batch) {
      const Eigen::Index len = std::min(batch, inputs.rows() - start);
      xb.resize(len, d);
      yb.resize(len);
      for (Eigen::Index i = 0; i < len; ++i) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + i)];
        xb.row(i) = inputs.row(src);
        yb(i) = targets(src);
      }
      const Eigen::VectorXd g = mlp_grad(params, xb, yb).pack();
      ++t;
      m1 = kBeta1 * m1 + (1.0 - kBeta1) * g;
      m2 = kBeta2 * m2 + (1.0 - kBeta2) * g.cwiseAbs2();
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
      theta.array() -= config.lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + kEps);
      params = MLPParams::unpack(theta, h, d);
    }
    const double mse = mlp_mse(params, inputs, targets);
    if (!std::isfinite(mse)) {
      throw Error(ErrorCode::NonFiniteLoss, "loss not finite at epoch " + std::to_string(epoch),
                  static_cast<std::size_t>(epoch));
    }
    result.epoch_mse.push_back(mse);
    if (mse < result.best_mse) {
      result.best_mse = mse;
      result.params = params;
    }
  }
  return result;
}

}  // namespace wheelpred
