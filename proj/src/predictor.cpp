#include "wheelpred/predictor.hpp"

#include <algorithm>
#include <type_traits>

#include "wheelpred/error.hpp"
#include "wheelpred/gp/inducing.hpp"

namespace wheelpred {

const char* to_string(TargetKind kind) {
  return kind == TargetKind::Linear ? "linear" : "angular";
}

const char* to_string(ModelKind kind) { return kind == ModelKind::Asgp ? "asgp" : "mlp"; }

const char* display_name(ModelKind kind) { return kind == ModelKind::Asgp ? "ASGP" : "MLP"; }

ModelKind parse_model_kind(const std::string& name) {
  if (name == "asgp" || name == "ASGP") return ModelKind::Asgp;
  if (name == "mlp" || name == "MLP") return ModelKind::Mlp;
  throw Error(ErrorCode::InvalidArgument, "unknown model kind '" + name + "'");
}

TargetKind parse_target_kind(const std::string& name) {
  if (name == "linear") return TargetKind::Linear;
  if (name == "angular") return TargetKind::Angular;
  throw Error(ErrorCode::InvalidArgument, "unknown target '" + name + "'");
}

PredictorModel::PredictorModel(Regressor regressor, Standardizer inputs, Standardizer target,
                               TargetKind target_kind, std::size_t history)
    : regressor_(std::move(regressor)),
      inputs_(std::move(inputs)),
      target_(std::move(target)),
      target_kind_(target_kind),
      history_(history) {
  const auto expected = static_cast<Eigen::Index>(feature_dimension(history_));
  if (inputs_.dimension() != expected) {
    throw Error(ErrorCode::DimensionMismatch,
                "input standardizer has dimension " + std::to_string(inputs_.dimension()) +
                    ", history " + std::to_string(history_) + " needs " +
                    std::to_string(expected));
  }
  if (target_.dimension() != 1) {
    throw Error(ErrorCode::DimensionMismatch, "target standardizer must be 1-dimensional");
  }
  const Eigen::Index model_dim = std::visit(
      [](const auto& r) -> Eigen::Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(r)>, MLPParams>) {
          return r.input_dim();
        } else {
          return r.params().dimension();
        }
      },
      regressor_);
  if (model_dim != expected) {
    throw Error(ErrorCode::DimensionMismatch, "regressor expects dimension " +
                                                  std::to_string(model_dim) + ", standardizer " +
                                                  std::to_string(expected));
  }
}

ModelKind PredictorModel::kind() const {
  return std::holds_alternative<MLPParams>(regressor_) ? ModelKind::Mlp : ModelKind::Asgp;
}

double PredictorModel::predict_one(const Eigen::Ref<const Eigen::VectorXd>& features) const {
  const Eigen::VectorXd z = inputs_.apply(features);
  const double standardized = std::visit(
      [&z](const auto& r) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(r)>, MLPParams>) {
          return mlp_forward(r, z);
        } else {
          return r.predict_mean(z);
        }
      },
      regressor_);
  return target_.invert(standardized);
}

gp::Prediction<double> PredictorModel::predict_distribution(
    const Eigen::Ref<const Eigen::VectorXd>& features) const {
  const Eigen::VectorXd z = inputs_.apply(features);
  gp::Prediction<double> out;
  if (const auto* mlp = std::get_if<MLPParams>(&regressor_)) {
    out.mean = mlp_forward(*mlp, z);
  } else {
    out = std::get<gp::SparseGP<double>>(regressor_).predict(z);
  }
  const double scale = target_.scale()(0);
  out.mean = target_.invert(out.mean);
  out.variance *= scale * scale;
  return out;
}

namespace {

Eigen::VectorXd target_of(const OneStepData& data, TargetKind target) {
  return target == TargetKind::Linear ? data.target_v : data.target_w;
}

Standardizer fit_target(const Eigen::VectorXd& y) {
  return Standardizer::fit(Eigen::MatrixXd(y));
}

}  // namespace

TrainedModel train_asgp(const OneStepData& data, TargetKind target, std::size_t history,
                        const AsgpConfig& config) {
  const Eigen::Index n = data.inputs.rows();
  if (n == 0) throw Error(ErrorCode::EmptyInput, "no training windows for ASGP");
  const Standardizer inputs = Standardizer::fit(data.inputs);
  const Eigen::VectorXd y_raw = target_of(data, target);
  const Standardizer target_std = fit_target(y_raw);

  const Eigen::MatrixXd x = inputs.apply_rows(data.inputs);
  const Eigen::VectorXd y = (y_raw.array() - target_std.mean()(0)) / target_std.scale()(0);

  const Eigen::Index m = std::min(config.inducing, n);
  const Eigen::MatrixXd z = gp::select_inducing<double>(x, m, config.seed);

  // Evenly strided subset for the hyperparameter search.
  Eigen::MatrixXd x_opt = x;
  Eigen::VectorXd y_opt = y;
  const auto subset = static_cast<Eigen::Index>(config.optimization_subset);
  if (subset > 0 && subset < n) {
    const Eigen::Index rows = std::max(subset, m);
    x_opt.resize(rows, x.cols());
    y_opt.resize(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const Eigen::Index src = i * n / rows;
      x_opt.row(i) = x.row(src);
      y_opt(i) = y(src);
    }
  }

  const auto init = gp::KernelParams<double>::isotropic(
      x.cols(), config.init_signal_var, config.init_lengthscale, config.init_noise_var);
  gp::OptimizerConfig opt = config.optimizer;
  opt.objective = gp::ObjectiveKind::Fitc;
  const gp::OptimizerResult<double> fitted =
      gp::optimize_hyperparams<double>(x_opt, y_opt, z, init, opt);

  gp::SparseGP<double> sgp = gp::fit_fitc<double>(x, y, z, fitted.params, opt.fitc);
  const double objective =
      gp::fitc_log_marginal_and_grad<double>(x, y, z, fitted.params, opt.fitc).value;
  return {PredictorModel(std::move(sgp), inputs, target_std, target, history), objective};
}

TrainedModel train_mlp(const OneStepData& data, TargetKind target, std::size_t history,
                       const MLPConfig& config) {
  if (data.inputs.rows() == 0) throw Error(ErrorCode::EmptyInput, "no training windows for MLP");
  const Standardizer inputs = Standardizer::fit(data.inputs);
  const Eigen::VectorXd y_raw = target_of(data, target);
  const Standardizer target_std = fit_target(y_raw);
  const Eigen::MatrixXd x = inputs.apply_rows(data.inputs);
  const Eigen::VectorXd y = (y_raw.array() - target_std.mean()(0)) / target_std.scale()(0);

  MLPTrainResult trained = mlp_train(x, y, config);
  return {PredictorModel(std::move(trained.params), inputs, target_std, target, history),
          trained.best_mse};
}

}  // namespace wheelpred
