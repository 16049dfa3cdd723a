#ifndef WHEELPRED_PREDICTOR_HPP
#define WHEELPRED_PREDICTOR_HPP

#include <cstdint>
#include <string>
#include <variant>

#include "wheelpred/gp/hyperopt.hpp"
#include "wheelpred/mlp.hpp"
#include "wheelpred/trajectory_data.hpp"

namespace wheelpred {

enum class TargetKind { Linear, Angular };
enum class ModelKind { Mlp, Asgp };

const char* to_string(TargetKind kind);
const char* to_string(ModelKind kind);
/// "MLP" / "ASGP", as printed in reports.
const char* display_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);
TargetKind parse_target_kind(const std::string& name);

/// A one-step regressor together with the standardization of its inputs and
/// target. predict_one takes and returns raw (unstandardized) values.
class PredictorModel {
 public:
  using Regressor = std::variant<gp::SparseGP<double>, MLPParams>;

  PredictorModel(Regressor regressor, Standardizer inputs, Standardizer target,
                 TargetKind target_kind, std::size_t history);

  ModelKind kind() const;
  TargetKind target() const { return target_kind_; }
  std::size_t history() const { return history_; }
  Eigen::Index input_dim() const { return inputs_.dimension(); }

  const Regressor& regressor() const { return regressor_; }
  const Standardizer& input_standardizer() const { return inputs_; }
  const Standardizer& target_standardizer() const { return target_; }

  double predict_one(const Eigen::Ref<const Eigen::VectorXd>& features) const;
  /// Raw-space mean and variance; MLP variance is 0.
  gp::Prediction<double> predict_distribution(
      const Eigen::Ref<const Eigen::VectorXd>& features) const;

 private:
  Regressor regressor_;
  Standardizer inputs_;
  Standardizer target_;
  TargetKind target_kind_;
  std::size_t history_;
};

struct AsgpConfig {
  Eigen::Index inducing = 64;
  gp::OptimizerConfig optimizer;
  /// Rows used for the marginal-likelihood ascent; the final posterior uses
  /// every row. 0 means all rows.
  std::size_t optimization_subset = 2000;
  double init_signal_var = 1.0;
  double init_lengthscale = 1.0;
  double init_noise_var = 0.1;
  std::uint64_t seed = 0;
};

struct TrainedModel {
  PredictorModel model;
  /// Final training objective: FITC log marginal likelihood for ASGP,
  /// standardized-target MSE for MLP.
  double objective;
};

TrainedModel train_asgp(const OneStepData& data, TargetKind target, std::size_t history,
                        const AsgpConfig& config);
TrainedModel train_mlp(const OneStepData& data, TargetKind target, std::size_t history,
                       const MLPConfig& config);

}  // namespace wheelpred

#endif  // WHEELPRED_PREDICTOR_HPP
