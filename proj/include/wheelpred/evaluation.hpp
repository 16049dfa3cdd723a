#ifndef WHEELPRED_EVALUATION_HPP
#define WHEELPRED_EVALUATION_HPP

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wheelpred/pose.hpp"
#include "wheelpred/predictor.hpp"
#include "wheelpred/rollout.hpp"
#include "wheelpred/trajectory_data.hpp"

namespace wheelpred {

inline constexpr std::array<std::string_view, 3> kTrainTags = {"tile", "carpet", "both"};
inline constexpr std::array<std::string_view, 3> kTestTags = {"tile", "carpet", "hybrid"};
inline constexpr std::array<ModelKind, 2> kModelOrder = {ModelKind::Mlp, ModelKind::Asgp};

/// Column / row heading for a train or test tag ("Tile", "Both (1:1)", ...).
std::string tag_heading(std::string_view tag);

/// Horizon in milliseconds for a step count at 5 Hz.
int horizon_ms(std::size_t steps);
/// Inverse of horizon_ms; throws InvalidArgument unless ms is a multiple of 200.
std::size_t horizon_steps_from_ms(int ms);

struct SuccessRate {
  double pct = 0.0;  // rounded half-up to 2 decimals
  std::size_t n_success = 0;
  std::size_t n_cases = 0;
};

/// Share of errors <= threshold, as a percent rounded half-up to 2 decimals.
SuccessRate success_rate(std::span<const double> errors, double threshold);
/// Same rounding from raw counts.
SuccessRate success_rate_from_counts(std::size_t n_success, std::size_t n_cases);

enum class ErrorMode {
  FinalStep,    // error at the last step of the horizon
  MaxOverPath,  // largest error over steps 1..horizon
};

struct EvalConfig {
  double threshold = 0.10;  // m
  std::vector<std::size_t> horizons = {5, 7, 10};
  std::size_t history = 5;
  ErrorMode error_mode = ErrorMode::FinalStep;
  IntegrationScheme scheme = IntegrationScheme::ExactArc;
  RolloutOptions rollout;

  void validate() const;
};

/// Maps a window to a predicted velocity trajectory over k steps.
class TrajectoryPredictor {
 public:
  virtual ~TrajectoryPredictor() = default;
  virtual VelocityTrajectory predict(const FeatureWindow& window, std::size_t k) const = 0;
};

/// Rolls out a (linear, angular) model pair.
class ModelPairPredictor final : public TrajectoryPredictor {
 public:
  ModelPairPredictor(std::shared_ptr<const PredictorModel> linear,
                     std::shared_ptr<const PredictorModel> angular, RolloutOptions options = {});
  VelocityTrajectory predict(const FeatureWindow& window, std::size_t k) const override;

  const PredictorModel& linear() const { return *linear_; }
  const PredictorModel& angular() const { return *angular_; }

 private:
  std::shared_ptr<const PredictorModel> linear_;
  std::shared_ptr<const PredictorModel> angular_;
  RolloutOptions options_;
};

/// Returns the recorded future velocities of the window.
class OraclePredictor final : public TrajectoryPredictor {
 public:
  VelocityTrajectory predict(const FeatureWindow& window, std::size_t k) const override;
};

/// Position error at every step 1..horizon for each window (windows x
/// horizon). Both trajectories start from the identity pose.
Eigen::MatrixXd step_errors(const TrajectoryPredictor& predictor,
                            std::span<const FeatureWindow> windows, std::size_t horizon,
                            IntegrationScheme scheme = IntegrationScheme::ExactArc);

struct PairResult {
  SuccessRate rate;
  std::vector<double> errors;  // one per window
};

PairResult evaluate_pair(const TrajectoryPredictor& predictor,
                         std::span<const FeatureWindow> windows, std::size_t horizon,
                         const EvalConfig& config);

struct EvalCell {
  std::string train;
  std::string test;
  ModelKind model = ModelKind::Mlp;
  std::size_t horizon_steps = 0;
  double success_pct = 0.0;
  std::size_t n_success = 0;
  std::size_t n_cases = 0;
};

struct EvalMatrix {
  double threshold = 0.10;
  std::vector<EvalCell> cells;  // ordered by horizon, train, test, model

  const EvalCell* find(std::string_view train, std::string_view test, ModelKind model,
                       std::size_t horizon) const;
  std::vector<std::size_t> horizons() const;
};

/// Trained predictors by train tag and model kind.
using ModelGrid =
    std::map<std::string, std::map<ModelKind, std::shared_ptr<const TrajectoryPredictor>>,
             std::less<>>;
/// Test logs by test tag.
using TestSets = std::map<std::string, DriveLog, std::less<>>;

/// Evaluates every (train, test, model, horizon) combination.
EvalMatrix cross_matrix(const ModelGrid& models, const TestSets& tests, const EvalConfig& config);

/// Markdown table for one horizon: rows Test x {MLP, ASGP}, columns by train set.
std::string render_table(const EvalMatrix& matrix, std::size_t horizon);
std::string table_caption(double threshold, std::size_t horizon);

/// Reads cells back from render_table output (horizon taken from the caption).
std::vector<EvalCell> parse_table(std::string_view markdown);

/// `train,test,model,horizon_ms,success_pct,n_success,n_cases`
std::string render_matrix_csv(const EvalMatrix& matrix);

/// `step_ms,p50_error_m,p90_error_m,success_pct`, one row per step; `errors`
/// is windows x steps as produced by step_errors.
std::string emit_error_curve(const Eigen::MatrixXd& errors, double threshold);

/// Linearly interpolated percentile, q in [0, 1].
double percentile(std::vector<double> values, double q);

}  // namespace wheelpred

#endif  // WHEELPRED_EVALUATION_HPP
