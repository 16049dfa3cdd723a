#ifndef WHEELPRED_ROLLOUT_HPP
#define WHEELPRED_ROLLOUT_HPP

#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "wheelpred/error.hpp"
#include "wheelpred/pose.hpp"
#include "wheelpred/predictor.hpp"
#include "wheelpred/trajectory_data.hpp"

namespace wheelpred {

struct VelocityTrajectory {
  Eigen::VectorXd v;  // m/s
  Eigen::VectorXd w;  // rad/s
  double dt = kSampleDt;

  std::size_t size() const { return static_cast<std::size_t>(v.size()); }
};

inline PoseTrajectory<double> integrate_trajectory(
    const VelocityTrajectory& vt, const Pose<double>& start = {},
    IntegrationScheme scheme = IntegrationScheme::ExactArc) {
  return integrate_trajectory<double>(vt.v, vt.w, vt.dt, start, scheme);
}

/// Anything that maps a raw one-step feature vector to a next-step value.
template <typename M>
concept OneStepRegressor = requires(const M& m, const Eigen::VectorXd& x) {
  { m.predict_one(x) } -> std::convertible_to<double>;
};

struct RolloutOptions {
  /// Repeat the last observed command over the horizon instead of reading the
  /// logged future commands.
  bool hold_last_command = false;
};

/// Predicts k steps by feeding each predicted (v, w), paired with the command
/// applied over that step, back into the history window.
template <OneStepRegressor LinearModel, OneStepRegressor AngularModel>
VelocityTrajectory rollout(const LinearModel& model_v, const AngularModel& model_w,
                           const FeatureWindow& window, std::size_t k,
                           const RolloutOptions& options = {}) {
  if (k > window.future_u.size()) {
    throw Error(ErrorCode::HorizonExceedsWindow,
                "horizon " + std::to_string(k) + " exceeds window lookahead " +
                    std::to_string(window.future_u.size()));
  }
  if constexpr (std::same_as<LinearModel, PredictorModel>) {
    if (model_v.target() != TargetKind::Linear) {
      throw Error(ErrorCode::InvalidArgument, "first model must predict linear velocity");
    }
  }
  if constexpr (std::same_as<AngularModel, PredictorModel>) {
    if (model_w.target() != TargetKind::Angular) {
      throw Error(ErrorCode::InvalidArgument, "second model must predict angular velocity");
    }
  }
  const std::size_t h = window.history.size();
  if (h == 0) throw Error(ErrorCode::DimensionMismatch, "window has no history");

  VelocityTrajectory out;
  out.v.resize(static_cast<Eigen::Index>(k));
  out.w.resize(static_cast<Eigen::Index>(k));

  std::vector<Sample> buffer = window.history;
  buffer.reserve(h + k);
  const Command held{window.history.back().ux, window.history.back().uy};
  Eigen::VectorXd features(static_cast<Eigen::Index>(feature_dimension(h)));
  for (std::size_t i = 0; i < k; ++i) {
    const Command next = options.hold_last_command ? held : window.future_u[i];
    write_features(std::span<const Sample>(buffer).last(h), next, features);
    const double v = model_v.predict_one(features);
    const double w = model_w.predict_one(features);
    out.v(static_cast<Eigen::Index>(i)) = v;
    out.w(static_cast<Eigen::Index>(i)) = w;
    buffer.push_back({buffer.back().t + kSampleDt, next.ux, next.uy, v, w});
  }
  return out;
}

}  // namespace wheelpred

#endif  // WHEELPRED_ROLLOUT_HPP
