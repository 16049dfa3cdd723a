#ifndef WHEELPRED_POSE_HPP
#define WHEELPRED_POSE_HPP

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wheelpred/error.hpp"

namespace wheelpred {

/// Wraps an angle to (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar a) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  a = std::remainder(a, Scalar(2) * pi);
  if (a <= -pi) a += Scalar(2) * pi;
  return a;
}

template <typename Scalar>
struct Pose {
  Scalar x = 0;
  Scalar y = 0;
  Scalar theta = 0;  // (-pi, pi]
};

enum class IntegrationScheme {
  ExactArc,  // exact for piecewise-constant (v, w)
  Euler,     // straight segment along the heading at the start of the step
};

/// Angular speeds below this use the straight-line limit of the arc.
inline constexpr double kArcThreshold = 1e-6;

/// Unicycle update over one step of constant (v, w).
template <typename Scalar>
Pose<Scalar> integrate_step(const Pose<Scalar>& p, Scalar v, Scalar w, Scalar dt,
                            IntegrationScheme scheme = IntegrationScheme::ExactArc) {
  Pose<Scalar> out;
  if (scheme == IntegrationScheme::Euler) {
    out.x = p.x + v * dt * std::cos(p.theta);
    out.y = p.y + v * dt * std::sin(p.theta);
  } else {
    // (v/w)(sin(th + w dt) - sin th) written with the half-angle identity,
    // which avoids cancellation for small w dt. Below kArcThreshold the
    // chord takes its w -> 0 limit v dt.
    const Scalar half = Scalar(0.5) * w * dt;
    const Scalar chord =
        std::abs(w) < Scalar(kArcThreshold) ? v * dt : Scalar(2) * v / w * std::sin(half);
    out.x = p.x + chord * std::cos(p.theta + half);
    out.y = p.y + chord * std::sin(p.theta + half);
  }
  out.theta = wrap_angle(p.theta + w * dt);
  return out;
}

template <typename Scalar>
struct PoseTrajectory {
  std::vector<Pose<Scalar>> poses;  // pose after each step; start excluded
  Scalar dt = 0;

  std::size_t size() const { return poses.size(); }
};

/// Folds integrate_step over paired velocity sequences.
template <typename Scalar>
PoseTrajectory<Scalar> integrate_trajectory(
    const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& v,
    const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& w, Scalar dt,
    const Pose<Scalar>& start = {}, IntegrationScheme scheme = IntegrationScheme::ExactArc) {
  if (v.size() != w.size()) {
    throw Error(ErrorCode::DimensionMismatch, "linear and angular sequences differ in length");
  }
  PoseTrajectory<Scalar> out;
  out.dt = dt;
  out.poses.reserve(static_cast<std::size_t>(v.size()));
  Pose<Scalar> p = start;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    p = integrate_step(p, v(i), w(i), dt, scheme);
    out.poses.push_back(p);
  }
  return out;
}

/// L2 distance between the (x, y) positions at `step` (0-based).
template <typename Scalar>
Scalar position_error(const PoseTrajectory<Scalar>& pred, const PoseTrajectory<Scalar>& truth,
                      std::size_t step) {
  if (step >= pred.size() || step >= truth.size()) {
    throw Error(ErrorCode::IndexOutOfRange,
                "step " + std::to_string(step) + " beyond trajectory length", step);
  }
  return std::hypot(pred.poses[step].x - truth.poses[step].x,
                    pred.poses[step].y - truth.poses[step].y);
}

}  // namespace wheelpred

#endif  // WHEELPRED_POSE_HPP
