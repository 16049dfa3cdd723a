#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "wheelpred/error.hpp"
#include "wheelpred/pose.hpp"

using namespace wheelpred;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTol = 1e-9;
}  // namespace

TEST_CASE("integrate_step closed forms") {
  const Pose<double> o{};
  Pose<double> p = integrate_step(o, 0.5, 0.0, 0.2);
  CHECK(std::abs(p.x - 0.1) < kTol);
  CHECK(std::abs(p.y) < kTol);
  CHECK(p.theta == 0.0);

  p = integrate_step(o, 0.0, 1.0, 0.2);
  CHECK(std::abs(p.x) < kTol);
  CHECK(std::abs(p.y) < kTol);
  CHECK(std::abs(p.theta - 0.2) < kTol);

  p = integrate_step(o, 1.0, kPi, 0.5);
  CHECK(std::abs(p.x - 1.0 / kPi) < kTol);
  CHECK(std::abs(p.y - 1.0 / kPi) < kTol);
  CHECK(std::abs(p.theta - kPi / 2.0) < kTol);
}

TEST_CASE("arc matches the closed-form oracle") {
  for (double w : {-2.0, -0.3, 0.05, 0.7, 3.0}) {
    for (double t : {0.2, 1.0, 2.7}) {
      const Pose<double> p = integrate_step(Pose<double>{}, 0.8, w, t);
      const oracle::PoseRef r = oracle::arc_from_origin(0.8, w, t);
      CHECK(std::abs(p.x - r.x) < kTol);
      CHECK(std::abs(p.y - r.y) < kTol);
      CHECK(std::abs(wrap_angle(p.theta - r.theta)) < kTol);
    }
  }
}

TEST_CASE("integrate_trajectory") {
  const Eigen::VectorXd v = Eigen::VectorXd::Constant(10, 0.5);
  const Eigen::VectorXd w = Eigen::VectorXd::Zero(10);
  const auto traj = integrate_trajectory<double>(v, w, 0.2);
  REQUIRE(traj.size() == 10);
  CHECK(std::abs(traj.poses.back().x - 1.0) < kTol);
  CHECK(std::abs(traj.poses.back().y) < kTol);

  SUBCASE("full circle closes") {
    const int n = 1000;
    const double dt = 2.0 * kPi / n;
    const auto c = integrate_trajectory<double>(Eigen::VectorXd::Ones(n), Eigen::VectorXd::Ones(n), dt);
    CHECK(std::hypot(c.poses.back().x, c.poses.back().y) < kTol);
    CHECK(std::abs(wrap_angle(c.poses.back().theta)) < kTol);
  }
  SUBCASE("empty") {
    CHECK(integrate_trajectory<double>(Eigen::VectorXd(0), Eigen::VectorXd(0), 0.2).size() == 0);
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(integrate_trajectory<double>(Eigen::VectorXd(2), Eigen::VectorXd(3), 0.2),
                    Error);
  }
}

TEST_CASE("branch switch continuity") {
  const Pose<double> start{0.3, -0.2, 1.1};
  for (double v : {0.1, 1.0, 2.0}) {
    const Pose<double> below = integrate_step(start, v, 0.9999999e-6, 0.2);
    const Pose<double> above = integrate_step(start, v, 1.0000001e-6, 0.2);
    CHECK(std::abs(below.x - above.x) < kTol);
    CHECK(std::abs(below.y - above.y) < kTol);
    const Pose<double> neg_below = integrate_step(start, v, -0.9999999e-6, 0.2);
    const Pose<double> neg_above = integrate_step(start, v, -1.0000001e-6, 0.2);
    CHECK(std::abs(neg_below.x - neg_above.x) < kTol);
    CHECK(std::abs(neg_below.y - neg_above.y) < kTol);
  }
}

TEST_CASE("composability and discrete inverse") {
  const Pose<double> start{1.0, 2.0, -0.4};
  for (double w : {0.0, 0.4, -1.3}) {
    const Pose<double> twice = integrate_step(integrate_step(start, 0.7, w, 0.2), 0.7, w, 0.2);
    const Pose<double> once = integrate_step(start, 0.7, w, 0.4);
    CHECK(std::abs(twice.x - once.x) < 1e-12);
    CHECK(std::abs(twice.y - once.y) < 1e-12);
    CHECK(std::abs(wrap_angle(twice.theta - once.theta)) < 1e-12);
  }
  const auto line = integrate_trajectory<double>(Eigen::VectorXd::Constant(5, 0.5),
                                                 Eigen::VectorXd::Zero(5), 0.25);
  for (std::size_t i = 1; i < line.size(); ++i) {
    CHECK(std::abs((line.poses[i].x - line.poses[i - 1].x) / 0.25 - 0.5) < 1e-12);
  }
}

TEST_CASE("euler scheme") {
  const Pose<double> p = integrate_step(Pose<double>{}, 1.0, 1.0, 0.5, IntegrationScheme::Euler);
  CHECK(p.x == 0.5);
  CHECK(p.y == 0.0);
  CHECK(p.theta == 0.5);
}

TEST_CASE("wrap_angle range") {
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3.0 * kPi / 2.0) == doctest::Approx(-kPi / 2.0));
  for (double a = -20.0; a < 20.0; a += 0.37) {
    const double r = wrap_angle(a);
    CHECK(r > -kPi);
    CHECK(r <= kPi);
    CHECK(std::abs(std::remainder(r - a, 2.0 * kPi)) < 1e-12);
  }
}

TEST_CASE("position_error") {
  const auto a = integrate_trajectory<double>(Eigen::VectorXd::Constant(3, 0.5),
                                              Eigen::VectorXd::Constant(3, 0.2), 0.2);
  CHECK(position_error(a, a, 2) == 0.0);
  PoseTrajectory<double> b = a;
  for (auto& p : b.poses) {
    p.x += 0.06;
    p.y += 0.08;
  }
  CHECK(position_error(a, b, 1) == doctest::Approx(0.10).epsilon(1e-12));
  CHECK(position_error(b, a, 1) == position_error(a, b, 1));
  try {
    position_error(a, b, 3);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IndexOutOfRange);
  }
}
