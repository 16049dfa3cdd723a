#include "wheelpred/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "wheelpred/evaluation.hpp"
#include "wheelpred/gp/exact_gp.hpp"
#include "wheelpred/gp/sparse_gp.hpp"
#include "wheelpred/mlp.hpp"
#include "wheelpred/pose.hpp"
#include "wheelpred/rng.hpp"

namespace wheelpred {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

std::string fmt(const char* f, double x) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double relative_error(const Vec& a, const Vec& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a(i)), std::abs(b(i)), 1e-6});
    worst = std::max(worst, std::abs(a(i) - b(i)) / denom);
  }
  return worst;
}

template <typename F>
Vec central_difference(F&& f, const Vec& theta, double h) {
  Vec g(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Vec hi = theta;
    Vec lo = theta;
    hi(i) += h;
    lo(i) -= h;
    g(i) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

Mat random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.uniform(lo, hi);
  return m;
}

gp::KernelParams<double> random_params(Rng& rng, Eigen::Index dim) {
  Vec ls(dim);
  for (Eigen::Index d = 0; d < dim; ++d) ls(d) = rng.uniform(0.5, 2.0);
  return {rng.uniform(0.5, 2.0), ls, rng.uniform(0.05, 0.5)};
}

CheckResult kernel_closed_form() {
  const gp::KernelParams<double> p(2.0, Vec::Constant(2, 0.5), 0.1);
  Mat a(2, 2);
  a << 0.0, 0.0, 0.5, 0.0;
  const Mat k = gp::kernel_matrix(p, a, a);
  const double expected = 2.0 * std::exp(-0.5);
  const double err = std::max({std::abs(k(0, 0) - 2.0), std::abs(k(0, 1) - expected),
                               std::abs(k(1, 0) - expected)});
  return {"kernel_closed_form", err < 1e-12, fmt("max abs error %.3g", err)};
}

CheckResult exact_gp_one_point() {
  Mat x(1, 1);
  x << 0.0;
  Vec y(1);
  y << 1.0;
  const gp::KernelParams<double> p(1.0, Vec::Constant(1, 1.0), 1.0);
  const auto model = gp::fit_exact<double>(x, y, p);
  const auto pred = model.predict(Vec::Zero(1));
  const double lml = gp::exact_log_marginal_and_grad<double>(x, y, p).value;
  const double lml_ref = -0.5 * 0.5 - 0.5 * std::log(2.0) - 0.5 * std::log(2.0 * std::numbers::pi);
  const double err = std::max(
      {std::abs(pred.mean - 0.5), std::abs(pred.variance - 0.5), std::abs(lml - lml_ref)});
  return {"exact_gp_one_point", err < 1e-9, fmt("max abs error %.3g", err)};
}

CheckResult lml_gradient(const SelftestOptions& options) {
  Rng rng(11);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index dim = 1 + static_cast<Eigen::Index>(trial % 3);
    const Mat x = random_matrix(rng, 10, dim, -2.0, 2.0);
    Vec y(10);
    for (Eigen::Index i = 0; i < 10; ++i) y(i) = std::sin(x.row(i).sum()) + 0.1 * rng.normal();
    const Mat z = x.topRows(4);
    const auto params = random_params(rng, dim);
    const bool sparse = trial % 2 == 1;
    auto value = [&](const Vec& theta) {
      const auto p = gp::KernelParams<double>::from_packed(theta);
      return sparse ? gp::fitc_log_marginal_and_grad<double>(x, y, z, p).value
                    : gp::exact_log_marginal_and_grad<double>(x, y, p).value;
    };
    Vec analytic = sparse ? gp::fitc_log_marginal_and_grad<double>(x, y, z, params).gradient
                          : gp::exact_log_marginal_and_grad<double>(x, y, params).gradient;
    if (options.gradient_hook) options.gradient_hook(analytic);
    const Vec numeric = central_difference(value, params.packed(), 1e-5);
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return {"lml_gradient_fd", worst < 1e-4, fmt("max relative error %.3g over 20 problems", worst)};
}

CheckResult fitc_equals_exact() {
  Rng rng(12);
  const Mat x = random_matrix(rng, 30, 2, -2.0, 2.0);
  Vec y(30);
  for (Eigen::Index i = 0; i < 30; ++i) y(i) = std::cos(x(i, 0)) * x(i, 1);
  const gp::KernelParams<double> p(1.3, Vec::Constant(2, 0.9), 0.05);
  const auto exact = gp::fit_exact<double>(x, y, p);
  const auto sparse = gp::fit_fitc<double>(x, y, x, p);
  double mean_err = 0.0;
  double var_err = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec q = random_matrix(rng, 2, 1, -2.5, 2.5);
    const auto a = exact.predict(q);
    const auto b = sparse.predict(q);
    mean_err = std::max(mean_err, std::abs(a.mean - b.mean));
    var_err = std::max(var_err, std::abs(a.variance - b.variance));
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "mean %.3g, variance %.3g", mean_err, var_err);
  return {"fitc_equals_exact", mean_err < 1e-6 && var_err < 1e-5, buf};
}

CheckResult mlp_gradient() {
  Rng rng(13);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index dim = 2 + trial % 3;
    const Eigen::Index hidden = 3 + trial % 4;
    MLPConfig config;
    config.hidden = static_cast<int>(hidden);
    config.seed = static_cast<std::uint64_t>(trial);
    const MLPParams params = mlp_init(dim, config);
    const Mat x = random_matrix(rng, 8, dim, -1.0, 1.0);
    const Vec y = random_matrix(rng, 8, 1, -1.0, 1.0);
    const Vec analytic = mlp_grad(params, x, y).pack();
    auto loss = [&](const Vec& theta) {
      return 0.5 * mlp_mse(MLPParams::unpack(theta, hidden, dim), x, y);
    };
    const Vec numeric = central_difference(loss, params.pack(), 1e-6);
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return {"mlp_gradient_fd", worst < 1e-5, fmt("max relative error %.3g over 20 instances", worst)};
}

CheckResult integrator_closed_forms() {
  const double pi = std::numbers::pi;
  double err = 0.0;
  const Pose<double> origin{};
  // straight line
  Pose<double> p = origin;
  for (int i = 0; i < 10; ++i) p = integrate_step(p, 0.5, 0.0, 0.2);
  err = std::max({err, std::abs(p.x - 1.0), std::abs(p.y), std::abs(p.theta)});
  // pure rotation
  p = integrate_step(origin, 0.0, pi / 2.0, 1.0);
  err = std::max({err, std::abs(p.x), std::abs(p.y), std::abs(p.theta - pi / 2.0)});
  // quarter arc of radius 1
  p = integrate_step(origin, pi / 2.0, pi / 2.0, 1.0);
  err = std::max({err, std::abs(p.x - 1.0), std::abs(p.y - 1.0), std::abs(p.theta - pi / 2.0)});
  // full circle in 100 steps
  p = origin;
  for (int i = 0; i < 100; ++i) p = integrate_step(p, 1.0, 2.0 * pi / 10.0, 0.1);
  err = std::max({err, std::abs(p.x), std::abs(p.y), std::abs(wrap_angle(p.theta))});
  // continuity across the straight-line branch
  const Pose<double> below = integrate_step(origin, 1.0, 0.999e-6, 0.2);
  const Pose<double> above = integrate_step(origin, 1.0, 1.001e-6, 0.2);
  err = std::max({err, std::abs(below.x - above.x), std::abs(below.y - above.y)});
  return {"integrator_closed_forms", err < 1e-9, fmt("max abs error %.3g", err)};
}

CheckResult success_rate_counts() {
  Rng rng(14);
  bool ok = true;
  for (int trial = 0; trial < 200 && ok; ++trial) {
    const std::size_t n = 1 + rng.index(500);
    std::vector<double> errors(n);
    for (double& e : errors) e = rng.uniform(0.0, 0.3);
    std::size_t hits = 0;
    for (double e : errors) hits += e <= 0.1 ? 1 : 0;
    const SuccessRate rate = success_rate(errors, 0.1);
    const double expected = std::floor(10000.0 * static_cast<double>(hits) /
                                           static_cast<double>(n) +
                                       0.5 + 1e-9) /
                            100.0;
    ok = rate.n_success == hits && rate.n_cases == n && std::abs(rate.pct - expected) < 1e-9;
  }
  const double worked = success_rate_from_counts(11065, 12000).pct;
  ok = ok && std::abs(worked - 92.21) < 1e-12;
  return {"success_rate_counts", ok, fmt("11065/12000 -> %.2f", worked)};
}

}  // namespace

std::vector<CheckResult> run_selftest(const SelftestOptions& options) {
  std::vector<CheckResult> out;
  auto guarded = [&out](const char* name, auto&& check) {
    try {
      out.push_back(check());
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("exception: ") + e.what()});
    }
  };
  guarded("kernel_closed_form", kernel_closed_form);
  guarded("exact_gp_one_point", exact_gp_one_point);
  guarded("lml_gradient_fd", [&] { return lml_gradient(options); });
  guarded("fitc_equals_exact", fitc_equals_exact);
  guarded("mlp_gradient_fd", mlp_gradient);
  guarded("integrator_closed_forms", integrator_closed_forms);
  guarded("success_rate_counts", success_rate_counts);
  return out;
}

}  // namespace wheelpred
