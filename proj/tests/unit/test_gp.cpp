#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "wheelpred/gp/hyperopt.hpp"
#include "wheelpred/gp/inducing.hpp"
#include "wheelpred/rng.hpp"

using namespace wheelpred;
using namespace wheelpred::gp;
using Params = KernelParams<double>;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo = -2,
                              double hi = 2) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  }
  return m;
}

Params random_params(Rng& rng, Eigen::Index dim) {
  Eigen::VectorXd ls(dim);
  for (Eigen::Index d = 0; d < dim; ++d) ls(d) = rng.uniform(0.5, 2.0);
  return Params(rng.uniform(0.5, 2.0), ls, rng.uniform(0.05, 0.5));
}

Eigen::MatrixXd row(double x) { return Eigen::MatrixXd::Constant(1, 1, x); }

}  // namespace

TEST_CASE("kernel closed forms") {
  const Params p2 = Params::isotropic(1, 2.0, 1.0, 0.1);
  CHECK(kernel_matrix(p2, row(0.3), row(0.3))(0, 0) == 2.0);

  const Params p1 = Params::isotropic(1, 1.0, 1.0, 0.1);
  CHECK(kernel_matrix(p1, row(0.0), row(1.0))(0, 0) == doctest::Approx(0.6065306597126334).epsilon(1e-15));

  Rng rng(3);
  const Params p = random_params(rng, 3);
  const Eigen::MatrixXd a = random_matrix(rng, 6, 3);
  const Eigen::MatrixXd b = random_matrix(rng, 4, 3);
  const Eigen::MatrixXd kab = kernel_matrix(p, a, b);
  const Eigen::MatrixXd kba = kernel_matrix(p, b, a);
  CHECK((kab - kba.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      CHECK(kab(i, j) == doctest::Approx(oracle::se_ard(p.signal_var(), p.lengthscales(),
                                                        a.row(i).transpose(), b.row(j).transpose()))
                             .epsilon(1e-13));
    }
  }
  const Eigen::MatrixXd kaa = kernel_matrix(p, a, a);
  CHECK(kaa == kaa.transpose());
}

TEST_CASE("kernel rejects mismatched dimensions") {
  const Params p = Params::isotropic(2, 1.0, 1.0, 0.1);
  CHECK_THROWS_AS(kernel_matrix(p, Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Zero(2, 2)),
                  Error);
  try {
    kernel_matrix(p, Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 1));
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("kernel matrices are PSD up to jitter") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Params p = random_params(rng, 2);
    const Eigen::MatrixXd x = random_matrix(rng, 15, 2);
    Eigen::MatrixXd k = kernel_matrix(p, x, x);
    k.diagonal().array() += 1e-8 * p.signal_var();
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    CHECK(llt.info() == Eigen::Success);
  }
}

TEST_CASE("exact GP one-point closed forms") {
  const Params p = Params::isotropic(1, 1.0, 1.0, 1.0);
  const ExactGP<double> gp = fit_exact<double>(row(0.0), Eigen::VectorXd::Ones(1), p);
  CHECK(gp.alpha()(0) == doctest::Approx(0.5).epsilon(1e-15));
  const Prediction<double> pred = predict_exact(gp, Eigen::VectorXd::Zero(1));
  CHECK(pred.mean == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(pred.variance == doctest::Approx(0.5).epsilon(1e-12));

  const Objective<double> lml =
      exact_log_marginal_and_grad<double>(row(0.0), Eigen::VectorXd::Ones(1), p);
  CHECK(std::abs(lml.value - (-0.25 - 0.5 * std::log(4.0 * M_PI))) < 1e-12);
  CHECK(std::abs(lml.value - (-1.5155121234846454)) < 1e-9);
}

TEST_CASE("exact GP fit edge cases") {
  SUBCASE("duplicate rows with tiny noise go through jitter escalation") {
    Eigen::MatrixXd x(4, 1);
    x << 0.5, 0.5, 0.5, 1.0;
    const Params p = Params::isotropic(1, 1.0, 1.0, 1e-9);
    const ExactGP<double> gp = fit_exact<double>(x, Eigen::Vector4d(1, 1, 1, 0), p);
    CHECK(gp.alpha().allFinite());
    CHECK(gp.cholesky_factor().diagonal().minCoeff() > 0.0);
  }
  SUBCASE("a singular matrix needs jitter to factor") {
    Eigen::MatrixXd x(3, 1);
    x << 0.5, 0.5, 0.5;
    const Eigen::MatrixXd k = kernel_matrix(Params::isotropic(1, 1.0, 1.0, 1.0), x, x);
    const JitteredCholesky<double> chol = jittered_cholesky(k);
    CHECK(chol.jitter > 0.0);
    CHECK(chol.jitter <= 1e-6);
    CHECK_THROWS_AS(jittered_cholesky<double>(-Eigen::MatrixXd::Identity(2, 2)), Error);
  }
  SUBCASE("zero targets give zero weights") {
    Rng rng(5);
    const Eigen::MatrixXd x = random_matrix(rng, 8, 2);
    const ExactGP<double> gp =
        fit_exact<double>(x, Eigen::VectorXd::Zero(8), Params::isotropic(2, 1.0, 1.0, 0.1));
    CHECK(gp.alpha().cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("far from data reverts to the prior") {
    Rng rng(6);
    const Eigen::MatrixXd x = random_matrix(rng, 10, 1);
    const Eigen::VectorXd y = random_matrix(rng, 10, 1);
    const Params p = Params::isotropic(1, 1.7, 0.5, 0.1);
    const ExactGP<double> gp = fit_exact<double>(x, y, p);
    const Prediction<double> pred = predict_exact(gp, Eigen::VectorXd::Constant(1, 2.0 + 20 * 0.5));
    CHECK(std::abs(pred.mean) < 1e-6);
    CHECK(pred.variance == doctest::Approx(1.7).epsilon(1e-9));
  }
  SUBCASE("near-zero noise interpolates") {
    Eigen::MatrixXd x(5, 1);
    x << 0, 1, 2, 3, 4;
    const Eigen::VectorXd y = (Eigen::VectorXd(5) << 0.3, -1.0, 0.7, 0.2, 1.1).finished();
    const ExactGP<double> gp = fit_exact<double>(x, y, Params::isotropic(1, 1.0, 1.0, 1e-10));
    for (Eigen::Index i = 0; i < 5; ++i) {
      CHECK(std::abs(predict_exact(gp, x.row(i).transpose()).mean - y(i)) < 1e-4);
    }
  }
  SUBCASE("dimension checks") {
    const ExactGP<double> gp = fit_exact<double>(row(0.0), Eigen::VectorXd::Ones(1),
                                                 Params::isotropic(1, 1.0, 1.0, 1.0));
    CHECK_THROWS_AS(predict_exact(gp, Eigen::VectorXd::Zero(2)), Error);
    CHECK_THROWS_AS(fit_exact<double>(Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(2),
                                      Params::isotropic(2, 1.0, 1.0, 1.0)),
                    Error);
  }
}

TEST_CASE("exact GP variance stays within [0, sf2 + sn2]") {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const Params p = random_params(rng, 2);
    const ExactGP<double> gp = fit_exact<double>(random_matrix(rng, 12, 2),
                                                 random_matrix(rng, 12, 1), p);
    for (int q = 0; q < 20; ++q) {
      const Prediction<double> pred = gp.predict(random_matrix(rng, 1, 2, -4, 4).transpose());
      CHECK(pred.variance >= 0.0);
      CHECK(pred.variance <= p.signal_var() + p.noise_var());
    }
  }
}

TEST_CASE("data-fit term vanishes as targets shrink") {
  Rng rng(8);
  const Eigen::MatrixXd x = random_matrix(rng, 10, 2);
  const Eigen::VectorXd y = random_matrix(rng, 10, 1);
  const Params p = random_params(rng, 2);
  const double at_zero = exact_log_marginal_and_grad<double>(x, Eigen::VectorXd::Zero(10), p).value;
  double previous = -1e300;
  for (double s : {1.0, 0.1, 0.01, 0.0}) {
    const double value = exact_log_marginal_and_grad<double>(x, s * y, p).value;
    CHECK(value >= previous);
    previous = value;
  }
  CHECK(previous == doctest::Approx(at_zero).epsilon(1e-14));
}

TEST_CASE("LML gradients match central differences") {
  Rng rng(1234);
  for (int trial = 0; trial < 20; ++trial) {
    const Params p = random_params(rng, 2);
    const Eigen::MatrixXd x = random_matrix(rng, 10, 2);
    const Eigen::VectorXd y = random_matrix(rng, 10, 1);
    const Eigen::MatrixXd z = x.topRows(4) + 0.1 * random_matrix(rng, 4, 2);

    auto exact_value = [&](const Eigen::VectorXd& t) {
      return exact_log_marginal_and_grad<double>(x, y, Params::from_packed(t)).value;
    };
    auto fitc_value = [&](const Eigen::VectorXd& t) {
      return fitc_log_marginal_and_grad<double>(x, y, z, Params::from_packed(t)).value;
    };
    const Eigen::VectorXd ge = exact_log_marginal_and_grad<double>(x, y, p).gradient;
    const Eigen::VectorXd gf = fitc_log_marginal_and_grad<double>(x, y, z, p).gradient;
    CHECK(oracle::max_relative_error(ge, oracle::central_difference(exact_value, p.packed())) < 1e-4);
    CHECK(oracle::max_relative_error(gf, oracle::central_difference(fitc_value, p.packed())) < 1e-4);
  }
}

TEST_CASE("FITC with Z = X reproduces the exact GP") {
  Rng rng(99);
  const Eigen::MatrixXd x = random_matrix(rng, 25, 2);
  const Eigen::VectorXd y = random_matrix(rng, 25, 1);
  const Params p(1.3, Eigen::Vector2d(0.8, 1.2), 0.2);
  const ExactGP<double> exact = fit_exact<double>(x, y, p);
  const SparseGP<double> sparse = fit_fitc<double>(x, y, x, p);
  double mean_diff = 0.0;
  double var_diff = 0.0;
  for (int q = 0; q < 100; ++q) {
    const Eigen::VectorXd xs = random_matrix(rng, 1, 2, -3, 3).transpose();
    const Prediction<double> a = exact.predict(xs);
    const Prediction<double> b = sparse.predict(xs);
    mean_diff = std::max(mean_diff, std::abs(a.mean - b.mean));
    var_diff = std::max(var_diff, std::abs(a.variance - b.variance));
    CHECK(sparse.predict_mean(xs) == b.mean);
  }
  CHECK(mean_diff < 1e-6);
  CHECK(var_diff < 1e-5);
  CHECK(fitc_log_marginal_and_grad<double>(x, y, x, p).value ==
        doctest::Approx(exact_log_marginal_and_grad<double>(x, y, p).value).epsilon(1e-8));
}

TEST_CASE("FITC with one inducing point matches the rank-1 closed form") {
  // X = {-1, 1}, y = {1, 1}, Z = {0}, sf2 = 1, l = 1, sn2 = 0.1.
  // k_uf = e^{-1/2} for both, Lambda = 1 - e^{-1} + 0.1, and the mean at 0 is
  // 2 e^{-1/2} / (Lambda + 2 e^{-1}) = 2 e^{-1/2} / (1.1 + e^{-1}).
  Eigen::MatrixXd x(2, 1);
  x << -1, 1;
  const SparseGP<double> gp =
      fit_fitc<double>(x, Eigen::Vector2d(1, 1), row(0.0), Params::isotropic(1, 1.0, 1.0, 0.1));
  const double expected = 2.0 * std::exp(-0.5) / (1.1 + std::exp(-1.0));
  CHECK(std::abs(expected - 0.8264039166984873) < 1e-15);
  CHECK(gp.predict(Eigen::VectorXd::Zero(1)).mean == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("FITC basic properties") {
  Rng rng(42);
  const Eigen::MatrixXd x = random_matrix(rng, 30, 2);
  const Eigen::MatrixXd z = x.topRows(5);
  const Params p = Params::isotropic(2, 1.0, 0.7, 0.1);

  const SparseGP<double> zero = fit_fitc<double>(x, Eigen::VectorXd::Zero(30), z, p);
  for (int q = 0; q < 10; ++q) {
    CHECK(zero.predict(random_matrix(rng, 1, 2).transpose()).mean == 0.0);
  }

  const SparseGP<double> gp = fit_fitc<double>(x, random_matrix(rng, 30, 1), z, p);
  const Eigen::VectorXd far = Eigen::VectorXd::Constant(2, 2.0 + 20 * 0.7);
  const Prediction<double> pf = gp.predict(far);
  CHECK(std::abs(pf.mean) < 1e-6);
  CHECK(pf.variance == doctest::Approx(1.0).epsilon(1e-9));

  const Eigen::VectorXd q = random_matrix(rng, 1, 2).transpose();
  CHECK(gp.predict(q).mean == gp.predict(q).mean);
  CHECK(gp.predict(q).variance == gp.predict(q).variance);

  CHECK_THROWS_AS(fit_fitc<double>(x.topRows(3), Eigen::VectorXd::Zero(3), x.topRows(4), p), Error);
  CHECK_THROWS_AS(gp.predict(Eigen::VectorXd::Zero(3)), Error);
}

TEST_CASE("select_inducing") {
  Rng rng(77);
  const Eigen::MatrixXd x = random_matrix(rng, 12, 3);

  SUBCASE("M = n gives a permutation of the rows") {
    const Eigen::MatrixXd z = select_inducing<double>(x, 12, 5);
    std::vector<bool> used(12, false);
    for (Eigen::Index c = 0; c < 12; ++c) {
      bool found = false;
      for (Eigen::Index i = 0; i < 12; ++i) {
        if (!used[static_cast<std::size_t>(i)] && z.row(c) == x.row(i)) {
          used[static_cast<std::size_t>(i)] = true;
          found = true;
          break;
        }
      }
      CHECK(found);
    }
  }
  SUBCASE("identical rows collapse to that point") {
    const Eigen::MatrixXd same = Eigen::MatrixXd::Constant(9, 2, 0.1);
    const Eigen::MatrixXd z = select_inducing<double>(same, 4, 1);
    CHECK(z == Eigen::MatrixXd::Constant(4, 2, 0.1));
  }
  SUBCASE("deterministic in the seed") {
    CHECK(select_inducing<double>(x, 5, 9) == select_inducing<double>(x, 5, 9));
  }
  SUBCASE("too many points") {
    try {
      select_inducing<double>(x, 13, 0);
      FAIL("expected TooFewPoints");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TooFewPoints);
    }
  }
}

TEST_CASE("optimize_hyperparams") {
  SUBCASE("stationary start returns the start") {
    // One point: the optimum of sf2 + sn2 = y^2 traces a ridge; at
    // sf2 = sn2 = 0.5, y = 1 the gradient is exactly zero.
    const Params init = Params::isotropic(1, 0.5, 1.0, 0.5);
    const Objective<double> obj =
        exact_log_marginal_and_grad<double>(row(0.0), Eigen::VectorXd::Ones(1), init);
    CHECK(obj.gradient.norm() < 1e-10);
    OptimizerConfig config;
    config.objective = ObjectiveKind::Exact;
    const auto result = optimize_hyperparams<double>(row(0.0), Eigen::VectorXd::Ones(1),
                                                     row(0.0), init, config);
    CHECK(result.params.packed() == init.packed());
    CHECK(result.steps_taken == 0);
  }

  SUBCASE("best-so-far never decreases and ends above the start") {
    Rng rng(17);
    Eigen::MatrixXd x(60, 1);
    Eigen::VectorXd y(60);
    for (Eigen::Index i = 0; i < 60; ++i) {
      x(i, 0) = rng.uniform(-3, 3);
      y(i) = std::sin(2.0 * x(i, 0)) + 0.05 * rng.normal();
    }
    OptimizerConfig config;
    config.steps = 60;
    const Eigen::MatrixXd z = select_inducing<double>(x, 10, 3);
    const auto result =
        optimize_hyperparams<double>(x, y, z, Params::isotropic(1, 1.0, 1.0, 0.1), config);
    CHECK(result.best_objective >= result.initial_objective);
    for (std::size_t i = 1; i < result.best_so_far.size(); ++i) {
      CHECK(result.best_so_far[i] >= result.best_so_far[i - 1]);
    }
  }

  SUBCASE("recovers the generating noise level") {
    Rng rng(2024);
    const double sigma_n = 0.1;
    Eigen::MatrixXd x(200, 1);
    Eigen::VectorXd y(200);
    for (Eigen::Index i = 0; i < 200; ++i) {
      x(i, 0) = rng.uniform(0, 2 * M_PI);
      y(i) = std::sin(x(i, 0)) + sigma_n * rng.normal();
    }
    OptimizerConfig config;
    config.objective = ObjectiveKind::Exact;
    const auto result =
        optimize_hyperparams<double>(x, y, x, Params::isotropic(1, 1.0, 1.0, 0.1), config);
    const double ratio = result.params.noise_var() / (sigma_n * sigma_n);
    CHECK(ratio > 1.0 / 3.0);
    CHECK(ratio < 3.0);
  }

  SUBCASE("non-finite objective reports the step") {
    OptimizerConfig config;
    config.steps = 5;
    std::function<Objective<double>(const Params&)> bad = [](const Params& p) {
      Objective<double> o;
      o.value = std::nan("");
      o.gradient = Eigen::VectorXd::Zero(p.packed().size());
      return o;
    };
    try {
      maximize<double>(bad, Params::isotropic(1, 1.0, 1.0, 0.1), config);
      FAIL("expected NonFiniteObjective");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonFiniteObjective);
      CHECK(e.index() == std::size_t{0});
    }
  }
}

TEST_CASE("templated on scalar: long double agrees with double") {
  using LParams = KernelParams<long double>;
  Rng rng(4);
  const Eigen::MatrixXd x = random_matrix(rng, 8, 2);
  const Eigen::VectorXd y = random_matrix(rng, 8, 1);
  const Params p = Params::isotropic(2, 1.0, 1.0, 0.1);
  const LParams lp = LParams::isotropic(2, 1.0L, 1.0L, 0.1L);
  const auto gd = fit_exact<double>(x, y, p);
  const auto gl = fit_exact<long double>(x.cast<long double>(), y.cast<long double>(), lp);
  const Eigen::VectorXd q = Eigen::Vector2d(0.2, -0.4);
  CHECK(gd.predict(q).mean ==
        doctest::Approx(static_cast<double>(gl.predict(q.cast<long double>()).mean)).epsilon(1e-12));
}
