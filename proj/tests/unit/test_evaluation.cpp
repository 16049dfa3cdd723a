#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "wheelpred/error.hpp"
#include "wheelpred/evaluation.hpp"
#include "wheelpred/rng.hpp"
#include "wheelpred/simulator.hpp"

using namespace wheelpred;

namespace {

struct ZeroPredictor final : TrajectoryPredictor {
  VelocityTrajectory predict(const FeatureWindow&, std::size_t k) const override {
    const auto n = static_cast<Eigen::Index>(k);
    return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), kSampleDt};
  }
};

DriveLog straight_log(std::size_t n, double v) {
  DriveLog log;
  for (std::size_t i = 0; i < n; ++i) log.samples.push_back({0.2 * static_cast<double>(i), 0, 0.5, v, 0});
  return log;
}

EvalMatrix filled(const double (&values)[6][3], std::size_t horizon) {
  EvalMatrix m;
  std::size_t row = 0;
  for (std::string_view test : kTestTags) {
    for (ModelKind kind : kModelOrder) {
      for (std::size_t col = 0; col < 3; ++col) {
        m.cells.push_back({std::string(kTrainTags[col]), std::string(test), kind, horizon,
                           values[row][col], 0, 0});
      }
      ++row;
    }
  }
  return m;
}

constexpr double kTableI[6][3] = {{92.21, 92.66, 91.69}, {94.86, 94.55, 94.51},
                                  {82.21, 75.26, 83.45}, {83.79, 82.12, 82.94},
                                  {79.96, 82.04, 83.46}, {84.01, 83.05, 82.35}};

ModelGrid oracle_grid() {
  ModelGrid grid;
  for (std::string_view train : kTrainTags) {
    for (ModelKind kind : kModelOrder) {
      grid[std::string(train)][kind] = std::make_shared<const OraclePredictor>();
    }
  }
  return grid;
}

TestSets small_tests() {
  TestSets tests;
  tests["tile"] = simulate(SimConfig::for_profile("tile", 1.0, 1));
  tests["carpet"] = simulate(SimConfig::for_profile("carpet", 1.0, 2));
  tests["hybrid"] = simulate(SimConfig::for_profile("hybrid", 1.0, 3));
  return tests;
}

}  // namespace

TEST_CASE("success_rate examples") {
  const SuccessRate worked = success_rate_from_counts(11065, 12000);
  CHECK(worked.pct == 92.21);
  CHECK(worked.n_success == 11065);
  CHECK(worked.n_cases == 12000);

  const std::vector<double> zeros(17, 0.0);
  CHECK(success_rate(zeros, 0.1).pct == 100.0);

  const std::vector<double> three = {0.05, 0.12, 0.08};
  const SuccessRate r = success_rate(three, 0.10);
  CHECK(r.pct == 66.67);
  CHECK(r.n_success == 2);
  CHECK(r.n_cases == 3);

  CHECK(success_rate(std::vector<double>{0.1}, 0.1).pct == 100.0);
  CHECK(success_rate_from_counts(1, 8).pct == 12.5);
  CHECK(success_rate_from_counts(1, 80000).pct == 0.0);
  CHECK(success_rate_from_counts(1, 20000).pct == 0.01);  // exactly half a basis point rounds up
  CHECK_THROWS_AS(success_rate(std::vector<double>{}, 0.1), Error);
}

TEST_CASE("success_rate matches a brute-force count and is monotone") {
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> errors(1 + rng.index(300));
    for (double& e : errors) e = rng.uniform(0.0, 0.25);
    double previous = -1.0;
    for (double threshold : {0.0, 0.05, 0.1, 0.15, 0.3}) {
      const SuccessRate r = success_rate(errors, threshold);
      const std::size_t hits = oracle::count_within(errors, threshold);
      CHECK(r.n_success == hits);
      CHECK(r.pct == oracle::percent_2dp(hits, errors.size()));
      CHECK(r.pct >= previous);
      previous = r.pct;
    }
  }
}

TEST_CASE("horizon arithmetic and captions") {
  CHECK(horizon_ms(5) == 1000);
  CHECK(horizon_ms(7) == 1400);
  CHECK(horizon_ms(10) == 2000);
  CHECK(horizon_steps_from_ms(1000) == 5);
  CHECK(horizon_steps_from_ms(1400) == 7);
  CHECK(horizon_steps_from_ms(2000) == 10);
  CHECK_THROWS_AS(horizon_steps_from_ms(1100), Error);
  CHECK(table_caption(0.10, 5) ==
        "Percent of pose prediction with no more than 10 cm error at 1000ms horizon.");
  CHECK(table_caption(0.10, 7) ==
        "Percent of pose prediction with no more than 10 cm error at 1400ms horizon.");
  CHECK(table_caption(0.10, 10) ==
        "Percent of pose prediction with no more than 10 cm error at 2000ms horizon.");
}

TEST_CASE("evaluate_pair") {
  const DriveLog log = simulate(SimConfig::for_profile("carpet", 1.0, 4));
  const auto windows = make_windows(log, 5, 10);
  EvalConfig config;

  const PairResult oracle = evaluate_pair(OraclePredictor{}, windows, 10, config);
  CHECK(oracle.rate.pct == 100.0);
  CHECK(oracle.rate.n_cases == windows.size());

  const auto straight = make_windows(straight_log(40, 0.5), 5, 10);
  const PairResult zero = evaluate_pair(ZeroPredictor{}, straight, 10, config);
  CHECK(zero.rate.pct == 0.0);
  for (double e : zero.errors) CHECK(e == doctest::Approx(1.0).epsilon(1e-12));

  SUBCASE("max over path is never below the final step") {
    config.error_mode = ErrorMode::MaxOverPath;
    const PairResult max_mode = evaluate_pair(ZeroPredictor{}, windows, 10, config);
    config.error_mode = ErrorMode::FinalStep;
    const PairResult final_mode = evaluate_pair(ZeroPredictor{}, windows, 10, config);
    for (std::size_t i = 0; i < windows.size(); ++i) {
      CHECK(max_mode.errors[i] >= final_mode.errors[i]);
    }
  }
  CHECK_THROWS_AS(evaluate_pair(OraclePredictor{}, std::vector<FeatureWindow>{}, 5, config), Error);
  CHECK_THROWS_AS(evaluate_pair(OraclePredictor{}, make_windows(log, 5, 5), 7, config), Error);
}

TEST_CASE("cross_matrix") {
  const TestSets tests = small_tests();
  EvalConfig config;
  const EvalMatrix m = cross_matrix(oracle_grid(), tests, config);
  CHECK(m.cells.size() == 54);
  for (const EvalCell& c : m.cells) {
    CHECK(c.success_pct == 100.0);
    CHECK(c.n_cases == tests.at(c.test).size() - 5 - c.horizon_steps + 1);
  }
  CHECK(m.horizons() == std::vector<std::size_t>{5, 7, 10});

  SUBCASE("identical test sets give identical rows") {
    TestSets same = tests;
    same["carpet"] = same["tile"];
    ModelGrid grid = oracle_grid();
    grid["tile"][ModelKind::Mlp] = std::make_shared<const ZeroPredictor>();
    const EvalMatrix s = cross_matrix(grid, same, config);
    for (std::string_view train : kTrainTags) {
      for (ModelKind kind : kModelOrder) {
        CHECK(s.find(train, "tile", kind, 10)->success_pct ==
              s.find(train, "carpet", kind, 10)->success_pct);
      }
    }
    CHECK(render_table(s, 7) == render_table(cross_matrix(grid, same, config), 7));
  }
  SUBCASE("missing inputs") {
    ModelGrid grid = oracle_grid();
    grid["both"].erase(ModelKind::Asgp);
    CHECK_THROWS_AS(cross_matrix(grid, tests, config), Error);
    TestSets partial = tests;
    partial.erase("hybrid");
    try {
      cross_matrix(oracle_grid(), partial, config);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::IncompleteInputs);
      CHECK(std::string(e.what()).find("hybrid") != std::string::npos);
    }
  }
  SUBCASE("single horizon") {
    config.horizons = {5};
    CHECK(cross_matrix(oracle_grid(), tests, config).cells.size() == 18);
  }
}

TEST_CASE("render_table layout") {
  const EvalMatrix m = filled(kTableI, 5);
  const std::string table = render_table(m, 5);
  std::istringstream lines(table);
  std::string caption, blank, header, rule, first;
  std::getline(lines, caption);
  std::getline(lines, blank);
  std::getline(lines, header);
  std::getline(lines, rule);
  std::getline(lines, first);
  CHECK(caption == "Percent of pose prediction with no more than 10 cm error at 1000ms horizon.");
  CHECK(header == "| Test | Model | Tile | Carpet | Both (1:1) |");
  CHECK(first == "| Tile | MLP | 92.21 | 92.66 | 91.69 |");
  CHECK(table.find("| Hybrid | ASGP | 84.01 | 83.05 | 82.35 |") != std::string::npos);

  const double zeros[6][3] = {};
  const std::string z = render_table(filled(zeros, 7), 7);
  CHECK(z.find("1400ms") != std::string::npos);
  CHECK(z.find("| Carpet | ASGP | 0.00 | 0.00 | 0.00 |") != std::string::npos);

  EvalMatrix incomplete = m;
  incomplete.cells.pop_back();
  CHECK_THROWS_AS(render_table(incomplete, 5), Error);
  CHECK_THROWS_AS(render_table(m, 7), Error);
}

TEST_CASE("rendered tables parse back exactly") {
  Rng rng(10);
  double values[6][3];
  for (auto& row : values) {
    for (double& v : row) v = std::round(rng.uniform(0, 100) * 100.0) / 100.0;
  }
  const EvalMatrix m = filled(values, 10);
  const std::vector<EvalCell> back = parse_table(render_table(m, 10));
  REQUIRE(back.size() == 18);
  for (const EvalCell& c : back) {
    const EvalCell* orig = m.find(c.train, c.test, c.model, c.horizon_steps);
    REQUIRE(orig != nullptr);
    CHECK(orig->success_pct == c.success_pct);
  }
}

TEST_CASE("matrix csv") {
  const EvalMatrix m = cross_matrix(oracle_grid(), small_tests(), EvalConfig{});
  const std::string csv = render_matrix_csv(m);
  CHECK(csv.rfind("train,test,model,horizon_ms,success_pct,n_success,n_cases\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 55);
  CHECK(csv.find("tile,tile,mlp,1000,100.00,") != std::string::npos);
}

TEST_CASE("error curve") {
  const std::string one = emit_error_curve(Eigen::MatrixXd::Zero(1, 3), 0.1);
  CHECK(one ==
        "step_ms,p50_error_m,p90_error_m,success_pct\n"
        "200,0.000000,0.000000,100.00\n"
        "400,0.000000,0.000000,100.00\n"
        "600,0.000000,0.000000,100.00\n");

  Eigen::MatrixXd two = Eigen::MatrixXd::Zero(2, 5);
  two(1, 4) = 0.2;
  const std::string curve = emit_error_curve(two, 0.1);
  CHECK(curve.find("1000,0.100000,0.180000,50.00\n") != std::string::npos);
  CHECK(std::count(curve.begin(), curve.end(), '\n') == 6);
  CHECK_THROWS_AS(emit_error_curve(Eigen::MatrixXd(0, 0), 0.1), Error);

  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> v(1 + rng.index(40));
    for (double& x : v) x = rng.uniform(0, 1);
    const double q = rng.uniform(0, 1);
    CHECK(percentile(v, q) == doctest::Approx(oracle::percentile(v, q)).epsilon(1e-12));
  }
}

TEST_CASE("step_errors shape and oracle zeros") {
  const auto windows = make_windows(simulate(SimConfig::for_profile("hybrid", 1.0, 6)), 5, 7);
  const Eigen::MatrixXd e = step_errors(OraclePredictor{}, windows, 7);
  CHECK(e.rows() == static_cast<Eigen::Index>(windows.size()));
  CHECK(e.cols() == 7);
  CHECK(e.isZero());
}
