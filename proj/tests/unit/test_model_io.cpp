#include <doctest.h>

#include <filesystem>

#include "wheelpred/error.hpp"
#include "wheelpred/model_io.hpp"
#include "wheelpred/simulator.hpp"

using namespace wheelpred;

namespace {

OneStepData small_data() {
  const DriveLog log = simulate(SimConfig::for_profile("tile", 1.0, 13));
  return one_step_data(make_windows(log, 3, 1));
}

PredictorModel small_asgp() {
  AsgpConfig cfg;
  cfg.inducing = 8;
  cfg.optimizer.steps = 5;
  return train_asgp(small_data(), TargetKind::Angular, 3, cfg).model;
}

PredictorModel small_mlp() {
  MLPConfig cfg;
  cfg.hidden = 6;
  cfg.epochs = 2;
  return train_mlp(small_data(), TargetKind::Linear, 3, cfg).model;
}

ErrorCode parse_code(const std::string& text) {
  try {
    parse_model(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("round trip preserves predictions bit for bit") {
  const OneStepData data = small_data();
  for (const PredictorModel& model : {small_asgp(), small_mlp()}) {
    const std::string text = render_model(model);
    CHECK(text.rfind("wheelpred-model v1\n", 0) == 0);
    const PredictorModel back = parse_model(text);
    CHECK(back.kind() == model.kind());
    CHECK(back.target() == model.target());
    CHECK(back.history() == model.history());
    CHECK(render_model(back) == text);
    for (Eigen::Index i = 0; i < data.inputs.rows(); i += 17) {
      const Eigen::VectorXd x = data.inputs.row(i).transpose();
      CHECK(back.predict_one(x) == model.predict_one(x));
      const auto a = back.predict_distribution(x);
      const auto b = model.predict_distribution(x);
      CHECK(a.variance == b.variance);
    }
  }
}

TEST_CASE("save and load through a file") {
  const auto dir = std::filesystem::temp_directory_path() / "wheelpred_model_io_test";
  std::filesystem::create_directories(dir);
  const PredictorModel model = small_mlp();
  const auto path = dir / model_file_name(model.kind(), model.target());
  CHECK(path.filename() == "mlp_linear.model");
  save_model(model, path);
  CHECK(render_model(load_model(path)) == render_model(model));
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(load_model(dir / "missing.model"), Error);
  CHECK(model_file_name(ModelKind::Asgp, TargetKind::Angular) == "asgp_angular.model");
}

TEST_CASE("malformed model files") {
  const std::string good = render_model(small_asgp());
  CHECK(parse_code("wheelpred-model v2\n") == ErrorCode::BadModelFile);
  CHECK(parse_code("") == ErrorCode::BadModelFile);
  CHECK(parse_code(good.substr(0, good.size() / 2)) == ErrorCode::BadModelFile);
  CHECK(parse_code(good + "extra\n") == ErrorCode::BadModelFile);

  std::string bad_number = good;
  bad_number.replace(bad_number.find("jitter ") + 7, 1, "x");
  CHECK(parse_code(bad_number) == ErrorCode::BadModelFile);

  std::string bad_kind = good;
  bad_kind.replace(bad_kind.find("kind asgp"), 9, "kind svm ");
  CHECK(parse_code(bad_kind) == ErrorCode::BadModelFile);

  std::string bad_history = good;
  bad_history.replace(bad_history.find("history 3"), 9, "history 4");
  CHECK(parse_code(bad_history) == ErrorCode::BadModelFile);

  const std::string mlp = render_model(small_mlp());
  std::string bad_scale = mlp;
  const auto at = bad_scale.find("target_scale 1 ") + 15;
  bad_scale.replace(at, bad_scale.find('\n', at) - at, "-1");
  CHECK(parse_code(bad_scale) == ErrorCode::BadModelFile);
}
