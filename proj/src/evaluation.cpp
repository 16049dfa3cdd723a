#include "wheelpred/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "wheelpred/error.hpp"

namespace wheelpred {

namespace {

std::string format_pct(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", pct);
  return buf;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  if (!line.empty() && line.front() == '|') line.remove_prefix(1);
  if (!line.empty() && line.back() == '|') line.remove_suffix(1);
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t bar = line.find('|', start);
    if (bar == std::string_view::npos) bar = line.size();
    std::string_view cell = line.substr(start, bar - start);
    while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
    while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
    cells.push_back(cell);
    start = bar + 1;
  }
  return cells;
}

std::string tag_from_heading(std::string_view heading) {
  for (auto tags : {kTrainTags, kTestTags}) {
    for (std::string_view tag : tags) {
      if (tag_heading(tag) == heading) return std::string(tag);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown table heading '" + std::string(heading) + "'");
}

}  // namespace

std::string tag_heading(std::string_view tag) {
  if (tag == "both") return "Both (1:1)";
  std::string out(tag);
  if (!out.empty() && out[0] >= 'a' && out[0] <= 'z') out[0] = static_cast<char>(out[0] - 32);
  return out;
}

int horizon_ms(std::size_t steps) {
  return static_cast<int>(std::lround(static_cast<double>(steps) * kSampleDt * 1000.0));
}

std::size_t horizon_steps_from_ms(int ms) {
  const int step_ms = horizon_ms(1);
  if (ms <= 0 || ms % step_ms != 0) {
    throw Error(ErrorCode::InvalidArgument,
                "horizon " + std::to_string(ms) + " ms is not a positive multiple of " +
                    std::to_string(step_ms) + " ms");
  }
  return static_cast<std::size_t>(ms / step_ms);
}

SuccessRate success_rate_from_counts(std::size_t n_success, std::size_t n_cases) {
  if (n_cases == 0) throw Error(ErrorCode::EmptyInput, "success rate of no cases");
  if (n_success > n_cases) {
    throw Error(ErrorCode::InvalidArgument, "more successes than cases");
  }
  // round half up of 10000 * s / n, in integers
  const unsigned long long basis =
      (20000ULL * n_success + n_cases) / (2ULL * static_cast<unsigned long long>(n_cases));
  return {static_cast<double>(basis) / 100.0, n_success, n_cases};
}

SuccessRate success_rate(std::span<const double> errors, double threshold) {
  if (errors.empty()) throw Error(ErrorCode::EmptyInput, "success rate of no errors");
  const auto hits = static_cast<std::size_t>(
      std::count_if(errors.begin(), errors.end(), [threshold](double e) { return e <= threshold; }));
  return success_rate_from_counts(hits, errors.size());
}

void EvalConfig::validate() const {
  if (!(threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "threshold must be > 0");
  if (horizons.empty()) throw Error(ErrorCode::InvalidArgument, "no horizons requested");
  for (std::size_t h : horizons) {
    if (h < 1) throw Error(ErrorCode::InvalidArgument, "horizons must be >= 1 step");
  }
  if (history < 1) throw Error(ErrorCode::InvalidArgument, "history must be >= 1");
}

ModelPairPredictor::ModelPairPredictor(std::shared_ptr<const PredictorModel> linear,
                                       std::shared_ptr<const PredictorModel> angular,
                                       RolloutOptions options)
    : linear_(std::move(linear)), angular_(std::move(angular)), options_(options) {
  if (!linear_ || !angular_) throw Error(ErrorCode::InvalidArgument, "null model in pair");
  if (linear_->target() != TargetKind::Linear || angular_->target() != TargetKind::Angular) {
    throw Error(ErrorCode::InvalidArgument, "model pair must be (linear, angular)");
  }
  if (linear_->history() != angular_->history()) {
    throw Error(ErrorCode::DimensionMismatch, "model pair history lengths differ");
  }
}

VelocityTrajectory ModelPairPredictor::predict(const FeatureWindow& window, std::size_t k) const {
  if (window.history.size() != linear_->history()) {
    throw Error(ErrorCode::DimensionMismatch,
                "window history " + std::to_string(window.history.size()) +
                    " does not match model history " + std::to_string(linear_->history()));
  }
  return rollout(*linear_, *angular_, window, k, options_);
}

VelocityTrajectory OraclePredictor::predict(const FeatureWindow& window, std::size_t k) const {
  if (k > window.horizon()) {
    throw Error(ErrorCode::HorizonExceedsWindow, "oracle horizon exceeds window lookahead");
  }
  const auto n = static_cast<Eigen::Index>(k);
  return {window.target_v.head(n), window.target_w.head(n), kSampleDt};
}

Eigen::MatrixXd step_errors(const TrajectoryPredictor& predictor,
                            std::span<const FeatureWindow> windows, std::size_t horizon,
                            IntegrationScheme scheme) {
  Eigen::MatrixXd errors(static_cast<Eigen::Index>(windows.size()),
                         static_cast<Eigen::Index>(horizon));
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const FeatureWindow& window = windows[i];
    if (horizon > window.horizon()) {
      throw Error(ErrorCode::HorizonExceedsWindow, "horizon exceeds window lookahead");
    }
    const VelocityTrajectory predicted = predictor.predict(window, horizon);
    const auto n = static_cast<Eigen::Index>(horizon);
    const PoseTrajectory<double> pred = integrate_trajectory(predicted, {}, scheme);
    const PoseTrajectory<double> truth = integrate_trajectory<double>(
        window.target_v.head(n), window.target_w.head(n), kSampleDt, {}, scheme);
    for (std::size_t s = 0; s < horizon; ++s) {
      errors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) =
          position_error(pred, truth, s);
    }
  }
  return errors;
}

PairResult evaluate_pair(const TrajectoryPredictor& predictor,
                         std::span<const FeatureWindow> windows, std::size_t horizon,
                         const EvalConfig& config) {
  if (windows.empty()) throw Error(ErrorCode::NoWindows, "test set produced no windows");
  if (horizon < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
  const Eigen::MatrixXd errors = step_errors(predictor, windows, horizon, config.scheme);
  PairResult result;
  result.errors.resize(windows.size());
  for (Eigen::Index i = 0; i < errors.rows(); ++i) {
    result.errors[static_cast<std::size_t>(i)] = config.error_mode == ErrorMode::FinalStep
                                                     ? errors(i, errors.cols() - 1)
                                                     : errors.row(i).maxCoeff();
  }
  result.rate = success_rate(result.errors, config.threshold);
  return result;
}

const EvalCell* EvalMatrix::find(std::string_view train, std::string_view test, ModelKind model,
                                 std::size_t horizon) const {
  for (const EvalCell& c : cells) {
    if (c.train == train && c.test == test && c.model == model && c.horizon_steps == horizon) {
      return &c;
    }
  }
  return nullptr;
}

std::vector<std::size_t> EvalMatrix::horizons() const {
  std::vector<std::size_t> out;
  for (const EvalCell& c : cells) {
    if (std::find(out.begin(), out.end(), c.horizon_steps) == out.end()) {
      out.push_back(c.horizon_steps);
    }
  }
  return out;
}

EvalMatrix cross_matrix(const ModelGrid& models, const TestSets& tests, const EvalConfig& config) {
  config.validate();
  for (std::string_view train : kTrainTags) {
    const auto it = models.find(train);
    for (ModelKind kind : kModelOrder) {
      if (it == models.end() || !it->second.contains(kind) || !it->second.at(kind)) {
        throw Error(ErrorCode::IncompleteInputs, "missing " + std::string(display_name(kind)) +
                                                     " model trained on '" + std::string(train) +
                                                     "'");
      }
    }
  }
  for (std::string_view test : kTestTags) {
    if (!tests.contains(test)) {
      throw Error(ErrorCode::IncompleteInputs, "missing test set '" + std::string(test) + "'");
    }
  }

  EvalMatrix matrix;
  matrix.threshold = config.threshold;
  for (std::size_t horizon : config.horizons) {
    std::map<std::string_view, std::vector<FeatureWindow>> windows;
    for (std::string_view test : kTestTags) {
      windows[test] = make_windows(tests.find(test)->second, config.history, horizon);
    }
    for (std::string_view train : kTrainTags) {
      for (std::string_view test : kTestTags) {
        for (ModelKind kind : kModelOrder) {
          const TrajectoryPredictor& predictor = *models.find(train)->second.at(kind);
          const PairResult r = evaluate_pair(predictor, windows[test], horizon, config);
          matrix.cells.push_back({std::string(train), std::string(test), kind, horizon,
                                  r.rate.pct, r.rate.n_success, r.rate.n_cases});
        }
      }
    }
  }
  return matrix;
}

std::string table_caption(double threshold, std::size_t horizon) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "Percent of pose prediction with no more than %g cm error at %dms horizon.",
                threshold * 100.0, horizon_ms(horizon));
  return buf;
}

std::string render_table(const EvalMatrix& matrix, std::size_t horizon) {
  std::ostringstream out;
  out << table_caption(matrix.threshold, horizon) << "\n\n";
  out << "| Test | Model";
  for (std::string_view train : kTrainTags) out << " | " << tag_heading(train);
  out << " |\n|---|---";
  for (std::size_t i = 0; i < kTrainTags.size(); ++i) out << "|---:";
  out << "|\n";
  for (std::string_view test : kTestTags) {
    for (ModelKind kind : kModelOrder) {
      out << "| " << tag_heading(test) << " | " << display_name(kind);
      for (std::string_view train : kTrainTags) {
        const EvalCell* cell = matrix.find(train, test, kind, horizon);
        if (cell == nullptr) {
          throw Error(ErrorCode::IncompleteMatrix,
                      "no cell for train '" + std::string(train) + "', test '" +
                          std::string(test) + "', " + display_name(kind) + " at " +
                          std::to_string(horizon) + " steps");
        }
        out << " | " << format_pct(cell->success_pct);
      }
      out << " |\n";
    }
  }
  return out.str();
}

std::vector<EvalCell> parse_table(std::string_view markdown) {
  std::vector<EvalCell> cells;
  std::size_t horizon = 0;
  std::vector<std::string> columns;
  std::size_t pos = 0;
  while (pos < markdown.size()) {
    std::size_t eol = markdown.find('\n', pos);
    if (eol == std::string_view::npos) eol = markdown.size();
    const std::string_view line = markdown.substr(pos, eol - pos);
    pos = eol + 1;

    if (line.starts_with("Percent of pose prediction")) {
      const std::size_t at = line.rfind(" at ");
      const std::size_t ms = line.find("ms horizon", at);
      if (at == std::string_view::npos || ms == std::string_view::npos) {
        throw Error(ErrorCode::InvalidArgument, "unrecognized caption");
      }
      horizon = horizon_steps_from_ms(std::stoi(std::string(line.substr(at + 4, ms - at - 4))));
      continue;
    }
    if (!line.starts_with("|")) continue;
    const std::vector<std::string_view> parts = split_cells(line);
    if (parts.size() < 3) continue;
    if (parts[0] == "Test") {
      columns.clear();
      for (std::size_t i = 2; i < parts.size(); ++i) columns.push_back(tag_from_heading(parts[i]));
      continue;
    }
    if (parts[0].starts_with("---")) continue;
    if (columns.empty() || horizon == 0 || parts.size() != columns.size() + 2) {
      throw Error(ErrorCode::InvalidArgument, "malformed table row");
    }
    for (std::size_t i = 0; i < columns.size(); ++i) {
      EvalCell cell;
      cell.train = columns[i];
      cell.test = tag_from_heading(parts[0]);
      cell.model = parse_model_kind(std::string(parts[1]));
      cell.horizon_steps = horizon;
      cell.success_pct = std::stod(std::string(parts[2 + i]));
      cells.push_back(cell);
    }
  }
  return cells;
}

std::string render_matrix_csv(const EvalMatrix& matrix) {
  std::ostringstream out;
  out << "train,test,model,horizon_ms,success_pct,n_success,n_cases\n";
  for (const EvalCell& c : matrix.cells) {
    out << c.train << ',' << c.test << ',' << to_string(c.model) << ','
        << horizon_ms(c.horizon_steps) << ',' << format_pct(c.success_pct) << ','
        << c.n_success << ',' << c.n_cases << '\n';
  }
  return out.str();
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "percentile of no values");
  const double rank = q * static_cast<double>(values.size() - 1);
  const auto below = static_cast<std::size_t>(rank);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(below),
                   values.end());
  const double lo = values[below];
  if (below + 1 >= values.size()) return lo;
  const double hi = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(below + 1),
                                      values.end());
  return lo + (rank - static_cast<double>(below)) * (hi - lo);
}

std::string emit_error_curve(const Eigen::MatrixXd& errors, double threshold) {
  if (errors.rows() == 0 || errors.cols() == 0) {
    throw Error(ErrorCode::EmptyInput, "no errors for the curve");
  }
  std::ostringstream out;
  out << "step_ms,p50_error_m,p90_error_m,success_pct\n";
  char line[128];
  for (Eigen::Index s = 0; s < errors.cols(); ++s) {
    std::vector<double> column(errors.col(s).data(), errors.col(s).data() + errors.rows());
    const SuccessRate rate = success_rate(column, threshold);
    std::snprintf(line, sizeof line, "%d,%.6f,%.6f,%.2f\n",
                  horizon_ms(static_cast<std::size_t>(s + 1)), percentile(column, 0.5),
                  percentile(column, 0.9), rate.pct);
    out << line;
  }
  return out.str();
}

}  // namespace wheelpred
