#include "wheelpred/pipeline.hpp"

#include <cstdio>
#include <sstream>

#include "wheelpred/error.hpp"
#include "wheelpred/rng.hpp"
#include "wheelpred/simulator.hpp"

namespace wheelpred {

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string horizon_list(const std::vector<std::size_t>& horizons) {
  std::string out;
  for (std::size_t h : horizons) out += (out.empty() ? "" : ",") + std::to_string(h);
  return out;
}

DriveLog through_csv(const DriveLog& log, const SimConfig& sim) {
  return parse_log(render_csv(log, simulation_comment(sim)), log.label);
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(train_minutes > 0.0) || !(mixed_minutes > 0.0) || !(test_minutes > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "corpus durations must be > 0");
  }
  if (mixed_minutes > train_minutes) {
    throw Error(ErrorCode::InvalidArgument, "mixed_minutes cannot exceed train_minutes");
  }
  if (asgp.inducing < 1) throw Error(ErrorCode::InvalidArgument, "inducing must be >= 1");
  if (asgp.optimizer.steps < 0) throw Error(ErrorCode::InvalidArgument, "opt_steps must be >= 0");
  if (!(asgp.optimizer.lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "lr must be > 0");
  mlp.validate();
  eval.validate();
}

std::vector<std::pair<std::string, std::string>> PipelineConfig::describe() const {
  return {
      {"seed", std::to_string(seed)},
      {"train_minutes", num(train_minutes)},
      {"mixed_minutes", num(mixed_minutes)},
      {"test_minutes", num(test_minutes)},
      {"history", std::to_string(eval.history)},
      {"horizons", horizon_list(eval.horizons)},
      {"threshold_m", num(eval.threshold)},
      {"error_mode", eval.error_mode == ErrorMode::FinalStep ? "final" : "max"},
      {"integration", eval.scheme == IntegrationScheme::ExactArc ? "arc" : "euler"},
      {"hold_last_command", eval.rollout.hold_last_command ? "true" : "false"},
      {"oracle", oracle ? "true" : "false"},
      {"inducing", std::to_string(asgp.inducing)},
      {"opt_steps", std::to_string(asgp.optimizer.steps)},
      {"lr", num(asgp.optimizer.lr)},
      {"optimization_subset", std::to_string(asgp.optimization_subset)},
      {"min_relative_jitter", num(asgp.optimizer.fitc.min_relative_jitter)},
      {"mlp_hidden", std::to_string(mlp.hidden)},
      {"mlp_lr", num(mlp.lr)},
      {"mlp_epochs", std::to_string(mlp.epochs)},
      {"mlp_batch", std::to_string(mlp.batch_size)},
      {"rng", Rng::kAlgorithm},
  };
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view stage) {
  // FNV-1a over the stage name, mixed with the base through splitmix64.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : stage) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (h | 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ModelPair train_pair(const TrainingCollection& data, ModelKind kind, const PipelineConfig& config,
                     std::uint64_t seed) {
  const std::vector<FeatureWindow> windows = make_windows(data, config.eval.history, 1);
  if (windows.empty()) throw Error(ErrorCode::InsufficientData, "training data yields no windows");
  const OneStepData one_step = one_step_data(windows);
  ModelPair pair;
  for (TargetKind target : {TargetKind::Linear, TargetKind::Angular}) {
    const std::uint64_t s = derive_seed(seed, to_string(target));
    TrainedModel trained = [&] {
      if (kind == ModelKind::Asgp) {
        AsgpConfig c = config.asgp;
        c.seed = s;
        return train_asgp(one_step, target, config.eval.history, c);
      }
      MLPConfig c = config.mlp;
      c.seed = s;
      return train_mlp(one_step, target, config.eval.history, c);
    }();
    auto model = std::make_shared<const PredictorModel>(std::move(trained.model));
    if (target == TargetKind::Linear) {
      pair.linear = std::move(model);
      pair.objective_linear = trained.objective;
    } else {
      pair.angular = std::move(model);
      pair.objective_angular = trained.objective;
    }
  }
  return pair;
}

DeskCorpus simulate_desk_corpus(const PipelineConfig& config) {
  config.validate();
  DeskCorpus corpus;
  std::map<std::string, DriveLog, std::less<>> train_logs;
  for (const char* terrain : {"tile", "carpet"}) {
    const SimConfig sim = SimConfig::for_profile(
        terrain, config.train_minutes, derive_seed(config.seed, std::string("train/") + terrain));
    DriveLog log = through_csv(simulate(sim), sim);
    corpus.train[terrain] = TrainingCollection{{log}};
    train_logs[terrain] = std::move(log);
  }
  corpus.train["both"] =
      mix_logs(train_logs.at("tile"), train_logs.at("carpet"), config.mixed_minutes);
  for (const char* terrain : {"tile", "carpet", "hybrid"}) {
    const SimConfig sim = SimConfig::for_profile(
        terrain, config.test_minutes, derive_seed(config.seed, std::string("test/") + terrain));
    corpus.test[terrain] = through_csv(simulate(sim), sim);
  }
  return corpus;
}

std::uint64_t model_seed(const PipelineConfig& config, std::string_view train, ModelKind kind) {
  return derive_seed(config.seed, "model/" + std::string(train) + "/" + to_string(kind));
}

PipelineResult run_pipeline(const DeskCorpus& corpus, const PipelineConfig& config) {
  config.validate();
  ModelGrid grid;
  TrainedPairs pairs;
  std::vector<std::string> lines;
  for (std::string_view train : kTrainTags) {
    const auto it = corpus.train.find(train);
    if (it == corpus.train.end() && !config.oracle) {
      throw Error(ErrorCode::IncompleteInputs, "missing training set '" + std::string(train) + "'");
    }
    for (ModelKind kind : kModelOrder) {
      if (config.oracle) {
        grid[std::string(train)][kind] = std::make_shared<const OraclePredictor>();
        continue;
      }
      const ModelPair pair = train_pair(it->second, kind, config, model_seed(config, train, kind));
      char line[200];
      std::snprintf(line, sizeof line, "%s %s: objective linear %.6f angular %.6f",
                    std::string(train).c_str(), display_name(kind), pair.objective_linear,
                    pair.objective_angular);
      lines.emplace_back(line);
      grid[std::string(train)][kind] =
          std::make_shared<const ModelPairPredictor>(pair.linear, pair.angular, config.eval.rollout);
      pairs[std::string(train)][kind] = pair;
    }
  }
  PipelineResult result = evaluate_grid(grid, corpus.test, config);
  result.pairs = std::move(pairs);
  result.training_lines = std::move(lines);
  return result;
}

PipelineResult evaluate_grid(const ModelGrid& grid, const TestSets& tests,
                             const PipelineConfig& config) {
  PipelineResult result;
  result.matrix = cross_matrix(grid, tests, config.eval);
  result.report = render_report(result.matrix, config.describe());
  result.csv = render_matrix_csv(result.matrix);
  return result;
}

std::string render_report(const EvalMatrix& matrix,
                          const std::vector<std::pair<std::string, std::string>>& settings) {
  std::ostringstream out;
  out << "# Pose prediction success rates\n\n";
  out << "## Configuration\n\n```\n";
  for (const auto& [key, value] : settings) out << key << " = " << value << '\n';
  out << "```\n";
  for (std::size_t horizon : matrix.horizons()) {
    out << "\n## " << horizon_ms(horizon) << " ms horizon\n\n" << render_table(matrix, horizon);
  }
  return out.str();
}

}  // namespace wheelpred
