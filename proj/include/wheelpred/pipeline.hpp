#ifndef WHEELPRED_PIPELINE_HPP
#define WHEELPRED_PIPELINE_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "wheelpred/evaluation.hpp"
#include "wheelpred/mlp.hpp"
#include "wheelpred/predictor.hpp"
#include "wheelpred/trajectory_data.hpp"

namespace wheelpred {

struct PipelineConfig {
  std::uint64_t seed = 2024;
  double train_minutes = 20.0;  // per terrain
  double mixed_minutes = 10.0;  // taken from each of tile and carpet for "both"
  double test_minutes = 7.0;
  AsgpConfig asgp;
  MLPConfig mlp;
  EvalConfig eval;
  bool oracle = false;

  void validate() const;
  /// Resolved settings as (key, value) pairs, using the config-file keys.
  std::vector<std::pair<std::string, std::string>> describe() const;
};

/// Sub-seed for a named stage, derived from the base seed.
std::uint64_t derive_seed(std::uint64_t base, std::string_view stage);

struct ModelPair {
  std::shared_ptr<const PredictorModel> linear;
  std::shared_ptr<const PredictorModel> angular;
  double objective_linear = 0.0;
  double objective_angular = 0.0;
};

/// Trains the (linear, angular) pair of one kind on a training collection.
ModelPair train_pair(const TrainingCollection& data, ModelKind kind, const PipelineConfig& config,
                     std::uint64_t seed);

struct DeskCorpus {
  std::map<std::string, TrainingCollection, std::less<>> train;  // tile, carpet, both
  TestSets test;                                                 // tile, carpet, hybrid
};

/// Simulates the desk-scale corpus. Every log passes through a CSV
/// render/parse cycle so results match a run from files.
DeskCorpus simulate_desk_corpus(const PipelineConfig& config);

using TrainedPairs = std::map<std::string, std::map<ModelKind, ModelPair>, std::less<>>;

struct PipelineResult {
  TrainedPairs pairs;  // empty in oracle mode
  EvalMatrix matrix;
  std::vector<std::string> training_lines;  // objective per trained model
  std::string report;                       // Markdown
  std::string csv;
};

/// Trains every model pair on `corpus.train` (or uses oracle predictors) and
/// evaluates the full matrix.
PipelineResult run_pipeline(const DeskCorpus& corpus, const PipelineConfig& config);

/// Evaluates already-built predictors and renders the report.
PipelineResult evaluate_grid(const ModelGrid& grid, const TestSets& tests,
                             const PipelineConfig& config);

/// Seed used for the models of one (train tag, kind) cell.
std::uint64_t model_seed(const PipelineConfig& config, std::string_view train, ModelKind kind);

/// Markdown report: resolved config, one table per horizon.
std::string render_report(const EvalMatrix& matrix,
                          const std::vector<std::pair<std::string, std::string>>& settings);

}  // namespace wheelpred

#endif  // WHEELPRED_PIPELINE_HPP
