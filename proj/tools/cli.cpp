#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "wheelpred/error.hpp"
#include "wheelpred/model_io.hpp"
#include "wheelpred/rng.hpp"
#include "wheelpred/selftest.hpp"
#include "wheelpred/simulator.hpp"

namespace wheelpred::cli {

namespace fs = std::filesystem;

namespace {

/// Raised for bad flags or config values; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::InvalidArgument, "config key '" + key + "': bad value '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(ErrorCode::InvalidArgument, "config key '" + key + "': bad boolean '" + text + "'");
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<std::size_t>(key, trim(item)));
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "config key '" + key + "' is empty");
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

std::pair<std::string, std::string> split_tag(const std::string& spec, const char* flag) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
    throw UsageError(std::string(flag) + " expects TAG=PATH, got '" + spec + "'");
  }
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

void require_exists(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("input not found: " + path);
}

std::vector<ModelKind> kinds_for(const std::string& model) {
  if (model == "both") return {ModelKind::Asgp, ModelKind::Mlp};
  return {parse_model_kind(model)};
}

DriveLog load_log(const std::string& path, const std::string& label) {
  DriveLog log = read_log_file(path, label);
  require_valid(log);
  return log;
}

/// Flags shared by train, evaluate and reproduce.
struct CommonFlags {
  std::string config_path;
  std::vector<std::size_t> horizon_steps;
  std::vector<int> horizons_ms;
  bool hold_last_command = false;
  bool oracle = false;
};

void add_common_flags(CLI::App& sub, PipelineConfig& config, CommonFlags& flags,
                      bool evaluation) {
  sub.add_option("--config", flags.config_path, "flat key = value config file");
  sub.add_option("--seed", config.seed, "base seed");
  sub.add_option("--history", config.eval.history, "history length H")->check(CLI::PositiveNumber);
  sub.add_option("--inducing", config.asgp.inducing, "inducing points M")
      ->check(CLI::PositiveNumber);
  sub.add_option("--opt-steps", config.asgp.optimizer.steps, "hyperparameter Adam steps")
      ->check(CLI::NonNegativeNumber);
  sub.add_option("--lr", config.asgp.optimizer.lr, "hyperparameter Adam learning rate")
      ->check(CLI::PositiveNumber);
  if (evaluation) {
    sub.add_option("--horizon-steps", flags.horizon_steps, "horizons in steps")->delimiter(',');
    sub.add_option("--horizons", flags.horizons_ms, "horizons in ms")->delimiter(',');
    sub.add_option("--threshold-m", config.eval.threshold, "success threshold in meters")
        ->check(CLI::PositiveNumber);
    sub.add_flag("--hold-last-command", flags.hold_last_command,
                 "repeat the last observed command over the horizon");
    sub.add_flag("--oracle", flags.oracle, "use recorded targets as predictions");
  }
}

void finish_common(const CommonFlags& flags, PipelineConfig& config) {
  if (!flags.horizon_steps.empty() && !flags.horizons_ms.empty()) {
    throw UsageError("give either --horizons or --horizon-steps, not both");
  }
  try {
    if (!flags.horizon_steps.empty()) config.eval.horizons = flags.horizon_steps;
    if (!flags.horizons_ms.empty()) {
      config.eval.horizons.clear();
      for (int ms : flags.horizons_ms) config.eval.horizons.push_back(horizon_steps_from_ms(ms));
    }
    if (flags.hold_last_command) config.eval.rollout.hold_last_command = true;
    if (flags.oracle) config.oracle = true;
    config.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

/// Finds `--config PATH` / `--config=PATH` ahead of the main parse so that
/// flags can override file values.
std::optional<std::string> prescan_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].starts_with("--config=")) return args[i].substr(9);
  }
  return std::nullopt;
}

void print_tables(std::ostream& out, const PipelineResult& result) {
  for (std::size_t horizon : result.matrix.horizons()) {
    out << render_table(result.matrix, horizon) << '\n';
  }
}

void write_reports(const fs::path& dir, const PipelineResult& result) {
  write_text(dir / "report.md", result.report);
  write_text(dir / "matrix.csv", result.csv);
}

void save_pair(const fs::path& dir, ModelKind kind, const ModelPair& pair) {
  save_model(*pair.linear, dir / model_file_name(kind, TargetKind::Linear));
  save_model(*pair.angular, dir / model_file_name(kind, TargetKind::Angular));
}

int cmd_simulate(const std::string& profile, double minutes, std::uint64_t seed,
                 const std::string& out_path, std::ostream& out) {
  if (!is_known_profile(profile)) throw UsageError("unknown profile '" + profile + "'");
  if (!(minutes > 0.0)) throw UsageError("--minutes must be > 0");
  const SimConfig sim = SimConfig::for_profile(profile, minutes, seed);
  const DriveLog log = simulate(sim);
  write_log_file(out_path, log, simulation_comment(sim));
  out << "wrote " << log.size() << " samples to " << out_path << '\n';
  return kExitOk;
}

int cmd_train(const std::vector<std::string>& logs, const std::string& model,
              const std::string& out_dir, PipelineConfig& config, std::ostream& out) {
  for (const std::string& path : logs) require_exists(path);
  TrainingCollection data;
  for (const std::string& path : logs) data.segments.push_back(load_log(path, path));
  std::vector<std::pair<ModelKind, ModelPair>> trained;
  for (ModelKind kind : kinds_for(model)) {
    trained.emplace_back(kind, train_pair(data, kind, config, model_seed(config, "train", kind)));
  }
  fs::create_directories(out_dir);
  for (const auto& [kind, pair] : trained) {
    save_pair(out_dir, kind, pair);
    char line[160];
    std::snprintf(line, sizeof line, "%s objective: linear %.6f angular %.6f", display_name(kind),
                  pair.objective_linear, pair.objective_angular);
    out << line << '\n';
  }
  return kExitOk;
}

int cmd_evaluate(const std::vector<std::string>& train_specs,
                 const std::vector<std::string>& model_dirs,
                 const std::vector<std::string>& test_specs, const std::string& out_dir,
                 const PipelineConfig& config, std::ostream& out) {
  std::vector<std::pair<std::string, std::string>> trains;
  std::vector<std::pair<std::string, std::string>> dirs;
  std::vector<std::pair<std::string, std::string>> tests;
  for (const auto& s : train_specs) trains.push_back(split_tag(s, "--train-log"));
  for (const auto& s : model_dirs) dirs.push_back(split_tag(s, "--model-dir"));
  for (const auto& s : test_specs) tests.push_back(split_tag(s, "--test-log"));
  for (const auto& [tag, path] : trains) require_exists(path);
  for (const auto& [tag, path] : dirs) require_exists(path);
  for (const auto& [tag, path] : tests) require_exists(path);

  DeskCorpus corpus;
  for (const auto& [tag, path] : tests) corpus.test[tag] = load_log(path, tag);
  for (const auto& [tag, path] : trains) {
    corpus.train[tag].segments.push_back(load_log(path, tag));
  }

  PipelineResult result;
  if (config.oracle || dirs.empty()) {
    result = run_pipeline(corpus, config);
  } else {
    ModelGrid grid;
    for (const auto& [tag, dir] : dirs) {
      for (ModelKind kind : kModelOrder) {
        const fs::path lin = fs::path(dir) / model_file_name(kind, TargetKind::Linear);
        const fs::path ang = fs::path(dir) / model_file_name(kind, TargetKind::Angular);
        if (!fs::exists(lin) || !fs::exists(ang)) continue;
        auto linear = std::make_shared<const PredictorModel>(load_model(lin));
        auto angular = std::make_shared<const PredictorModel>(load_model(ang));
        grid[tag][kind] =
            std::make_shared<const ModelPairPredictor>(linear, angular, config.eval.rollout);
      }
    }
    result = evaluate_grid(grid, corpus.test, config);
  }
  fs::create_directories(out_dir);
  write_reports(out_dir, result);
  print_tables(out, result);
  return kExitOk;
}

int cmd_reproduce(const std::string& out_dir, const PipelineConfig& config, std::ostream& out) {
  const DeskCorpus corpus = simulate_desk_corpus(config);
  const PipelineResult result = run_pipeline(corpus, config);
  const fs::path root(out_dir);
  fs::create_directories(root / "logs");
  for (const auto& [tag, collection] : corpus.train) {
    if (tag == "both") continue;
    write_log_file((root / "logs" / ("train_" + tag + ".csv")).string(), collection.segments[0]);
  }
  for (const auto& [tag, log] : corpus.test) {
    write_log_file((root / "logs" / ("test_" + tag + ".csv")).string(), log);
  }
  for (const auto& [tag, by_kind] : result.pairs) {
    const fs::path dir = root / "models" / tag;
    fs::create_directories(dir);
    for (const auto& [kind, pair] : by_kind) save_pair(dir, kind, pair);
  }
  write_reports(root, result);
  for (const std::string& line : result.training_lines) out << line << '\n';
  print_tables(out, result);
  return kExitOk;
}

int cmd_selftest(std::ostream& out) {
  bool all = true;
  for (const CheckResult& c : run_selftest()) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    all = all && c.passed;
  }
  return all ? kExitOk : kExitFailure;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> entries;
  std::stringstream ss(text);
  std::string line;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string body = trim(line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument,
                  "config line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) {
      throw Error(ErrorCode::InvalidArgument, "config line " + std::to_string(number) + ": no key");
    }
    entries[key] = value;
  }
  return entries;
}

void apply_config(const std::map<std::string, std::string>& entries, PipelineConfig& config) {
  for (const auto& [key, value] : entries) {
    if (key == "seed") config.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "train_minutes") config.train_minutes = parse_number<double>(key, value);
    else if (key == "mixed_minutes") config.mixed_minutes = parse_number<double>(key, value);
    else if (key == "test_minutes") config.test_minutes = parse_number<double>(key, value);
    else if (key == "history") config.eval.history = parse_number<std::size_t>(key, value);
    else if (key == "horizons") config.eval.horizons = parse_list(key, value);
    else if (key == "threshold_m") config.eval.threshold = parse_number<double>(key, value);
    else if (key == "error_mode") {
      if (value == "final") config.eval.error_mode = ErrorMode::FinalStep;
      else if (value == "max") config.eval.error_mode = ErrorMode::MaxOverPath;
      else throw Error(ErrorCode::InvalidArgument, "error_mode must be final or max");
    } else if (key == "integration") {
      if (value == "arc") config.eval.scheme = IntegrationScheme::ExactArc;
      else if (value == "euler") config.eval.scheme = IntegrationScheme::Euler;
      else throw Error(ErrorCode::InvalidArgument, "integration must be arc or euler");
    } else if (key == "hold_last_command") {
      config.eval.rollout.hold_last_command = parse_bool(key, value);
    } else if (key == "oracle") config.oracle = parse_bool(key, value);
    else if (key == "inducing") config.asgp.inducing = parse_number<Eigen::Index>(key, value);
    else if (key == "opt_steps") config.asgp.optimizer.steps = parse_number<int>(key, value);
    else if (key == "lr") config.asgp.optimizer.lr = parse_number<double>(key, value);
    else if (key == "optimization_subset") {
      config.asgp.optimization_subset = parse_number<std::size_t>(key, value);
    } else if (key == "min_relative_jitter") {
      config.asgp.optimizer.fitc.min_relative_jitter = parse_number<double>(key, value);
    } else if (key == "mlp_hidden") config.mlp.hidden = parse_number<int>(key, value);
    else if (key == "mlp_lr") config.mlp.lr = parse_number<double>(key, value);
    else if (key == "mlp_epochs") config.mlp.epochs = parse_number<int>(key, value);
    else if (key == "mlp_batch") config.mlp.batch_size = parse_number<int>(key, value);
    else if (key == "rng") {
      if (value != Rng::kAlgorithm) throw Error(ErrorCode::InvalidArgument, "unsupported rng");
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
    }
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wheelchair motion prediction: simulate, train, evaluate"};
  app.require_subcommand(1);

  PipelineConfig config;
  try {
    if (const auto path = prescan_config(args)) {
      if (!fs::exists(*path)) throw UsageError("config file not found: " + *path);
      apply_config(parse_config_text(read_text(*path)), config);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  std::string profile;
  double minutes = 1.0;
  std::uint64_t sim_seed = 0;
  std::string out_path;
  auto* simulate_cmd = app.add_subcommand("simulate", "write a simulated drive log");
  simulate_cmd->add_option("--profile", profile, "tile, carpet or hybrid")->required();
  simulate_cmd->add_option("--minutes", minutes, "duration in minutes");
  simulate_cmd->add_option("--seed", sim_seed, "seed");
  simulate_cmd->add_option("--out", out_path, "output CSV")->required();

  CommonFlags train_flags;
  std::vector<std::string> train_logs;
  std::string model = "both";
  std::string train_out;
  auto* train_cmd = app.add_subcommand("train", "train model pairs on drive logs");
  train_cmd->add_option("--train-log", train_logs, "training CSV (repeatable)")->required();
  train_cmd->add_option("--model", model, "asgp, mlp or both")
      ->check(CLI::IsMember({"asgp", "mlp", "both"}));
  train_cmd->add_option("--out-dir", train_out, "directory for model files")->required();
  add_common_flags(*train_cmd, config, train_flags, false);

  CommonFlags eval_flags;
  std::vector<std::string> eval_train;
  std::vector<std::string> eval_dirs;
  std::vector<std::string> eval_tests;
  std::string eval_out;
  auto* eval_cmd = app.add_subcommand("evaluate", "cross train/test evaluation");
  eval_cmd->add_option("--train-log", eval_train, "TAG=PATH training log (repeatable)");
  eval_cmd->add_option("--model-dir", eval_dirs, "TAG=DIR of saved models (repeatable)");
  eval_cmd->add_option("--test-log", eval_tests, "TAG=PATH test log (repeatable)")->required();
  eval_cmd->add_option("--out-dir", eval_out, "directory for report.md and matrix.csv")
      ->required();
  add_common_flags(*eval_cmd, config, eval_flags, true);

  CommonFlags repro_flags;
  std::string repro_out;
  auto* repro_cmd = app.add_subcommand("reproduce", "simulate, train and evaluate the desk suite");
  repro_cmd->add_option("--out-dir", repro_out, "output directory")->required();
  repro_cmd->add_option("--minutes", config.train_minutes, "training minutes per terrain");
  add_common_flags(*repro_cmd, config, repro_flags, true);

  auto* selftest_cmd = app.add_subcommand("selftest", "run the embedded numerical checks");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*simulate_cmd) return cmd_simulate(profile, minutes, sim_seed, out_path, out);
    if (*train_cmd) {
      finish_common(train_flags, config);
      return cmd_train(train_logs, model, train_out, config, out);
    }
    if (*eval_cmd) {
      finish_common(eval_flags, config);
      return cmd_evaluate(eval_train, eval_dirs, eval_tests, eval_out, config, out);
    }
    if (*repro_cmd) {
      finish_common(repro_flags, config);
      return cmd_reproduce(repro_out, config, out);
    }
    if (*selftest_cmd) return cmd_selftest(out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace wheelpred::cli
