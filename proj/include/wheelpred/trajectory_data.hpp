#ifndef WHEELPRED_TRAJECTORY_DATA_HPP
#define WHEELPRED_TRAJECTORY_DATA_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace wheelpred {

/// Nominal sampling period of every log: 5 samples per second.
inline constexpr double kSampleDt = 0.2;
/// Allowed relative deviation of a timestamp gap from kSampleDt.
inline constexpr double kGapTolerance = 0.10;

/// One timestamped joystick + velocity record.
struct Sample {
  double t = 0.0;   // s
  double ux = 0.0;  // lateral deflection in [-1, 1], drives angular velocity
  double uy = 0.0;  // forward deflection in [-1, 1], drives linear velocity
  double v = 0.0;   // m/s
  double w = 0.0;   // rad/s

  bool operator==(const Sample&) const = default;
};

struct Command {
  double ux = 0.0;
  double uy = 0.0;

  bool operator==(const Command&) const = default;
};

struct DriveLog {
  std::vector<Sample> samples;
  double dt = kSampleDt;
  std::string label;

  std::size_t size() const { return samples.size(); }
  bool operator==(const DriveLog&) const = default;
};

/// Parses the `t,ux,uy,v,w` CSV format. Lines starting with `#` before the
/// header are ignored. dt is the median timestamp gap.
DriveLog parse_log(std::string_view csv_text, std::string label = {});
DriveLog read_log_file(const std::string& path, std::string label = {});

/// Renders with 9 significant digits; `comment` (without the leading `#`) is
/// written as the first line when non-empty.
std::string render_csv(const DriveLog& log, std::string_view comment = {});
void write_log_file(const std::string& path, const DriveLog& log,
                    std::string_view comment = {});

struct Finding {
  enum class Kind { GapOutOfTolerance, NonMonotoneTime, RangeViolation, NonFinite };
  Kind kind;
  std::size_t index;  // sample index the finding refers to
  std::string detail;
};

const char* to_string(Finding::Kind kind);

struct ValidationReport {
  std::vector<Finding> findings;

  bool ok() const { return findings.empty(); }
  std::size_t count(Finding::Kind kind) const;
};

ValidationReport validate_log(const DriveLog& log);

/// Throws InvalidArgument listing the first findings when the log is invalid.
void require_valid(const DriveLog& log);

/// H history samples ending at `anchor`, plus the k commands and velocities
/// that follow it.
struct FeatureWindow {
  std::vector<Sample> history;  // most recent last
  std::vector<Command> future_u;
  Eigen::VectorXd target_v;
  Eigen::VectorXd target_w;
  std::size_t anchor = 0;   // index of history.back() in its source log
  std::size_t segment = 0;  // source segment in a TrainingCollection

  std::size_t horizon() const { return future_u.size(); }
};

/// One window per anchor with full history and lookahead:
/// max(0, N - H - k + 1) windows.
std::vector<FeatureWindow> make_windows(const DriveLog& log, std::size_t history,
                                        std::size_t horizon);

/// Width of the one-step regressor input: (ux, uy, v, w) per history sample
/// followed by the next command.
constexpr std::size_t feature_dimension(std::size_t history) { return 4 * history + 2; }

/// Writes the one-step input for `history` (oldest first) and the command
/// applied over the next step into `out`.
void write_features(std::span<const Sample> history, Command next,
                    Eigen::Ref<Eigen::VectorXd> out);
Eigen::VectorXd one_step_features(const FeatureWindow& window);

/// Per-feature z-scoring using the population standard deviation.
class Standardizer {
 public:
  static constexpr double kMinScale = 1e-12;

  Standardizer() = default;
  Standardizer(Eigen::VectorXd mean, Eigen::VectorXd scale);

  /// Fits over the rows of `rows`. Features whose standard deviation is below
  /// kMinScale get scale 1.
  static Standardizer fit(const Eigen::MatrixXd& rows);

  Eigen::Index dimension() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& scale() const { return scale_; }

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd invert(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  /// Row-wise apply.
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& rows) const;

  double apply(double x) const { return (x - mean_(0)) / scale_(0); }
  double invert(double z) const { return z * scale_(0) + mean_(0); }

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
};

/// Fits on the one-step input vectors of `windows`.
Standardizer standardize_fit(std::span<const FeatureWindow> windows);

/// Logs used together for training; windowing never crosses a segment.
struct TrainingCollection {
  std::vector<DriveLog> segments;

  std::size_t total_samples() const;
  double total_minutes() const;
};

/// Takes the first `minutes_each` of each log as two segments.
TrainingCollection mix_logs(const DriveLog& a, const DriveLog& b, double minutes_each);

std::vector<FeatureWindow> make_windows(const TrainingCollection& collection,
                                        std::size_t history, std::size_t horizon);

/// Stacks the one-step regression problem for windows with horizon >= 1:
/// inputs are one_step_features rows, targets the first future v and w.
struct OneStepData {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd target_v;
  Eigen::VectorXd target_w;
};
OneStepData one_step_data(std::span<const FeatureWindow> windows);

std::size_t samples_for_minutes(double minutes, double dt = kSampleDt);

}  // namespace wheelpred

#endif  // WHEELPRED_TRAJECTORY_DATA_HPP
