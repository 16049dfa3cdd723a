#include "wheelpred/trajectory_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wheelpred/error.hpp"

namespace wheelpred {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool parse_double(std::string_view field, double& out) {
  field = trim(field);
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end;
}

double median_gap(const std::vector<Sample>& samples) {
  if (samples.size() < 2) return kSampleDt;
  std::vector<double> gaps(samples.size() - 1);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    gaps[i - 1] = samples[i].t - samples[i - 1].t;
  }
  const std::size_t mid = gaps.size() / 2;
  std::nth_element(gaps.begin(), gaps.begin() + mid, gaps.end());
  if (gaps.size() % 2 == 1) return gaps[mid];
  const double upper = gaps[mid];
  const double lower = *std::max_element(gaps.begin(), gaps.begin() + mid);
  return 0.5 * (lower + upper);
}

}  // namespace

DriveLog parse_log(std::string_view text, std::string label) {
  DriveLog log;
  log.label = std::move(label);

  bool header_seen = false;
  std::size_t data_row = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;

    if (!header_seen) {
      if (line.empty() || line.front() == '#') continue;
      if (line != "t,ux,uy,v,w") {
        throw Error(ErrorCode::MalformedHeader,
                    "expected header 't,ux,uy,v,w', got '" + std::string(line) + "'");
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;

    ++data_row;
    double fields[5];
    std::size_t n = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view field =
          line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                             : comma - start);
      if (n == 5 || !parse_double(field, fields[n])) {
        throw Error(ErrorCode::NonNumericField,
                    "row " + std::to_string(data_row) + ": '" + std::string(line) + "'",
                    data_row);
      }
      ++n;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (n != 5) {
      throw Error(ErrorCode::NonNumericField,
                  "row " + std::to_string(data_row) + " has " + std::to_string(n) +
                      " fields",
                  data_row);
    }
    log.samples.push_back({fields[0], fields[1], fields[2], fields[3], fields[4]});
  }

  if (!header_seen) throw Error(ErrorCode::MalformedHeader, "missing header");
  if (log.samples.empty()) throw Error(ErrorCode::EmptyLog, "no data rows");
  log.dt = median_gap(log.samples);
  return log;
}

DriveLog read_log_file(const std::string& path, std::string label) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_log(buffer.str(), std::move(label));
}

std::string render_csv(const DriveLog& log, std::string_view comment) {
  std::string out;
  out.reserve(48 * (log.size() + 2));
  if (!comment.empty()) {
    out += '#';
    out += comment;
    out += '\n';
  }
  out += "t,ux,uy,v,w\n";
  char line[160];
  for (const Sample& s : log.samples) {
    const int len = std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g,%.9g,%.9g\n", s.t,
                                  s.ux, s.uy, s.v, s.w);
    out.append(line, static_cast<std::size_t>(len));
  }
  return out;
}

void write_log_file(const std::string& path, const DriveLog& log, std::string_view comment) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out << render_csv(log, comment);
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

const char* to_string(Finding::Kind kind) {
  switch (kind) {
    case Finding::Kind::GapOutOfTolerance: return "GapOutOfTolerance";
    case Finding::Kind::NonMonotoneTime: return "NonMonotoneTime";
    case Finding::Kind::RangeViolation: return "RangeViolation";
    case Finding::Kind::NonFinite: return "NonFinite";
  }
  return "Unknown";
}

std::size_t ValidationReport::count(Finding::Kind kind) const {
  return static_cast<std::size_t>(std::count_if(
      findings.begin(), findings.end(), [kind](const Finding& f) { return f.kind == kind; }));
}

ValidationReport validate_log(const DriveLog& log) {
  ValidationReport report;
  if (log.samples.empty()) {
    report.findings.push_back({Finding::Kind::NonFinite, 0, "log has no samples"});
    return report;
  }
  for (std::size_t i = 0; i < log.size(); ++i) {
    const Sample& s = log.samples[i];
    if (!std::isfinite(s.t) || !std::isfinite(s.ux) || !std::isfinite(s.uy) ||
        !std::isfinite(s.v) || !std::isfinite(s.w)) {
      report.findings.push_back({Finding::Kind::NonFinite, i, "non-finite field"});
      continue;
    }
    if (std::abs(s.ux) > 1.0 || std::abs(s.uy) > 1.0) {
      report.findings.push_back(
          {Finding::Kind::RangeViolation, i, "joystick deflection outside [-1, 1]"});
    }
    if (i == 0 || !std::isfinite(log.samples[i - 1].t)) continue;
    const double gap = s.t - log.samples[i - 1].t;
    if (gap <= 0.0) {
      report.findings.push_back({Finding::Kind::NonMonotoneTime, i, "timestamp not increasing"});
    } else if (std::abs(gap - kSampleDt) > kGapTolerance * kSampleDt) {
      report.findings.push_back({Finding::Kind::GapOutOfTolerance, i,
                                 "gap " + std::to_string(gap) + " s"});
    }
  }
  return report;
}

void require_valid(const DriveLog& log) {
  const ValidationReport report = validate_log(log);
  if (report.ok()) return;
  std::string detail = "log '" + log.label + "' has " +
                       std::to_string(report.findings.size()) + " finding(s)";
  const std::size_t shown = std::min<std::size_t>(report.findings.size(), 3);
  for (std::size_t i = 0; i < shown; ++i) {
    const Finding& f = report.findings[i];
    detail += "; " + std::string(to_string(f.kind)) + " at sample " +
              std::to_string(f.index) + " (" + f.detail + ")";
  }
  throw Error(ErrorCode::InvalidArgument, detail, report.findings.front().index);
}

std::vector<FeatureWindow> make_windows(const DriveLog& log, std::size_t history,
                                        std::size_t horizon) {
  std::vector<FeatureWindow> windows;
  if (history == 0 || horizon == 0) {
    throw Error(ErrorCode::InvalidArgument, "history and horizon must be >= 1");
  }
  const std::size_t n = log.size();
  if (n < history + horizon) return windows;
  windows.reserve(n - history - horizon + 1);
  for (std::size_t anchor = history - 1; anchor + horizon < n; ++anchor) {
    FeatureWindow window;
    window.anchor = anchor;
    window.history.assign(log.samples.begin() + static_cast<std::ptrdiff_t>(anchor + 1 - history),
                          log.samples.begin() + static_cast<std::ptrdiff_t>(anchor + 1));
    window.future_u.resize(horizon);
    window.target_v.resize(static_cast<Eigen::Index>(horizon));
    window.target_w.resize(static_cast<Eigen::Index>(horizon));
    for (std::size_t j = 0; j < horizon; ++j) {
      const Sample& s = log.samples[anchor + 1 + j];
      window.future_u[j] = {s.ux, s.uy};
      window.target_v(static_cast<Eigen::Index>(j)) = s.v;
      window.target_w(static_cast<Eigen::Index>(j)) = s.w;
    }
    windows.push_back(std::move(window));
  }
  return windows;
}

void write_features(std::span<const Sample> history, Command next,
                    Eigen::Ref<Eigen::VectorXd> out) {
  const auto h = static_cast<Eigen::Index>(history.size());
  if (out.size() != 4 * h + 2) {
    throw Error(ErrorCode::DimensionMismatch, "feature buffer has wrong size");
  }
  for (Eigen::Index i = 0; i < h; ++i) {
    const Sample& s = history[static_cast<std::size_t>(i)];
    out.segment<4>(4 * i) << s.ux, s.uy, s.v, s.w;
  }
  out(4 * h) = next.ux;
  out(4 * h + 1) = next.uy;
}

Eigen::VectorXd one_step_features(const FeatureWindow& window) {
  if (window.future_u.empty()) {
    throw Error(ErrorCode::HorizonExceedsWindow, "window has no lookahead");
  }
  Eigen::VectorXd x(static_cast<Eigen::Index>(feature_dimension(window.history.size())));
  write_features(window.history, window.future_u.front(), x);
  return x;
}

Standardizer::Standardizer(Eigen::VectorXd mean, Eigen::VectorXd scale)
    : mean_(std::move(mean)), scale_(std::move(scale)) {
  if (mean_.size() != scale_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "standardizer mean/scale sizes differ");
  }
  if ((scale_.array() < kMinScale).any()) {
    throw Error(ErrorCode::InvalidArgument, "standardizer scale below minimum");
  }
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) throw Error(ErrorCode::EmptyInput, "cannot fit standardizer on no rows");
  Eigen::VectorXd mean = rows.colwise().mean().transpose();
  Eigen::VectorXd scale =
      ((rows.rowwise() - mean.transpose()).array().square().colwise().mean().sqrt())
          .transpose();
  for (Eigen::Index j = 0; j < scale.size(); ++j) {
    if (!(scale(j) >= kMinScale)) scale(j) = 1.0;
  }
  return Standardizer(std::move(mean), std::move(scale));
}

Eigen::VectorXd Standardizer::apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != mean_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "standardizer expects dimension " +
                                                  std::to_string(mean_.size()));
  }
  return (x - mean_).cwiseQuotient(scale_);
}

Eigen::VectorXd Standardizer::invert(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (z.size() != mean_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "standardizer expects dimension " +
                                                  std::to_string(mean_.size()));
  }
  return z.cwiseProduct(scale_) + mean_;
}

Eigen::MatrixXd Standardizer::apply_rows(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != mean_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "standardizer expects dimension " +
                                                  std::to_string(mean_.size()));
  }
  return (rows.rowwise() - mean_.transpose()).array().rowwise() /
         scale_.transpose().array();
}

OneStepData one_step_data(std::span<const FeatureWindow> windows) {
  OneStepData data;
  if (windows.empty()) return data;
  const auto n = static_cast<Eigen::Index>(windows.size());
  const auto d = static_cast<Eigen::Index>(feature_dimension(windows.front().history.size()));
  data.inputs.resize(n, d);
  data.target_v.resize(n);
  data.target_w.resize(n);
  Eigen::VectorXd row(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const FeatureWindow& w = windows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(feature_dimension(w.history.size())) != d) {
      throw Error(ErrorCode::DimensionMismatch, "windows have mixed history lengths");
    }
    if (w.future_u.empty()) {
      throw Error(ErrorCode::HorizonExceedsWindow, "window has no lookahead");
    }
    write_features(w.history, w.future_u.front(), row);
    data.inputs.row(i) = row.transpose();
    data.target_v(i) = w.target_v(0);
    data.target_w(i) = w.target_w(0);
  }
  return data;
}

Standardizer standardize_fit(std::span<const FeatureWindow> windows) {
  if (windows.empty()) throw Error(ErrorCode::EmptyInput, "no windows to fit");
  return Standardizer::fit(one_step_data(windows).inputs);
}

std::size_t samples_for_minutes(double minutes, double dt) {
  return static_cast<std::size_t>(std::llround(minutes * 60.0 / dt));
}

std::size_t TrainingCollection::total_samples() const {
  std::size_t n = 0;
  for (const DriveLog& s : segments) n += s.size();
  return n;
}

double TrainingCollection::total_minutes() const {
  double minutes = 0.0;
  for (const DriveLog& s : segments) minutes += static_cast<double>(s.size()) * s.dt / 60.0;
  return minutes;
}

TrainingCollection mix_logs(const DriveLog& a, const DriveLog& b, double minutes_each) {
  TrainingCollection collection;
  if (!(minutes_each >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "minutes_each must be >= 0");
  }
  const std::size_t count = samples_for_minutes(minutes_each);
  if (count == 0) return collection;
  if (a.size() < count) {
    throw Error(ErrorCode::InsufficientData, "first log ('" + a.label + "') has " +
                                                 std::to_string(a.size()) + " samples, need " +
                                                 std::to_string(count),
                0);
  }
  if (b.size() < count) {
    throw Error(ErrorCode::InsufficientData, "second log ('" + b.label + "') has " +
                                                 std::to_string(b.size()) + " samples, need " +
                                                 std::to_string(count),
                1);
  }
  for (const DriveLog* src : {&a, &b}) {
    DriveLog segment;
    segment.dt = src->dt;
    segment.label = src->label;
    segment.samples.assign(src->samples.begin(),
                           src->samples.begin() + static_cast<std::ptrdiff_t>(count));
    collection.segments.push_back(std::move(segment));
  }
  return collection;
}

std::vector<FeatureWindow> make_windows(const TrainingCollection& collection,
                                        std::size_t history, std::size_t horizon) {
  std::vector<FeatureWindow> all;
  for (std::size_t s = 0; s < collection.segments.size(); ++s) {
    std::vector<FeatureWindow> part = make_windows(collection.segments[s], history, horizon);
    for (FeatureWindow& w : part) {
      w.segment = s;
      all.push_back(std::move(w));
    }
  }
  return all;
}

}  // namespace wheelpred
