#include "wheelpred/model_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "wheelpred/error.hpp"

namespace wheelpred {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void put_vector(std::ostringstream& out, std::string_view key, const Eigen::VectorXd& v) {
  out << key << ' ' << v.size();
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << fmt(v(i));
  out << '\n';
}

void put_matrix(std::ostringstream& out, std::string_view key, const Eigen::MatrixXd& m) {
  out << key << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c == 0 ? "" : " ") << fmt(m(r, c));
    out << '\n';
  }
}

[[noreturn]] void bad(const std::string& what) {
  throw Error(ErrorCode::BadModelFile, "model file: " + what);
}

class Tokens {
 public:
  explicit Tokens(std::string_view text) : text_(text) {}

  std::string_view next(std::string_view what) {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ >= text_.size()) bad("unexpected end while reading " + std::string(what));
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  void expect(std::string_view key) {
    const std::string_view got = next(key);
    if (got != key) bad("expected '" + std::string(key) + "', found '" + std::string(got) + "'");
  }

  double number(std::string_view what) {
    const std::string_view tok = next(what);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(value)) {
      bad("bad number '" + std::string(tok) + "' in " + std::string(what));
    }
    return value;
  }

  Eigen::Index count(std::string_view what) {
    const std::string_view tok = next(what);
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || value < 0 || value > 1000000) {
      bad("bad size '" + std::string(tok) + "' in " + std::string(what));
    }
    return static_cast<Eigen::Index>(value);
  }

  Eigen::VectorXd vector(std::string_view key) {
    expect(key);
    Eigen::VectorXd v(count(key));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = number(key);
    return v;
  }

  Eigen::MatrixXd matrix(std::string_view key) {
    expect(key);
    const Eigen::Index rows = count(key);
    const Eigen::Index cols = count(key);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = number(key);
    }
    return m;
  }

  bool at_end() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return pos_ >= text_.size();
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string model_file_name(ModelKind kind, TargetKind target) {
  return std::string(to_string(kind)) + "_" + to_string(target) + ".model";
}

std::string render_model(const PredictorModel& model) {
  std::ostringstream out;
  out << kModelMagic << '\n';
  out << "kind " << to_string(model.kind()) << '\n';
  out << "target " << to_string(model.target()) << '\n';
  out << "history " << model.history() << '\n';
  put_vector(out, "input_mean", model.input_standardizer().mean());
  put_vector(out, "input_scale", model.input_standardizer().scale());
  put_vector(out, "target_mean", model.target_standardizer().mean());
  put_vector(out, "target_scale", model.target_standardizer().scale());
  if (const auto* mlp = std::get_if<MLPParams>(&model.regressor())) {
    put_matrix(out, "w1", mlp->w1);
    put_vector(out, "b1", mlp->b1);
    put_vector(out, "w2", mlp->w2);
    out << "b2 " << fmt(mlp->b2) << '\n';
  } else {
    const auto& sgp = std::get<gp::SparseGP<double>>(model.regressor());
    put_vector(out, "log_params", sgp.params().packed());
    out << "jitter " << fmt(sgp.jitter()) << '\n';
    put_matrix(out, "inducing", sgp.inducing());
    put_matrix(out, "woodbury", sgp.woodbury_factor());
    put_vector(out, "mean_weights", sgp.mean_weights());
  }
  out << "end\n";
  return out.str();
}

PredictorModel parse_model(std::string_view text) {
  const std::size_t eol = text.find('\n');
  std::string_view first = text.substr(0, eol);
  if (!first.empty() && first.back() == '\r') first.remove_suffix(1);
  if (first != kModelMagic) bad("missing '" + std::string(kModelMagic) + "' header");
  Tokens tok(eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1));

  try {
    tok.expect("kind");
    const ModelKind kind = parse_model_kind(std::string(tok.next("kind")));
    tok.expect("target");
    const TargetKind target = parse_target_kind(std::string(tok.next("target")));
    tok.expect("history");
    const auto history = static_cast<std::size_t>(tok.count("history"));
    Eigen::VectorXd in_mean = tok.vector("input_mean");
    Eigen::VectorXd in_scale = tok.vector("input_scale");
    Eigen::VectorXd t_mean = tok.vector("target_mean");
    Eigen::VectorXd t_scale = tok.vector("target_scale");
    if (in_mean.size() != in_scale.size() || t_mean.size() != t_scale.size()) {
      bad("standardizer sizes differ");
    }
    if ((in_scale.array() <= 0).any() || (t_scale.array() <= 0).any()) {
      bad("standardizer scales must be positive");
    }
    Standardizer inputs(std::move(in_mean), std::move(in_scale));
    Standardizer target_std(std::move(t_mean), std::move(t_scale));

    PredictorModel::Regressor regressor = MLPParams{};
    if (kind == ModelKind::Mlp) {
      MLPParams p;
      p.w1 = tok.matrix("w1");
      p.b1 = tok.vector("b1");
      p.w2 = tok.vector("w2");
      tok.expect("b2");
      p.b2 = tok.number("b2");
      if (p.b1.size() != p.w1.rows() || p.w2.size() != p.w1.rows()) {
        bad("MLP layer sizes are inconsistent");
      }
      regressor = std::move(p);
    } else {
      const Eigen::VectorXd packed = tok.vector("log_params");
      tok.expect("jitter");
      const double jitter = tok.number("jitter");
      Eigen::MatrixXd z = tok.matrix("inducing");
      Eigen::MatrixXd lb = tok.matrix("woodbury");
      Eigen::VectorXd weights = tok.vector("mean_weights");
      regressor = gp::SparseGP<double>(std::move(z), gp::KernelParams<double>::from_packed(packed),
                                       jitter, std::move(lb), std::move(weights));
    }
    tok.expect("end");
    if (!tok.at_end()) bad("trailing content after 'end'");
    return PredictorModel(std::move(regressor), std::move(inputs), std::move(target_std), target,
                          history);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BadModelFile) throw;
    bad(e.what());
  }
}

void save_model(const PredictorModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << render_model(model);
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

PredictorModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

}  // namespace wheelpred
