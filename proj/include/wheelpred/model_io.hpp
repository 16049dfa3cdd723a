#ifndef WHEELPRED_MODEL_IO_HPP
#define WHEELPRED_MODEL_IO_HPP

#include <filesystem>
#include <string>
#include <string_view>

#include "wheelpred/predictor.hpp"

namespace wheelpred {

inline constexpr std::string_view kModelMagic = "wheelpred-model v1";

/// Text serialization of a trained model; see docs/model_format.md.
std::string render_model(const PredictorModel& model);
/// Throws BadModelFile on any malformed or inconsistent content.
PredictorModel parse_model(std::string_view text);

void save_model(const PredictorModel& model, const std::filesystem::path& path);
PredictorModel load_model(const std::filesystem::path& path);

/// `<kind>_<target>.model`, e.g. asgp_linear.model.
std::string model_file_name(ModelKind kind, TargetKind target);

}  // namespace wheelpred

#endif  // WHEELPRED_MODEL_IO_HPP
