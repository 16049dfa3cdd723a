#ifndef WHEELPRED_TOOLS_CLI_HPP
#define WHEELPRED_TOOLS_CLI_HPP

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "wheelpred/pipeline.hpp"

namespace wheelpred::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Parses flat `key = value` text. '#' starts a comment. Throws
/// InvalidArgument on a malformed line.
std::map<std::string, std::string> parse_config_text(const std::string& text);

/// Applies config-file keys to `config`. Throws InvalidArgument on an unknown
/// key or a bad value.
void apply_config(const std::map<std::string, std::string>& entries, PipelineConfig& config);

/// Entry point; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wheelpred::cli

#endif  // WHEELPRED_TOOLS_CLI_HPP
