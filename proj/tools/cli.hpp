#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hirl/config.hpp"
#include "hirl/error.hpp"
#include "hirl/generator.hpp"

namespace hirl::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,
  kExitIo = 3,
  kExitNumerical = 4,
};

int exit_code_for(ErrorCode code);

/// Model and generator sections of a configuration file. Either may be
/// absent; missing keys take their defaults and unknown keys are rejected.
struct RunConfig {
  ModelConfig model;
  GeneratorConfig generator = GeneratorConfig::defaults();
};

RunConfig load_run_config(const std::filesystem::path& path);
std::string to_json_string(const RunConfig& config);

/// Runs `hirl <args...>` and returns the process exit code. Progress and
/// summaries go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hirl::cli
