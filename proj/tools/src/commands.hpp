#pragma once

#include <filesystem>
#include <string>

#include "run_config.hpp"

namespace mcg::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitRuntime = 1,     // I/O, corrupt files, anything unexpected
    kExitValidation = 2,  // bad flags, config or inputs; nothing was computed
    kExitNumerical = 3,   // divergence or non-finite values during compute
};

void cmd_synth(const std::string& what, RunConfig config);
void cmd_train(RunConfig config);
void cmd_generate(RunConfig config);
void cmd_invert(RunConfig config);
void cmd_extract_pattern(RunConfig config);
void cmd_evaluate(const std::filesystem::path& results, const std::filesystem::path& gt, RunConfig config,
                  unsigned jobs);
void cmd_benchmark(RunConfig config, std::size_t seeds);

/// Records the error in the marker of the run that was in progress, if any.
void mark_failed(const std::string& message);

}  // namespace mcg::cli
