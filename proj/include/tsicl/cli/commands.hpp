#pragma once

#include "tsicl/cli/config.hpp"
#include "tsicl/model/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace tsicl::cli {

/// Process exit codes.
enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4, kInternal = 1 };

/// Entry point shared by the executable and the tests; `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Model geometry implied by the run config and the covariate count.
model::ModelConfig model_config(const RunConfig& config);

// Each command writes only below its configured output paths.
void cmd_synth(const RunConfig& config, std::ostream& log);
void cmd_preprocess(const RunConfig& config, std::ostream& log);
void cmd_train(const RunConfig& config, std::ostream& log);
void cmd_eval(const RunConfig& config, std::ostream& log);
void cmd_classify(const RunConfig& config, const std::filesystem::path& recording, std::ostream& out);
void cmd_plot(const std::filesystem::path& csv, const std::filesystem::path& svg);

} // namespace tsicl::cli
