#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kernelrn/config.hpp"

namespace kernelrn {

inline constexpr const char* kToolName = "kernelrn";
inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitInconclusive = 2, kExitError = 3 };

struct RunOutcome {
  nlohmann::ordered_json report;
  int exit_code = kExitPass;
  std::vector<std::pair<std::string, std::string>> csv_files;  // (file name, contents)
};

/// c (and d, block) sequences with ratio tests and large-N comparisons.
RunOutcome run_moments(const RunConfig& cfg);

/// Shift density at order max_order with the kernel-order cross-check.
RunOutcome run_rn(const RunConfig& cfg);

/// Localized von Neumann check, plus the vector form when a vector is given.
RunOutcome run_vn(const RunConfig& cfg);

/// Writes report.json and the CSV tables into `dir` according to the output
/// formats. Each file goes to a temporary name first and is then renamed.
void write_outputs(const RunOutcome& outcome, const OutputConfig& output, const std::filesystem::path& dir);

/// Writes `contents` to `path` via a temporary file and rename.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace kernelrn
