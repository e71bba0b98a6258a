#pragma once

#include "run_config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace blinkica::cli {

enum ExitCode : int { kOk = 0, kUserError = 1, kInternalError = 2 };

// Flags shared by every subcommand; unset values fall back to the config file.
struct CommonFlags {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  bool quick = false;
  bool serial_timing = true;
};

RunConfig resolve_config(const CommonFlags& flags);

std::filesystem::path dataset_dir(const std::filesystem::path& out);
std::filesystem::path dataset_path(const std::filesystem::path& out, const std::string& id);
std::filesystem::path truth_path(const std::filesystem::path& out, const std::string& id);

// Each command throws ConfigError/ParseError for user errors; the caller maps
// exceptions to exit codes. Return values are exit codes for partial failure.
int cmd_synth(const RunConfig& cfg, std::ostream& out);

struct SweepFlags {
  bool resume = false;
  bool serial_timing = true;
};
int cmd_sweep(const RunConfig& cfg, const SweepFlags& flags, std::ostream& out, std::ostream& err);

int cmd_report(const std::filesystem::path& results, const std::filesystem::path& out_dir,
               std::ostream& out, std::ostream& err);

int cmd_characterize(const std::filesystem::path& samples, const std::optional<std::filesystem::path>& json_out,
                     bool json_stdout, std::ostream& out);

// Shared helpers, exposed for tests.
std::vector<double> read_single_column(std::istream& in);
std::vector<GroupSummary> pool_datasets(const std::vector<TrialResult>& rows);

}  // namespace blinkica::cli
