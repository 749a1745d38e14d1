#pragma once

// The solve / export-lp / validate commands behind the sopwl executable.

#include "sopwl/distflow.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace sopwl {

enum class RunMode { Pwl, SoPwl, Both };
enum class ReportFormat { Table, Delimited };

struct RunConfig {
  std::string case_ref;  // path, or the name of a bundled case
  RunMode mode = RunMode::SoPwl;
  int segments = 50;
  ObjectiveKind objective = ObjectiveKind::Restoration;
  double loss_penalty = 1.0;
  std::string adapter_cmd;  // empty: $SOPWL_ADAPTER_CMD, then built-in
  double timeout_seconds = 600.0;
  std::filesystem::path out_dir = "sopwl_out";
  double zero_flow_floor = 1e-6;
  ReportFormat format = ReportFormat::Delimited;

  std::vector<PwlMode> modes() const;
  BuildOptions build_options(PwlMode mode) const;
};

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitSolveFailed = 2;
inline constexpr int kExitUsage = 3;

/// Overrides fields from a JSON object whose keys match the long flag names
/// (case, mode, segments, objective, loss-penalty, adapter-cmd, timeout,
/// out, zero-flow-floor, format).
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// Directory holding bundled cases ($SOPWL_DATA_DIR overrides).
std::filesystem::path bundled_case_dir();
/// An existing file path, or "<bundled dir>/<name>.case".
std::filesystem::path resolve_case(const std::string& ref);

/// Adapter command line in effect for `config`.
std::string effective_adapter_command(const RunConfig& config);

int cmd_solve(const RunConfig& config, std::ostream& log);
int cmd_export_lp(const RunConfig& config, std::ostream& log);
int cmd_validate(const RunConfig& config,
                 const std::filesystem::path& solution_path,
                 std::ostream& log);

}  // namespace sopwl
