#pragma once

// Solver adapters: an LP file goes in, a solution file comes out.

#include "sopwl/milp.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace sopwl {

/// Environment variable holding the default adapter command line.
inline constexpr const char* kAdapterEnvVar = "SOPWL_ADAPTER_CMD";

class SolverAdapter {
 public:
  virtual ~SolverAdapter() = default;
  /// Solves the LP at `lp_path` and leaves a solution file at `sol_path`.
  /// Solver chatter goes to `log_path`.
  virtual void run(const std::filesystem::path& lp_path,
                   const std::filesystem::path& sol_path,
                   const std::filesystem::path& log_path) const = 0;
};

/// External executable. Arguments may use the placeholders {lp}, {sol} and
/// {timeout}; when neither {lp} nor {sol} appears, "{lp} {sol}" is appended.
struct SubprocessConfig {
  std::string executable;
  std::vector<std::string> args;
  double timeout_seconds = 600.0;

  /// Splits a whitespace-separated command line ("python3 adapter.py").
  static SubprocessConfig from_command(std::string_view command,
                                       double timeout_seconds = 600.0);
};

class SubprocessAdapter final : public SolverAdapter {
 public:
  explicit SubprocessAdapter(SubprocessConfig config);

  void run(const std::filesystem::path& lp_path,
           const std::filesystem::path& sol_path,
           const std::filesystem::path& log_path) const override;

  const SubprocessConfig& config() const { return config_; }
  std::vector<std::string> expand_args(const std::filesystem::path& lp_path,
                                       const std::filesystem::path& sol_path)
      const;

 private:
  SubprocessConfig config_;
};

/// In-process solver: receives the LP text, returns solution text.
class CallbackAdapter final : public SolverAdapter {
 public:
  using Callback = std::function<std::string(std::string_view lp_text)>;
  explicit CallbackAdapter(Callback fn) : fn_(std::move(fn)) {}

  void run(const std::filesystem::path& lp_path,
           const std::filesystem::path& sol_path,
           const std::filesystem::path& log_path) const override;

 private:
  Callback fn_;
};

struct SolveResult {
  Solution solution;
  double wall_seconds = 0.0;
  std::filesystem::path lp_path;
  std::filesystem::path solution_path;
  std::filesystem::path log_path;
};

/// write_lp -> adapter -> parse_solution, with files under `work_dir`.
/// Throws AdapterError when the solver reports `error`.
SolveResult solve(const MilpModel& model, const SolverAdapter& adapter,
                  const std::filesystem::path& work_dir);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view text);

}  // namespace sopwl
