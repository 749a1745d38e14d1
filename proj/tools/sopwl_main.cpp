// sopwl: build, export, solve and validate PWL / SO-PWL DistFlow models.

#include "sopwl/commands.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

struct FlagText {
  std::string mode;
  std::string objective;
  std::string format;
};

void add_common_flags(CLI::App& cmd, sopwl::RunConfig& cfg, FlagText& text,
                      std::string& config_file) {
  cmd.add_option("--case", cfg.case_ref, "Case file or bundled case name");
  cmd.add_option("--mode", text.mode, "pwl | sopwl | both")
      ->check(CLI::IsMember({"pwl", "sopwl", "both"}));
  cmd.add_option("--segments", cfg.segments, "Segments per PWL block")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--objective", text.objective,
                 "restoration | restoration_with_loss_penalty")
      ->check(CLI::IsMember(
          {"restoration", "loss_penalty", "restoration_with_loss_penalty"}));
  cmd.add_option("--loss-penalty", cfg.loss_penalty,
                 "Weight of sum r*Isqr in the loss-penalty objective");
  cmd.add_option("--adapter-cmd", cfg.adapter_cmd,
                 "Solver command; placeholders {lp} {sol} {timeout}");
  cmd.add_option("--timeout", cfg.timeout_seconds, "Solver timeout, seconds")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--out", cfg.out_dir, "Output directory");
  cmd.add_option("--zero-flow-floor", cfg.zero_flow_floor,
                 "Flows below this (pu) are not given an error");
  cmd.add_option("--format", text.format, "table | delimited")
      ->check(CLI::IsMember({"table", "delimited"}));
  cmd.add_option("--config", config_file,
                 "JSON file whose keys override the flags");
}

void apply_flag_text(const FlagText& text, sopwl::RunConfig& cfg) {
  if (text.mode == "pwl") cfg.mode = sopwl::RunMode::Pwl;
  if (text.mode == "sopwl") cfg.mode = sopwl::RunMode::SoPwl;
  if (text.mode == "both") cfg.mode = sopwl::RunMode::Both;
  if (!text.objective.empty()) {
    cfg.objective = *sopwl::parse_objective_kind(text.objective);
  }
  if (text.format == "table") cfg.format = sopwl::ReportFormat::Table;
  if (text.format == "delimited") cfg.format = sopwl::ReportFormat::Delimited;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Piecewise-linearized DistFlow restoration models"};
  app.require_subcommand(1);

  sopwl::RunConfig cfg;
  FlagText text;
  std::string config_file;
  std::string solution_path;

  auto* solve = app.add_subcommand("solve", "Build, solve and report");
  auto* export_lp = app.add_subcommand("export-lp", "Write the model as LP text");
  auto* validate = app.add_subcommand("validate", "Check a solution file");
  for (auto* cmd : {solve, export_lp, validate}) {
    add_common_flags(*cmd, cfg, text, config_file);
  }
  validate->add_option("--solution", solution_path, "Solution file")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    apply_flag_text(text, cfg);
    if (!config_file.empty()) sopwl::apply_config_file(cfg, config_file);
    if (*solve) return sopwl::cmd_solve(cfg, std::cout);
    if (*export_lp) return sopwl::cmd_export_lp(cfg, std::cout);
    if (*validate) return sopwl::cmd_validate(cfg, solution_path, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "sopwl: " << e.what() << '\n';
    return sopwl::kExitUsage;
  }
  return sopwl::kExitUsage;
}
