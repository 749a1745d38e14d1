#include "sopwl/commands.hpp"

#include "sopwl/adapter.hpp"
#include "sopwl/errors.hpp"
#include "sopwl/validation.hpp"

#include "json.hpp"

#include <cstdlib>
#include <fstream>

#ifndef SOPWL_DATA_DIR
#define SOPWL_DATA_DIR "data/cases"
#endif
#ifndef SOPWL_DEFAULT_ADAPTER
#define SOPWL_DEFAULT_ADAPTER ""
#endif

namespace sopwl {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<PwlMode> RunConfig::modes() const {
  switch (mode) {
    case RunMode::Pwl: return {PwlMode::Pwl};
    case RunMode::SoPwl: return {PwlMode::SoPwl};
    case RunMode::Both: return {PwlMode::Pwl, PwlMode::SoPwl};
  }
  return {};
}

BuildOptions RunConfig::build_options(PwlMode m) const {
  BuildOptions opt;
  opt.num_segments = segments;
  opt.mode = m;
  opt.objective = objective;
  opt.loss_penalty =
      objective == ObjectiveKind::RestorationWithLossPenalty ? loss_penalty : 0.0;
  return opt;
}

void apply_config_file(RunConfig& config, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  const json j = json::parse(in);
  if (!j.is_object()) throw std::runtime_error("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "case") {
      config.case_ref = value.get<std::string>();
    } else if (key == "mode") {
      const auto s = value.get<std::string>();
      if (s == "pwl") config.mode = RunMode::Pwl;
      else if (s == "sopwl") config.mode = RunMode::SoPwl;
      else if (s == "both") config.mode = RunMode::Both;
      else throw std::runtime_error("config: unknown mode '" + s + "'");
    } else if (key == "segments") {
      config.segments = value.get<int>();
    } else if (key == "objective") {
      auto k = parse_objective_kind(value.get<std::string>());
      if (!k) throw std::runtime_error("config: unknown objective");
      config.objective = *k;
    } else if (key == "loss-penalty") {
      config.loss_penalty = value.get<double>();
    } else if (key == "adapter-cmd") {
      config.adapter_cmd = value.get<std::string>();
    } else if (key == "timeout") {
      config.timeout_seconds = value.get<double>();
    } else if (key == "out") {
      config.out_dir = value.get<std::string>();
    } else if (key == "zero-flow-floor") {
      config.zero_flow_floor = value.get<double>();
    } else if (key == "format") {
      const auto s = value.get<std::string>();
      if (s == "table") config.format = ReportFormat::Table;
      else if (s == "delimited") config.format = ReportFormat::Delimited;
      else throw std::runtime_error("config: unknown format '" + s + "'");
    } else {
      throw std::runtime_error("config: unknown key '" + key + "'");
    }
  }
}

fs::path bundled_case_dir() {
  if (const char* env = std::getenv("SOPWL_DATA_DIR"); env && *env) {
    return env;
  }
  return SOPWL_DATA_DIR;
}

fs::path resolve_case(const std::string& ref) {
  if (ref.empty()) throw CaseError("no case given (--case)");
  if (fs::is_regular_file(ref)) return ref;
  const fs::path bundled = bundled_case_dir() / (ref + ".case");
  if (fs::is_regular_file(bundled)) return bundled;
  throw CaseError("cannot resolve case '" + ref + "' (not a file, and no " +
                  bundled.string() + ")");
}

std::string effective_adapter_command(const RunConfig& config) {
  if (!config.adapter_cmd.empty()) return config.adapter_cmd;
  if (const char* env = std::getenv(kAdapterEnvVar); env && *env) return env;
  return SOPWL_DEFAULT_ADAPTER;
}

namespace {

std::string report_text(const ErrorReport& report, ReportFormat format) {
  return format == ReportFormat::Table ? to_table(report)
                                       : to_delimited(report);
}

const char* report_name(ReportFormat format) {
  return format == ReportFormat::Table ? "errors.txt" : "errors.csv";
}

void log_violations(const std::vector<Violation>& violations,
                    std::ostream& log) {
  log << violations.size() << " violated constraint(s):\n";
  for (const auto& v : violations) {
    log << "  " << v.tag << " by " << v.amount << '\n';
  }
}

// Constraint re-check, error report, sweep. Returns true when every check
// passed. Writes report files into `dir`.
bool post_checks(const RunConfig& config, const MilpModel& model,
                 const DistflowArtifacts& art, const Solution& sol,
                 const fs::path& dir, ErrorReport& report, std::ostream& log,
                 json& meta) {
  bool ok = true;
  const auto violations = check_solution(model, sol);
  meta["violations"] = violations.size();
  if (!violations.empty()) {
    log_violations(violations, log);
    ok = false;
  }

  report = branch_errors(sol, model, art, config.zero_flow_floor);
  write_file(dir / report_name(config.format),
             report_text(report, config.format));
  write_file(dir / "filling.csv", filling_dump(report));
  meta["max_E_p"] = report.p_summary.max_pct;
  meta["mean_E_p"] = report.p_summary.mean_pct;
  meta["max_E_q"] = report.q_summary.max_pct;
  meta["reported_feeders_p"] = report.p_summary.reported;
  meta["eso_ok"] = report.all_eso_ok();
  if (art.options.mode == PwlMode::SoPwl && !report.all_eso_ok()) {
    log << "ordered-filling check failed on an SO-PWL solution\n";
    ok = false;
  }

  try {
    const auto sweep = radial_sweep(
        art.network, injections_from_solution(sol, model, art),
        art.options.v_norm);
    const auto dev = voltage_deviation(sweep, sol, model, art);
    write_file(dir / "sweep.csv", sweep_report(sweep, art.network, dev));
    meta["sweep_iterations"] = sweep.iterations;
    meta["sweep_max_voltage_deviation"] = dev.cwiseAbs().maxCoeff();
    meta["sweep_root_injection_p"] = sweep.root_injection.real();
    meta["sweep_root_injection_q"] = sweep.root_injection.imag();
  } catch (const SweepError& e) {
    log << e.what() << '\n';
    ok = false;
  }
  return ok;
}

}  // namespace

int cmd_solve(const RunConfig& config, std::ostream& log) {
  const NetworkCase net = load_case(resolve_case(config.case_ref));
  const std::string command = effective_adapter_command(config);
  if (command.empty()) {
    log << "no solver adapter configured (--adapter-cmd or "
        << kAdapterEnvVar << ")\n";
    return kExitUsage;
  }
  const SubprocessAdapter adapter(
      SubprocessConfig::from_command(command, config.timeout_seconds));

  int exit_code = kExitOk;
  std::vector<ErrorReport> reports;
  for (PwlMode mode : config.modes()) {
    const fs::path dir = config.out_dir / std::string(to_string(mode));
    const BuiltModel built = build_restoration_model(net, config.build_options(mode));
    log << "[" << to_string(mode) << "] " << net.name << ": "
        << built.model.num_variables() << " variables ("
        << built.model.count_variables(VarKind::Binary) << " binary), "
        << built.model.num_constraints() << " constraints\n";

    SolveResult res;
    try {
      res = solve(built.model, adapter, dir);
    } catch (const std::exception& e) {
      log << "[" << to_string(mode) << "] solve failed: " << e.what() << '\n';
      return kExitSolveFailed;
    }
    json meta = {{"case", net.name},
                 {"mode", to_string(mode)},
                 {"segments", config.segments},
                 {"objective", to_string(config.objective)},
                 {"status", to_string(res.solution.status)},
                 {"solve_seconds", res.wall_seconds},
                 {"lp", res.lp_path.string()},
                 {"solution", res.solution_path.string()},
                 {"solver_log", res.log_path.string()}};
    log << "[" << to_string(mode) << "] status "
        << to_string(res.solution.status) << " in " << res.wall_seconds
        << " s\n";
    if (!res.solution.has_values()) {
      write_file(dir / "run.json", meta.dump(2) + "\n");
      return kExitSolveFailed;
    }
    meta["objective_value"] = res.solution.objective_value;
    log << "[" << to_string(mode) << "] objective "
        << res.solution.objective_value << '\n';

    ErrorReport report;
    if (!post_checks(config, built.model, built.artifacts, res.solution, dir,
                     report, log, meta)) {
      exit_code = kExitCheckFailed;
    }
    log << "[" << to_string(mode) << "] max E_p " << report.p_summary.max_pct
        << " % over " << report.p_summary.reported << " feeders; eso_ok "
        << (report.all_eso_ok() ? "true" : "false") << '\n';
    write_file(dir / "run.json", meta.dump(2) + "\n");
    reports.push_back(std::move(report));
  }
  if (reports.size() == 2) {
    write_file(config.out_dir / "comparison.csv",
               comparison_table(reports[0], reports[1]));
  }
  return exit_code;
}

int cmd_export_lp(const RunConfig& config, std::ostream& log) {
  const NetworkCase net = load_case(resolve_case(config.case_ref));
  for (PwlMode mode : config.modes()) {
    const BuiltModel built = build_restoration_model(net, config.build_options(mode));
    const fs::path path = config.out_dir / (std::string(to_string(mode)) + ".lp");
    write_file(path, write_lp(built.model));
    log << path.string() << '\n';
  }
  return kExitOk;
}

int cmd_validate(const RunConfig& config, const fs::path& solution_path,
                 std::ostream& log) {
  if (config.mode == RunMode::Both) {
    log << "validate needs a single --mode (pwl or sopwl)\n";
    return kExitUsage;
  }
  const PwlMode mode = config.modes().front();
  const NetworkCase net = load_case(resolve_case(config.case_ref));
  const BuiltModel built = build_restoration_model(net, config.build_options(mode));

  Solution sol;
  try {
    sol = parse_solution(read_file(solution_path), built.model);
  } catch (const std::exception& e) {
    log << "cannot read solution: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  if (!sol.has_values()) {
    log << "solution status " << to_string(sol.status) << " has no values\n";
    return kExitCheckFailed;
  }
  if (sol.incomplete()) {
    log << "warning: " << sol.missing.size()
        << " variable(s) missing from the solution, taken as 0\n";
  }
  const fs::path dir = config.out_dir / "validate";
  json meta = {{"case", net.name},
               {"mode", to_string(mode)},
               {"solution", solution_path.string()},
               {"objective_value", sol.objective_value}};
  ErrorReport report;
  const bool ok =
      post_checks(config, built.model, built.artifacts, sol, dir, report, log, meta);
  write_file(dir / "run.json", meta.dump(2) + "\n");
  log << report_text(report, config.format);
  return ok ? kExitOk : kExitCheckFailed;
}

}  // namespace sopwl
