#pragma once

// Post-solve analysis: filling states, per-branch approximation errors,
// ordered-filling checks, and an exact radial power-flow cross-check.

#include "sopwl/distflow.hpp"
#include "sopwl/milp.hpp"
#include "sopwl/pwl.hpp"

#include <Eigen/Core>

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace sopwl {

/// Flows with magnitude below this are reported as negligible.
inline constexpr double kDefaultZeroFlowFloor = 1e-6;

/// Reads a block's Delta values. Values within kFeasTol outside
/// [0, seg_width] are clamped.
FillingStated extract_filling(const Solution& solution, const MilpModel& model,
                              const PwlBlockHandle& block);

/// Tolerance for judging solved fillings: epsilon_plus plus solver slack.
double solved_eso_tol(const PwlBlockHandle& block);

struct FlowErrorRecord {
  double flow = 0.0;   // signed solved flow
  double approx = 0.0; // f = sum phi * Delta
  std::optional<double> error_pct;  // unset when negligible
  bool eso_ok = true;
  bool negligible = false;
  FillingStated filling{PwlGridd(0.0, 1), VectorX<double>::Zero(1)};
};

struct BranchErrorRecord {
  std::string feeder;  // "9-10"
  FlowErrorRecord p;
  FlowErrorRecord q;
};

struct ErrorSummary {
  std::size_t reported = 0;
  double max_pct = 0.0;
  double mean_pct = 0.0;
};

struct ErrorReport {
  PwlMode mode = PwlMode::Pwl;
  std::vector<BranchErrorRecord> records;
  ErrorSummary p_summary;
  ErrorSummary q_summary;

  bool all_eso_ok() const;
};

ErrorReport branch_errors(const Solution& solution, const MilpModel& model,
                          const DistflowArtifacts& artifacts,
                          double zero_flow_floor = kDefaultZeroFlowFloor);

/// Delimited table: feeder,mode,E_p,E_q,eso_ok
std::string to_delimited(const ErrorReport& report);
/// Aligned text table with the same columns.
std::string to_table(const ErrorReport& report);
/// feeder,kind,lambda,delta for every block.
std::string filling_dump(const ErrorReport& report);
/// Paired PWL / SO-PWL columns per feeder.
std::string comparison_table(const ErrorReport& pwl, const ErrorReport& sopwl);

struct UnorderedFeasibility {
  bool feasible_in_pwl = false;
  bool feasible_in_sopwl = false;
  std::vector<Violation> pwl_violations;
  std::vector<Violation> sopwl_violations;
};

/// Substitutes a filling into a single PWL block and a single SO-PWL block
/// built on `grid`, choosing the sign and ordering binaries as favourably
/// as possible, and reports which blocks accept it.
UnorderedFeasibility check_unordered_feasibility(
    const PwlGridd& grid, const VectorX<double>& deltas,
    std::optional<double> big_m = std::nullopt,
    std::optional<double> epsilon_plus = std::nullopt);

struct SweepResult {
  Eigen::VectorXcd voltage;                  // per bus, parallel to buses
  Eigen::VectorXcd branch_power;             // sending-end S per branch
  int iterations = 0;
  std::complex<double> root_injection;       // power drawn from the slack
  std::vector<double> trace;                 // max |dV| per iteration

  Eigen::VectorXd voltage_magnitude() const { return voltage.cwiseAbs(); }
};

/// Backward/forward sweep with the root as slack at v_norm. `injections`
/// holds net complex power injection per bus (generation minus load).
SweepResult radial_sweep(const NetworkCase& net,
                         const Eigen::VectorXcd& injections,
                         double v_norm = 1.0, double tol = 1e-8,
                         int max_iterations = 50);

/// Net bus injections implied by a solved restoration model.
Eigen::VectorXcd injections_from_solution(const Solution& solution,
                                          const MilpModel& model,
                                          const DistflowArtifacts& artifacts);

/// Per-bus |V_sweep| - sqrt(V2_milp).
Eigen::VectorXd voltage_deviation(const SweepResult& sweep,
                                  const Solution& solution,
                                  const MilpModel& model,
                                  const DistflowArtifacts& artifacts);

std::string sweep_report(const SweepResult& sweep, const NetworkCase& net,
                         const Eigen::VectorXd& deviation);

}  // namespace sopwl
