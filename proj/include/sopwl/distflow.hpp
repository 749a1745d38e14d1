#pragma once

// Linearized DistFlow MILP: per-branch PWL blocks for P^2 and Q^2, the
// branch-current coupling, nodal balance, voltage drop, and the restoration
// objective.
//
// Constraint tags (stable, used by validation and tests):
//   eq4:<i>-<j>               v_norm^2 * Isqr = f(P) + f(Q)
//   eq6:<y>  eq7:<y>          sign split, segment sum
//   eq10:<y> eq11:<y> eq12:<y>  sign binaries
//   eq20:<y>:<l>  eq21:<y>:<l>  ordered filling (SO-PWL only)
//   balanceP:<bus> balanceQ:<bus> vdrop:<i>-<j>
// where <y> is the flow variable name, e.g. P_9_10.

#include "sopwl/milp.hpp"
#include "sopwl/network.hpp"
#include "sopwl/pwl.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sopwl {

enum class PwlMode { Pwl, SoPwl };
enum class ObjectiveKind { Restoration, RestorationWithLossPenalty };
enum class FlowKind { P, Q };

std::string_view to_string(PwlMode mode);
std::optional<PwlMode> parse_pwl_mode(std::string_view text);
std::string_view to_string(ObjectiveKind kind);
std::optional<ObjectiveKind> parse_objective_kind(std::string_view text);

struct BuildOptions {
  int num_segments = 50;
  PwlMode mode = PwlMode::SoPwl;
  double v_norm = 1.0;
  /// Per-block big-M and epsilon; unset means seg_width and 1e-6 * seg_width.
  std::optional<double> big_m;
  std::optional<double> epsilon_plus;
  ObjectiveKind objective = ObjectiveKind::Restoration;
  double loss_penalty = 0.0;
  double v2_min = 0.81;
  double v2_max = 1.21;
  /// Buses whose load may be picked up. Unset means every load bus; loads
  /// outside the set stay de-energized.
  std::optional<std::vector<int>> restorable_buses;

  void validate() const;
};

/// Variables of one PWL block. `order` (x_lambda) is empty in PWL mode.
struct PwlBlockHandle {
  VarId y;
  std::vector<VarId> deltas;
  VarId y_plus;
  VarId y_minus;
  VarId z_plus;
  VarId z_minus;
  std::vector<VarId> order;
  PwlGridd grid{0.0, 1};
  PwlMode mode = PwlMode::Pwl;
  double big_m = 0.0;
  double epsilon_plus = 0.0;

  /// sum phi_lambda * Delta_lambda
  LinearExpr value_expr() const;
};

/// Ampacity in pu times v_norm, split into the configured segment count.
PwlGridd flow_bound(const Branch& branch, const Bases& bases,
                    const BuildOptions& options);

/// Declares the segment, sign-split and (SO-PWL) ordering variables of one
/// block on flow variable `y`, named after y, and their rows.
/// Defaults: big_m = seg_width, epsilon_plus = 1e-6 * seg_width.
PwlBlockHandle emit_pwl_block(MilpModel& model, VarId y, const PwlGridd& grid,
                              PwlMode mode,
                              std::optional<double> big_m = std::nullopt,
                              std::optional<double> epsilon_plus = std::nullopt);

struct BranchVars {
  VarId p;
  VarId q;
  VarId isqr;
  PwlBlockHandle p_block;
  PwlBlockHandle q_block;
};

struct GeneratorVars {
  VarId p;
  VarId q;
};

struct DistflowArtifacts {
  NetworkCase network;
  BuildOptions options;
  std::vector<BranchVars> branches;          // parallel to network.branches
  std::vector<VarId> v2;                     // parallel to network.buses
  std::vector<std::optional<VarId>> pickup;  // parallel to network.loads
  std::vector<GeneratorVars> generators;     // parallel to network.generators
  std::optional<GeneratorVars> root_supply;

  const PwlBlockHandle& block(std::size_t branch, FlowKind kind) const {
    return kind == FlowKind::P ? branches[branch].p_block
                               : branches[branch].q_block;
  }
};

DistflowArtifacts build_distflow(MilpModel& model, const NetworkCase& net,
                                 const BuildOptions& options);

/// max sum beta_i * P_load,i, minus loss_penalty * sum r * Isqr in the
/// loss-penalty variant.
void build_restoration_objective(MilpModel& model,
                                 const DistflowArtifacts& artifacts);

/// build_distflow + objective + freeze.
struct BuiltModel {
  MilpModel model;
  DistflowArtifacts artifacts;
};
BuiltModel build_restoration_model(const NetworkCase& net,
                                   const BuildOptions& options);

}  // namespace sopwl
