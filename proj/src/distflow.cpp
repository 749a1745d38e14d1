#include "sopwl/distflow.hpp"

#include "sopwl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sopwl {

std::string_view to_string(PwlMode mode) {
  return mode == PwlMode::Pwl ? "pwl" : "sopwl";
}

std::optional<PwlMode> parse_pwl_mode(std::string_view text) {
  if (text == "pwl") return PwlMode::Pwl;
  if (text == "sopwl") return PwlMode::SoPwl;
  return std::nullopt;
}

std::string_view to_string(ObjectiveKind kind) {
  return kind == ObjectiveKind::Restoration ? "restoration"
                                            : "restoration_with_loss_penalty";
}

std::optional<ObjectiveKind> parse_objective_kind(std::string_view text) {
  if (text == "restoration") return ObjectiveKind::Restoration;
  if (text == "restoration_with_loss_penalty" || text == "loss_penalty") {
    return ObjectiveKind::RestorationWithLossPenalty;
  }
  return std::nullopt;
}

void BuildOptions::validate() const {
  if (num_segments < 1) {
    throw std::invalid_argument("BuildOptions: num_segments must be >= 1");
  }
  if (!(v_norm > 0.0)) {
    throw std::invalid_argument("BuildOptions: v_norm must be positive");
  }
  if (big_m && !(*big_m > 0.0)) {
    throw std::invalid_argument("BuildOptions: big_m must be positive");
  }
  if (epsilon_plus && !(*epsilon_plus > 0.0)) {
    throw std::invalid_argument("BuildOptions: epsilon_plus must be positive");
  }
  if (v2_min > v2_max || v2_min < 0.0) {
    throw std::invalid_argument("BuildOptions: invalid voltage bounds");
  }
  if (loss_penalty < 0.0) {
    throw std::invalid_argument("BuildOptions: loss_penalty must be >= 0");
  }
}

LinearExpr PwlBlockHandle::value_expr() const {
  LinearExpr e;
  for (int l = 1; l <= grid.num_segments(); ++l) {
    e.add(deltas[static_cast<std::size_t>(l - 1)], segment_slope(grid, l));
  }
  return e;
}

PwlGridd flow_bound(const Branch& branch, const Bases& bases,
                    const BuildOptions& options) {
  const double i_base = bases.current_base_amps();
  if (!(i_base > 0.0) || !std::isfinite(i_base)) {
    throw CaseError("flow_bound: bases must be positive");
  }
  return PwlGridd(options.v_norm * branch.i_max_amps / i_base,
                  options.num_segments);
}

PwlBlockHandle emit_pwl_block(MilpModel& model, VarId y, const PwlGridd& grid,
                              PwlMode mode, std::optional<double> big_m,
                              std::optional<double> epsilon_plus) {
  if (model.frozen()) throw ModelError("emit_pwl_block: model is frozen");
  if (!(grid.y_max() > 0.0)) {
    throw std::invalid_argument("emit_pwl_block: grid y_max must be positive");
  }
  const double h = grid.seg_width();
  const double y_max = grid.y_max();
  const int n = grid.num_segments();
  const std::string base = model.variable(y).name;

  PwlBlockHandle blk;
  blk.y = y;
  blk.grid = grid;
  blk.mode = mode;
  blk.big_m = big_m.value_or(h);
  blk.epsilon_plus = epsilon_plus.value_or(1e-6 * h);

  // Eq 8: 0 <= Delta <= y_max / L
  for (int l = 1; l <= n; ++l) {
    blk.deltas.push_back(
        model.add_variable(base + "_d" + std::to_string(l), 0.0, h));
  }
  blk.y_plus = model.add_variable(base + "_plus", 0.0, y_max);
  blk.y_minus = model.add_variable(base + "_minus", 0.0, y_max);
  blk.z_plus = model.add_binary(base + "_zplus");
  blk.z_minus = model.add_binary(base + "_zminus");

  // Eq 6: y = y+ - y-
  model.add_constraint(
      LinearExpr{{y, 1.0}, {blk.y_plus, -1.0}, {blk.y_minus, 1.0}},
      Sense::Equal, 0.0, "eq6:" + base);
  // Eq 7: y+ + y- = sum Delta
  LinearExpr seg_sum{{blk.y_plus, 1.0}, {blk.y_minus, 1.0}};
  for (auto d : blk.deltas) seg_sum.add(d, -1.0);
  model.add_constraint(seg_sum, Sense::Equal, 0.0, "eq7:" + base);
  // Eqs 10-12
  model.add_constraint(LinearExpr{{blk.y_plus, 1.0}, {blk.z_plus, -y_max}},
                       Sense::LessEqual, 0.0, "eq10:" + base);
  model.add_constraint(LinearExpr{{blk.y_minus, 1.0}, {blk.z_minus, -y_max}},
                       Sense::LessEqual, 0.0, "eq11:" + base);
  model.add_constraint(LinearExpr{{blk.z_plus, 1.0}, {blk.z_minus, 1.0}},
                       Sense::LessEqual, 1.0, "eq12:" + base);

  if (mode == PwlMode::SoPwl) {
    for (int l = 1; l <= n; ++l) {
      blk.order.push_back(model.add_binary(base + "_x" + std::to_string(l)));
    }
    // Eq 20: Delta_l - h + (1 - x_l) M + eps >= 0
    //   <=>  Delta_l - M x_l >= h - M - eps
    for (int l = 1; l <= n; ++l) {
      const auto i = static_cast<std::size_t>(l - 1);
      model.add_constraint(
          LinearExpr{{blk.deltas[i], 1.0}, {blk.order[i], -blk.big_m}},
          Sense::GreaterEqual, h - blk.big_m - blk.epsilon_plus,
          "eq20:" + base + ":" + std::to_string(l));
    }
    // Eq 21: Delta_{l+1} <= x_l * h
    for (int l = 1; l < n; ++l) {
      const auto i = static_cast<std::size_t>(l - 1);
      model.add_constraint(
          LinearExpr{{blk.deltas[i + 1], 1.0}, {blk.order[i], -h}},
          Sense::LessEqual, 0.0, "eq21:" + base + ":" + std::to_string(l));
    }
  }
  return blk;
}

namespace {

std::string branch_suffix(const Branch& br) {
  return std::to_string(br.from) + "_" + std::to_string(br.to);
}

}  // namespace

DistflowArtifacts build_distflow(MilpModel& model, const NetworkCase& net,
                                 const BuildOptions& options) {
  options.validate();
  validate_case(net);

  DistflowArtifacts art;
  art.network = net;
  art.options = options;
  const double v2_norm = options.v_norm * options.v_norm;

  for (const auto& bus : net.buses) {
    const std::string name = "V2_" + std::to_string(bus.id);
    if (bus.id == net.root_bus) {
      art.v2.push_back(model.add_variable(name, v2_norm, v2_norm));
    } else {
      art.v2.push_back(model.add_variable(name,
                                          bus.v2_min.value_or(options.v2_min),
                                          bus.v2_max.value_or(options.v2_max)));
    }
  }

  for (const auto& br : net.branches) {
    const PwlGridd grid = flow_bound(br, net.bases, options);
    const double i_pu = br.i_max_amps / net.bases.current_base_amps();
    const std::string sfx = branch_suffix(br);
    BranchVars bv{
        model.add_variable("P_" + sfx, -grid.y_max(), grid.y_max()),
        model.add_variable("Q_" + sfx, -grid.y_max(), grid.y_max()),
        model.add_variable("Isqr_" + sfx, 0.0, i_pu * i_pu),
        {},
        {}};
    bv.p_block = emit_pwl_block(model, bv.p, grid, options.mode,
                                options.big_m, options.epsilon_plus);
    bv.q_block = emit_pwl_block(model, bv.q, grid, options.mode,
                                options.big_m, options.epsilon_plus);
    // Eq 4: v_norm^2 Isqr = f(P) + f(Q)
    LinearExpr coupling{{bv.isqr, v2_norm}};
    coupling.add(bv.p_block.value_expr(), -1.0);
    coupling.add(bv.q_block.value_expr(), -1.0);
    model.add_constraint(coupling, Sense::Equal, 0.0, "eq4:" + br.label());
    art.branches.push_back(std::move(bv));
  }

  for (const auto& load : net.loads) {
    const bool restorable =
        !options.restorable_buses ||
        std::find(options.restorable_buses->begin(),
                  options.restorable_buses->end(),
                  load.bus) != options.restorable_buses->end();
    if (restorable) {
      art.pickup.emplace_back(
          model.add_variable("beta_" + std::to_string(load.bus), 0.0, 1.0));
    } else {
      art.pickup.emplace_back(std::nullopt);
    }
  }
  for (const auto& g : net.generators) {
    const std::string sfx = std::to_string(g.bus);
    art.generators.push_back(
        {model.add_variable("Pg_" + sfx, 0.0, g.p_max_pu),
         model.add_variable("Qg_" + sfx, g.q_min_pu, g.q_max_pu)});
  }
  if (net.root_supply) {
    art.root_supply = GeneratorVars{
        model.add_variable("Proot", -kInf, kInf),
        model.add_variable("Qroot", -kInf, kInf)};
  }

  // Nodal balance: inflow minus losses, minus outflow, plus generation,
  // minus picked-up load, is zero.
  for (const auto& bus : net.buses) {
    LinearExpr bal_p;
    LinearExpr bal_q;
    if (auto in = net.parent_branch(bus.id)) {
      const auto& br = net.branches[*in];
      const auto& bv = art.branches[*in];
      bal_p.add(bv.p, 1.0).add(bv.isqr, -br.r_pu);
      bal_q.add(bv.q, 1.0).add(bv.isqr, -br.x_pu);
    }
    for (auto out : net.child_branches(bus.id)) {
      bal_p.add(art.branches[out].p, -1.0);
      bal_q.add(art.branches[out].q, -1.0);
    }
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
      if (net.generators[g].bus != bus.id) continue;
      bal_p.add(art.generators[g].p, 1.0);
      bal_q.add(art.generators[g].q, 1.0);
    }
    if (bus.id == net.root_bus && art.root_supply) {
      bal_p.add(art.root_supply->p, 1.0);
      bal_q.add(art.root_supply->q, 1.0);
    }
    for (std::size_t l = 0; l < net.loads.size(); ++l) {
      if (net.loads[l].bus != bus.id || !art.pickup[l]) continue;
      bal_p.add(*art.pickup[l], -net.loads[l].p_pu);
      bal_q.add(*art.pickup[l], -net.loads[l].q_pu);
    }
    const std::string id = std::to_string(bus.id);
    // An isolated bus with nothing attached has no balance to enforce.
    if (!bal_p.empty()) {
      model.add_constraint(bal_p, Sense::Equal, 0.0, "balanceP:" + id);
    }
    if (!bal_q.empty()) {
      model.add_constraint(bal_q, Sense::Equal, 0.0, "balanceQ:" + id);
    }
  }

  // V_j^2 = V_i^2 - 2 (r P + x Q) + (r^2 + x^2) Isqr
  for (std::size_t b = 0; b < net.branches.size(); ++b) {
    const auto& br = net.branches[b];
    const auto& bv = art.branches[b];
    LinearExpr drop{{art.v2[net.bus_index(br.to)], 1.0},
                    {art.v2[net.bus_index(br.from)], -1.0},
                    {bv.p, 2.0 * br.r_pu},
                    {bv.q, 2.0 * br.x_pu},
                    {bv.isqr, -(br.r_pu * br.r_pu + br.x_pu * br.x_pu)}};
    model.add_constraint(drop, Sense::Equal, 0.0, "vdrop:" + br.label());
  }
  return art;
}

void build_restoration_objective(MilpModel& model,
                                 const DistflowArtifacts& art) {
  LinearExpr obj;
  for (std::size_t l = 0; l < art.network.loads.size(); ++l) {
    if (art.pickup[l]) obj.add(*art.pickup[l], art.network.loads[l].p_pu);
  }
  if (art.options.objective == ObjectiveKind::RestorationWithLossPenalty &&
      art.options.loss_penalty > 0.0) {
    for (std::size_t b = 0; b < art.branches.size(); ++b) {
      obj.add(art.branches[b].isqr,
              -art.options.loss_penalty * art.network.branches[b].r_pu);
    }
  }
  model.set_objective(ObjectiveSense::Maximize, obj);
}

BuiltModel build_restoration_model(const NetworkCase& net,
                                   const BuildOptions& options) {
  BuiltModel built;
  built.artifacts = build_distflow(built.model, net, options);
  build_restoration_objective(built.model, built.artifacts);
  built.model.freeze();
  return built;
}

}  // namespace sopwl
