#include "doctest.h"

#include "sopwl/adapter.hpp"
#include "sopwl/distflow.hpp"
#include "sopwl/errors.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <string>

using namespace sopwl;
namespace fs = std::filesystem;

namespace {

const fs::path kCases = fs::path(SOPWL_SOURCE_DIR) / "data" / "cases";

std::string test_adapter() { return SOPWL_TEST_ADAPTER; }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sopwl_test_distflow" / name;
  fs::remove_all(dir);
  return dir;
}

std::map<std::string, double> row_coefs(const MilpModel& m,
                                        const std::string& tag) {
  const LinearConstraint* c = m.find_constraint(tag);
  REQUIRE(c != nullptr);
  std::map<std::string, double> out;
  for (const auto& t : c->terms) out[m.variable(t.var).name] = t.coef;
  return out;
}

}  // namespace

TEST_CASE("flow_bound") {
  const Bases bases{10.0, 12.66};
  // 10e6 VA / (sqrt(3) * 12660 V)
  const double i_base = 10.0e6 / (1.7320508075688772 * 12660.0);
  CHECK(i_base == doctest::Approx(456.1).epsilon(1e-3));

  BuildOptions opt;
  opt.num_segments = 50;
  const PwlGridd g = flow_bound(Branch{1, 2, 0.0, 0.0, 50.0}, bases, opt);
  CHECK(g.y_max() == doctest::Approx(50.0 / i_base).epsilon(1e-12));
  CHECK(g.y_max() == doctest::Approx(0.1096).epsilon(1e-3));
  CHECK(g.num_segments() == 50);
  CHECK(g.seg_width() == doctest::Approx(g.y_max() / 50).epsilon(1e-15));

  const PwlGridd unity =
      flow_bound(Branch{1, 2, 0.0, 0.0, bases.current_base_amps()}, bases, opt);
  CHECK(unity.y_max() == doctest::Approx(1.0).epsilon(1e-15));
  opt.v_norm = 1.05;
  CHECK(flow_bound(Branch{1, 2, 0.0, 0.0, bases.current_base_amps()}, bases, opt)
            .y_max() == doctest::Approx(1.05).epsilon(1e-15));

  CHECK_THROWS(flow_bound(Branch{1, 2, 0.0, 0.0, 50.0}, Bases{0.0, 12.66}, opt));
}

TEST_CASE("emit_pwl_block counts") {
  const PwlGridd grid(0.1, 50);
  SUBCASE("pwl") {
    MilpModel m;
    const VarId y = m.add_variable("y", -0.1, 0.1);
    const auto h = emit_pwl_block(m, y, grid, PwlMode::Pwl);
    CHECK(h.deltas.size() == 50);
    CHECK(h.order.empty());
    // y + 50 deltas + y_plus, y_minus + z_plus, z_minus
    CHECK(m.num_variables() == 1 + 50 + 2 + 2);
    CHECK(m.count_variables(VarKind::Binary) == 2);
    CHECK(m.num_constraints() == 5);
    for (const char* tag : {"eq6:y", "eq7:y", "eq10:y", "eq11:y", "eq12:y"}) {
      CHECK(m.find_constraint(tag) != nullptr);
    }
    for (VarId d : h.deltas) {
      CHECK(m.variable(d).lower == 0.0);
      CHECK(m.variable(d).upper == grid.seg_width());
    }
    CHECK(row_coefs(m, "eq12:y") ==
          std::map<std::string, double>{{"y_zplus", 1.0}, {"y_zminus", 1.0}});
  }
  SUBCASE("sopwl") {
    MilpModel m;
    const VarId y = m.add_variable("y", -0.1, 0.1);
    const auto h = emit_pwl_block(m, y, grid, PwlMode::SoPwl);
    CHECK(h.order.size() == 50);
    CHECK(m.count_variables(VarKind::Binary) == 52);
    CHECK(m.constraints_with_prefix("eq20:").size() == 50);
    CHECK(m.constraints_with_prefix("eq21:").size() == 49);
    CHECK(h.big_m == grid.seg_width());
    CHECK(h.epsilon_plus == doctest::Approx(1e-6 * grid.seg_width()));
    // Delta_l - M x_l >= h - M - eps
    const LinearConstraint* r = m.find_constraint("eq20:y:3");
    REQUIRE(r);
    CHECK(r->sense == Sense::GreaterEqual);
    CHECK(r->rhs == doctest::Approx(-h.epsilon_plus));
    CHECK(row_coefs(m, "eq21:y:3") ==
          std::map<std::string, double>{{"y_d4", 1.0}, {"y_x3", -grid.seg_width()}});
  }
  SUBCASE("single segment") {
    MilpModel m;
    const VarId y = m.add_variable("y", -0.1, 0.1);
    const PwlGridd one(0.1, 1);
    const auto h = emit_pwl_block(m, y, one, PwlMode::SoPwl);
    CHECK(h.order.size() == 1);
    CHECK(m.constraints_with_prefix("eq20:").size() == 1);
    CHECK(m.constraints_with_prefix("eq21:").empty());
    const LinearExpr f = h.value_expr();
    const auto& t = f.terms();
    REQUIRE(t.size() == 1);
    CHECK(t[0].coef == doctest::Approx(0.1));
  }
  SUBCASE("errors") {
    MilpModel m;
    const VarId y = m.add_variable("y", -0.1, 0.1);
    CHECK_THROWS_AS(emit_pwl_block(m, y, PwlGridd(0.0, 5), PwlMode::Pwl),
                    std::invalid_argument);
    m.freeze();
    CHECK_THROWS_AS(emit_pwl_block(m, y, grid, PwlMode::Pwl), ModelError);
  }
}

TEST_CASE("33-bus model shape") {
  const NetworkCase net = load_case(kCases / "ieee33_4dg.case");
  BuildOptions opt;
  opt.mode = PwlMode::Pwl;
  const BuiltModel pwl = build_restoration_model(net, opt);
  CHECK(pwl.artifacts.branches.size() == 32);
  std::size_t deltas = 0;
  for (const auto& v : pwl.model.variables()) {
    if (v.name.find("_d") != std::string::npos && v.name.rfind("P_", 0) == 0) ++deltas;
    if (v.name.find("_d") != std::string::npos && v.name.rfind("Q_", 0) == 0) ++deltas;
  }
  CHECK(deltas == 3200);
  CHECK(pwl.model.count_variables(VarKind::Binary) == 32 * 2 * 2);
  CHECK(pwl.model.constraints_with_prefix("eq4:").size() == 32);
  CHECK(pwl.model.constraints_with_prefix("vdrop:").size() == 32);
  CHECK_FALSE(pwl.model.find_variable("Proot"));

  opt.mode = PwlMode::SoPwl;
  const BuiltModel so = build_restoration_model(net, opt);
  CHECK(so.model.count_variables(VarKind::Binary) == 32 * 2 * (2 + 50));
  CHECK(so.model.constraints_with_prefix("eq21:").size() == 32 * 2 * 49);

  // Root voltage fixed.
  const auto& v1 = so.model.variable(so.model.variable_id("V2_1"));
  CHECK(v1.lower == 1.0);
  CHECK(v1.upper == 1.0);
  CHECK(so.model.variable(so.model.variable_id("V2_18")).lower == doctest::Approx(0.81));
}

TEST_CASE("2-bus rows by hand") {
  const NetworkCase net = load_case(kCases / "twobus.case");
  BuildOptions opt;
  opt.num_segments = 4;
  opt.mode = PwlMode::Pwl;
  const BuiltModel b = build_restoration_model(net, opt);
  const double r = 0.01, x = 0.01;
  using Row = std::map<std::string, double>;
  CHECK(row_coefs(b.model, "balanceP:1") == Row{{"P_1_2", -1.0}, {"Proot", 1.0}});
  CHECK(row_coefs(b.model, "balanceP:2") ==
        Row{{"P_1_2", 1.0}, {"Isqr_1_2", -r}, {"beta_2", -0.01}});
  CHECK(row_coefs(b.model, "balanceQ:2") ==
        Row{{"Q_1_2", 1.0}, {"Isqr_1_2", -x}, {"beta_2", -0.005}});
  CHECK(row_coefs(b.model, "vdrop:1-2") ==
        Row{{"V2_2", 1.0}, {"V2_1", -1.0}, {"P_1_2", 2 * r}, {"Q_1_2", 2 * x},
            {"Isqr_1_2", -(r * r + x * x)}});

  // Serving the full load: P = 0.01 + r I, Q = 0.005 + x I balance exactly.
  const double isqr = 0.0002;
  const double p = 0.01 + r * isqr, q = 0.005 + x * isqr;
  Eigen::VectorXd xv = Eigen::VectorXd::Zero(b.model.num_variables());
  xv[b.model.variable_id("P_1_2").index] = p;
  xv[b.model.variable_id("Q_1_2").index] = q;
  xv[b.model.variable_id("Isqr_1_2").index] = isqr;
  xv[b.model.variable_id("beta_2").index] = 1.0;
  xv[b.model.variable_id("Proot").index] = p;
  for (const char* tag : {"balanceP:1", "balanceP:2", "balanceQ:2"}) {
    const auto* c = b.model.find_constraint(tag);
    double lhs = 0.0;
    for (const auto& t : c->terms) lhs += t.coef * xv[t.var.index];
    CHECK(lhs == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  }

  CHECK(b.model.objective().sense == ObjectiveSense::Maximize);
  REQUIRE(b.model.objective().terms.size() == 1);
  CHECK(b.model.objective().terms[0].coef == 0.01);

  BuildOptions pen = opt;
  pen.objective = ObjectiveKind::RestorationWithLossPenalty;
  pen.loss_penalty = 2.0;
  const BuiltModel bp = build_restoration_model(net, pen);
  REQUIRE(bp.model.objective().terms.size() == 2);
  CHECK(bp.model.objective().terms[1].coef == doctest::Approx(-2.0 * r));

  BuildOptions none = opt;
  none.restorable_buses = std::vector<int>{};
  const BuiltModel bn = build_restoration_model(net, none);
  CHECK_FALSE(bn.model.find_variable("beta_2"));
  CHECK(bn.model.objective().terms.empty());
}

TEST_CASE("build options validation") {
  BuildOptions opt;
  opt.num_segments = 0;
  CHECK_THROWS(opt.validate());
  opt = {};
  opt.big_m = -1.0;
  CHECK_THROWS(opt.validate());
  opt = {};
  opt.epsilon_plus = 0.0;
  CHECK_THROWS(opt.validate());
  CHECK(parse_pwl_mode("sopwl") == PwlMode::SoPwl);
  CHECK_FALSE(parse_pwl_mode("nope"));
  CHECK(parse_objective_kind("loss_penalty") ==
        ObjectiveKind::RestorationWithLossPenalty);
}

TEST_CASE("restoration solves") {
  if (test_adapter().empty()) {
    MESSAGE("no solver adapter configured; skipping");
    return;
  }
  const SubprocessAdapter adapter(SubprocessConfig::from_command(test_adapter(), 300));

  SUBCASE("no load") {
    const NetworkCase net = load_case(kCases / "empty2bus.case");
    for (PwlMode mode : {PwlMode::Pwl, PwlMode::SoPwl}) {
      BuildOptions opt;
      opt.mode = mode;
      opt.num_segments = 5;
      const BuiltModel b = build_restoration_model(net, opt);
      const auto res = solve(b.model, adapter, scratch("empty"));
      REQUIRE(res.solution.status == SolveStatus::Optimal);
      CHECK(res.solution.objective_value == doctest::Approx(0.0));
      CHECK(res.solution.value("V2_2") == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(check_solution(b.model, res.solution).empty());
    }
  }
  SUBCASE("ample supply restores everything") {
    const NetworkCase net = load_case(kCases / "twobus.case");
    BuildOptions opt;
    opt.num_segments = 10;
    const BuiltModel b = build_restoration_model(net, opt);
    const auto res = solve(b.model, adapter, scratch("twobus"));
    REQUIRE(res.solution.status == SolveStatus::Optimal);
    CHECK(res.solution.value("beta_2") == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.solution.objective_value == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(check_solution(b.model, res.solution).empty());
  }
  SUBCASE("33-bus restored load is capped by DG capacity") {
    const NetworkCase net = load_case(kCases / "ieee33_4dg.case");
    double cap = 0.0;
    for (const auto& g : net.generators) cap += g.p_max_pu;
    BuildOptions opt;
    opt.mode = PwlMode::Pwl;
    const BuiltModel b = build_restoration_model(net, opt);
    const auto res = solve(b.model, adapter, scratch("ieee33"));
    REQUIRE(res.solution.status == SolveStatus::Optimal);
    CHECK(res.solution.objective_value <= cap + 1e-6);
    CHECK(res.solution.objective_value > 0.9 * cap);
    CHECK(check_solution(b.model, res.solution).empty());
    // Each branch's P stays inside its flow bound.
    for (std::size_t i = 0; i < b.artifacts.branches.size(); ++i) {
      const double p = res.solution.value(
          b.model.variable(b.artifacts.branches[i].p).name);
      CHECK(std::abs(p) <= b.artifacts.block(i, FlowKind::P).grid.y_max() + 1e-9);
    }
  }
}
