#include "doctest.h"

#include "sopwl/adapter.hpp"
#include "sopwl/errors.hpp"
#include "sopwl/milp.hpp"

#include <algorithm>
#include <filesystem>
#include <string>

using namespace sopwl;
namespace fs = std::filesystem;

namespace {

std::string test_adapter() { return SOPWL_TEST_ADAPTER; }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sopwl_test_milp" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

MilpModel one_var_max() {
  MilpModel m;
  const VarId x = m.add_binary("x");
  m.add_constraint(LinearExpr{{x, 1.0}}, Sense::LessEqual, 1.0, "cap:x");
  m.set_objective(ObjectiveSense::Maximize, LinearExpr{{x, 1.0}});
  m.freeze();
  return m;
}

}  // namespace

TEST_CASE("build_model") {
  const MilpModel m = one_var_max();
  CHECK(m.num_variables() == 1);
  CHECK(m.num_constraints() == 1);
  CHECK(m.find_constraint("cap:x") != nullptr);
  CHECK(m.variable(m.variable_id("x")).kind == VarKind::Binary);

  MilpModel bad;
  bad.add_variable("x", 0.0, 1.0);
  CHECK_THROWS_AS(bad.add_variable("x", 0.0, 2.0), ModelError);
  CHECK_THROWS_AS(bad.add_variable("y", 2.0, 1.0), ModelError);
  CHECK_THROWS_AS(bad.add_variable("b", 0.0, 2.0, VarKind::Binary), ModelError);
  CHECK_THROWS_AS(
      bad.add_constraint(LinearExpr{{VarId{7}, 1.0}}, Sense::Equal, 0.0, "r"),
      ModelError);
  CHECK_THROWS_AS(bad.add_constraint(LinearExpr{}, Sense::Equal, 0.0, "r"),
                  ModelError);
  bad.add_constraint(LinearExpr{{VarId{0}, 1.0}}, Sense::Equal, 0.0, "r");
  CHECK_THROWS_AS(
      bad.add_constraint(LinearExpr{{VarId{0}, 1.0}}, Sense::Equal, 0.0, "r"),
      ModelError);
  bad.freeze();
  CHECK_THROWS_AS(bad.add_variable("z", 0.0, 1.0), ModelError);
}

TEST_CASE("LinearExpr merges repeated variables") {
  LinearExpr e{{VarId{0}, 1.0}, {VarId{1}, 2.0}, {VarId{0}, 3.0}};
  REQUIRE(e.terms().size() == 2);
  CHECK(e.terms()[0].coef == 4.0);
  Eigen::VectorXd x(2);
  x << 1.0, 10.0;
  CHECK(e.evaluate(x) == 24.0);
}

TEST_CASE("write_lp golden text") {
  const std::string expected =
      "\\ sopwl MILP\n"
      "Maximize\n"
      " obj: x\n"
      "Subject To\n"
      " cap.x: x <= 1\n"
      "Bounds\n"
      "Binaries\n"
      " x\n"
      "End\n";
  CHECK(write_lp(one_var_max()) == expected);

  MilpModel open;
  open.add_variable("x", 0.0, 1.0);
  CHECK_THROWS_AS(write_lp(open), SerializationError);

  MilpModel bad;
  bad.add_variable("x y", 0.0, 1.0);
  bad.freeze();
  CHECK_THROWS_AS(write_lp(bad), SerializationError);
}

TEST_CASE("write_lp renders the sign-binary row") {
  MilpModel m;
  const VarId zp = m.add_binary("z_plus");
  const VarId zm = m.add_binary("z_minus");
  m.add_constraint(LinearExpr{{zp, 1.0}, {zm, 1.0}}, Sense::LessEqual, 1.0,
                   "eq12:P_1_2");
  m.freeze();
  CHECK(write_lp(m).find(" eq12.P_1_2: z_plus + z_minus <= 1\n") !=
        std::string::npos);
}

TEST_CASE("write_lp renders every sense and bound shape, deterministically") {
  MilpModel m;
  const VarId a = m.add_variable("a", -kInf, kInf);
  const VarId b = m.add_variable("b", 2.5, 2.5);
  const VarId c = m.add_variable("c", -1.0, 3.0);
  const VarId d = m.add_variable("d", 0.0, kInf);
  m.add_constraint(LinearExpr{{a, 1.0}, {b, -2.0}}, Sense::GreaterEqual, -1.0, "ge");
  m.add_constraint(LinearExpr{{c, 0.5}}, Sense::Equal, 0.25, "eq");
  m.add_constraint(LinearExpr{{d, 1.0}}, Sense::LessEqual, 4.0, "le");
  m.set_objective(ObjectiveSense::Minimize, LinearExpr{{a, 1.0}});
  m.freeze();
  const std::string lp = write_lp(m);
  CHECK(lp.find("Minimize\n") != std::string::npos);
  CHECK(lp.find(" ge: a - 2 b >= -1\n") != std::string::npos);
  CHECK(lp.find(" eq: 0.5 c = 0.25\n") != std::string::npos);
  CHECK(lp.find(" le: d <= 4\n") != std::string::npos);
  CHECK(lp.find(" a free\n") != std::string::npos);
  CHECK(lp.find(" b = 2.5\n") != std::string::npos);
  CHECK(lp.find(" -1 <= c <= 3\n") != std::string::npos);
  CHECK(lp == write_lp(m));
}

TEST_CASE("format_number round-trips") {
  for (double v : {0.0, 1.0, -2.5, 1e-300, 0.1 + 0.2, 123456789.123}) {
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(-0.0) == "0");
}

TEST_CASE("parse_solution") {
  const MilpModel m = one_var_max();
  const Solution s = parse_solution("optimal\nobj 5\nx 1\n", m);
  CHECK(s.status == SolveStatus::Optimal);
  CHECK(s.objective_value == 5.0);
  CHECK(s.value("x") == 1.0);
  CHECK_FALSE(s.incomplete());

  const Solution inf = parse_solution("infeasible\n", m);
  CHECK(inf.status == SolveStatus::Infeasible);
  CHECK(inf.values.empty());

  const Solution partial = parse_solution("feasible\nobj 0\n", m);
  CHECK(partial.incomplete());
  CHECK(partial.value("x") == 0.0);

  CHECK_THROWS_AS(parse_solution("x 2\n", m), SolutionParseError);
  CHECK_THROWS_AS(parse_solution("bogus\n", m), SolutionParseError);
  CHECK_THROWS_AS(parse_solution("optimal\nobj 1\nx one\n", m),
                  SolutionParseError);
  CHECK_THROWS_AS(parse_solution("optimal\nobj 1\ny 1\n", m),
                  SolutionParseError);
  CHECK_THROWS_AS(parse_solution("optimal\nobj 1\nx 1.5\n", m), BoundViolation);
  CHECK_NOTHROW(parse_solution("optimal\nobj 1\nx 1.0000001\n", m));

  CHECK(parse_solution(write_solution(s, m), m).value("x") == 1.0);
}

TEST_CASE("check_solution reports violations by tag") {
  MilpModel m;
  const VarId x = m.add_variable("x", 0.0, 10.0);
  const VarId y = m.add_variable("y", 0.0, 10.0);
  const VarId b = m.add_binary("b");
  m.add_constraint(LinearExpr{{x, 1.0}, {y, 1.0}}, Sense::LessEqual, 4.0, "sum");
  m.add_constraint(LinearExpr{{x, 1.0}, {y, -1.0}}, Sense::Equal, 0.0, "tie");
  m.add_constraint(LinearExpr{{x, 1.0}, {b, -1.0}}, Sense::GreaterEqual, 0.0, "link");
  m.freeze();

  Solution ok;
  ok.status = SolveStatus::Optimal;
  ok.values = {{"x", 2.0}, {"y", 2.0}, {"b", 1.0}};
  CHECK(check_solution(m, ok).empty());

  Solution bad = ok;
  bad.values["y"] = 3.0;
  bad.values["b"] = 0.5;
  const auto v = check_solution(m, bad);
  std::vector<std::string> tags;
  for (const auto& e : v) tags.push_back(e.tag);
  CHECK(std::find(tags.begin(), tags.end(), "sum") != tags.end());
  CHECK(std::find(tags.begin(), tags.end(), "tie") != tags.end());
  CHECK(std::find(tags.begin(), tags.end(), "integrality:b") != tags.end());
  CHECK(std::find(tags.begin(), tags.end(), "link") == tags.end());
}

TEST_CASE("CallbackAdapter round trip") {
  const MilpModel m = one_var_max();
  std::string seen;
  const CallbackAdapter adapter([&](std::string_view lp) {
    seen = std::string(lp);
    return std::string("optimal\nobj 1\nx 1\n");
  });
  const auto res = solve(m, adapter, scratch("callback"));
  CHECK(seen == write_lp(m));
  CHECK(res.solution.objective_value == 1.0);
  CHECK(fs::exists(res.log_path));

  const CallbackAdapter err([](std::string_view) { return std::string("error\n"); });
  CHECK_THROWS_AS(solve(m, err, scratch("callback_err")), AdapterError);
}

TEST_CASE("SubprocessAdapter argument expansion") {
  SubprocessAdapter plain(SubprocessConfig::from_command("solver --quiet", 5));
  auto args = plain.expand_args("a.lp", "b.sol");
  REQUIRE(args.size() == 3);
  CHECK(args[1] == "a.lp");
  CHECK(args[2] == "b.sol");

  SubprocessAdapter tmpl(
      SubprocessConfig::from_command("solver -o {sol} -t {timeout} {lp}", 7));
  args = tmpl.expand_args("a.lp", "b.sol");
  CHECK(args == std::vector<std::string>{"-o", "b.sol", "-t", "7", "a.lp"});

  CHECK_THROWS_AS(SubprocessConfig::from_command("  "), AdapterError);
}

TEST_CASE("SubprocessAdapter failures") {
  const MilpModel m = one_var_max();
  SubprocessAdapter missing(
      SubprocessConfig::from_command("/nonexistent/solver-binary", 5));
  CHECK_THROWS_AS(solve(m, missing, scratch("missing")), AdapterError);

  SubprocessAdapter slow(SubprocessConfig{"sh", {"-c", "sleep 30"}, 0.3});
  CHECK_THROWS_WITH_AS(solve(m, slow, scratch("slow")),
                       doctest::Contains("timed out"), AdapterError);

  SubprocessAdapter failing(SubprocessConfig{"false", {}, 5});
  CHECK_THROWS_AS(solve(m, failing, scratch("false")), AdapterError);
}

TEST_CASE("external solver examples") {
  if (test_adapter().empty()) {
    MESSAGE("no solver adapter configured; skipping");
    return;
  }
  const SubprocessAdapter adapter(SubprocessConfig::from_command(test_adapter(), 60));

  SUBCASE("max x") {
    MilpModel m;
    const VarId x = m.add_variable("x", 0.0, 1.0);
    m.set_objective(ObjectiveSense::Maximize, LinearExpr{{x, 1.0}});
    m.freeze();
    const auto res = solve(m, adapter, scratch("maxx"));
    CHECK(res.solution.status == SolveStatus::Optimal);
    CHECK(res.solution.objective_value == doctest::Approx(1.0));
    CHECK(res.wall_seconds > 0.0);
  }
  SUBCASE("binary packing") {
    MilpModel m;
    const VarId x = m.add_binary("x");
    const VarId y = m.add_binary("y");
    m.add_constraint(LinearExpr{{x, 1.0}, {y, 1.0}}, Sense::LessEqual, 1.0, "pack");
    m.set_objective(ObjectiveSense::Maximize, LinearExpr{{x, 1.0}, {y, 1.0}});
    m.freeze();
    const auto res = solve(m, adapter, scratch("pack"));
    CHECK(res.solution.objective_value == doctest::Approx(1.0));
    CHECK(check_solution(m, res.solution).empty());
  }
  SUBCASE("contradiction") {
    MilpModel m;
    const VarId x = m.add_variable("x", 0.0, 10.0);
    m.add_constraint(LinearExpr{{x, 1.0}}, Sense::GreaterEqual, 2.0, "lo");
    m.add_constraint(LinearExpr{{x, 1.0}}, Sense::LessEqual, 1.0, "hi");
    m.set_objective(ObjectiveSense::Maximize, LinearExpr{{x, 1.0}});
    m.freeze();
    CHECK(solve(m, adapter, scratch("infeasible")).solution.status ==
          SolveStatus::Infeasible);
  }
  SUBCASE("empty model") {
    MilpModel m;
    m.freeze();
    const auto res = solve(m, adapter, scratch("empty"));
    CHECK(res.solution.has_values());
    CHECK(res.solution.objective_value == 0.0);
  }
}
