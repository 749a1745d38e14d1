#include "doctest.h"

#include "sopwl/errors.hpp"
#include "sopwl/network.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

using namespace sopwl;

namespace {

const std::filesystem::path kCases =
    std::filesystem::path(SOPWL_SOURCE_DIR) / "data" / "cases";

const char* kTwoBus = R"(
name toy
[bases]
s_base_mva 10
v_base_kv 12.66
[buses]
1
2
[branches]
units pu
1 2 0.01 0.02 100
[loads]
2 0.01 0.005
)";

std::string replace(std::string s, const std::string& from,
                    const std::string& to) {
  const auto p = s.find(from);
  REQUIRE(p != std::string::npos);
  s.replace(p, from.size(), to);
  return s;
}

}  // namespace

TEST_CASE("bundled 33-bus case") {
  const NetworkCase net = load_case(kCases / "ieee33_4dg.case");
  CHECK(net.buses.size() == 33);
  CHECK(net.branches.size() == 32);
  REQUIRE(net.generators.size() == 4);
  std::vector<int> dg;
  for (const auto& g : net.generators) {
    dg.push_back(g.bus);
    CHECK(g.p_max_pu == 0.05);
    CHECK(g.q_max_pu == 0.03);
  }
  std::sort(dg.begin(), dg.end());
  CHECK(dg == std::vector<int>{13, 21, 22, 30});
  CHECK_FALSE(net.root_supply);

  // Feeder totals 3715 kW / 2300 kvar on a 10 MVA base.
  double q = 0.0;
  for (const auto& l : net.loads) q += l.q_pu;
  CHECK(net.total_load_p() == doctest::Approx(0.3715).epsilon(1e-12));
  CHECK(q == doctest::Approx(0.2300).epsilon(1e-12));

  // Line 1-2 is 0.0922 + j0.0470 ohm; Z_base = 12.66^2 / 10.
  const double zb = 12.66 * 12.66 / 10.0;
  CHECK(net.branches[0].label() == "1-2");
  CHECK(net.branches[0].r_pu == doctest::Approx(0.0922 / zb).epsilon(1e-12));
  CHECK(net.branches[0].x_pu == doctest::Approx(0.0470 / zb).epsilon(1e-12));
  for (const auto& br : net.branches) CHECK(br.i_max_amps == 50.0);

  const auto order = net.bfs_order();
  CHECK(order.front() == 1);
  CHECK(order.size() == 33);
  CHECK_FALSE(net.parent_branch(1));
  CHECK(net.branches[*net.parent_branch(19)].from == 2);
  CHECK(net.child_branches(2).size() == 2);
}

TEST_CASE("bases") {
  Bases b{10.0, 12.66};
  CHECK(b.current_base_amps() ==
        doctest::Approx(10e6 / (std::sqrt(3.0) * 12.66e3)));
  CHECK(b.impedance_base_ohm() == doctest::Approx(16.02756));
}

TEST_CASE("toy case parses") {
  const NetworkCase net = parse_case(kTwoBus);
  CHECK(net.name == "toy");
  CHECK(net.buses.size() == 2);
  CHECK(net.loads.size() == 1);
  CHECK(net.branches[0].x_pu == 0.02);
  CHECK(net.root_supply);
  CHECK_NOTHROW(load_case(kCases / "twobus.case"));
  CHECK_NOTHROW(load_case(kCases / "empty2bus.case"));
}

TEST_CASE("case errors") {
  const std::string base = kTwoBus;
  SUBCASE("cycle") {
    const std::string text =
        replace(replace(base, "2\n[branches]", "2\n3\n[branches]"),
                "1 2 0.01 0.02 100\n",
                "1 2 0.01 0.02 100\n2 3 0.01 0.01 100\n3 2 0.01 0.01 100\n");
    CHECK_THROWS_WITH_AS(parse_case(text), doctest::Contains("radial"),
                         CaseError);
  }
  SUBCASE("disconnected bus") {
    CHECK_THROWS_AS(parse_case(replace(base, "2\n[branches]", "2\n3\n[branches]")),
                    CaseError);
  }
  SUBCASE("missing base") {
    CHECK_THROWS_AS(parse_case(replace(base, "v_base_kv 12.66\n", "")), CaseError);
  }
  SUBCASE("non-positive base") {
    CHECK_THROWS_AS(parse_case(replace(base, "s_base_mva 10", "s_base_mva 0")),
                    CaseError);
  }
  SUBCASE("missing branch field") {
    CHECK_THROWS_AS(parse_case(replace(base, "1 2 0.01 0.02 100", "1 2 0.01 0.02")),
                    CaseError);
  }
  SUBCASE("missing units line") {
    CHECK_THROWS_AS(parse_case(replace(base, "units pu\n", "")), CaseError);
  }
  SUBCASE("negative impedance") {
    CHECK_THROWS_AS(parse_case(replace(base, "0.01 0.02", "-0.01 0.02")),
                    CaseError);
  }
  SUBCASE("unknown section") {
    CHECK_THROWS_AS(parse_case(replace(base, "[loads]", "[switches]")),
                    CaseError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_case(kCases / "nope.case"), CaseError);
  }
}
