#include "sopwl/network.hpp"

#include "sopwl/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

namespace sopwl {

double Bases::current_base_amps() const {
  return s_base_mva * 1e6 / (std::sqrt(3.0) * v_base_kv * 1e3);
}

double Bases::impedance_base_ohm() const {
  return v_base_kv * v_base_kv / s_base_mva;
}

std::string Branch::label() const {
  return std::to_string(from) + "-" + std::to_string(to);
}

std::size_t NetworkCase::bus_index(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == id) return i;
  }
  throw CaseError("unknown bus " + std::to_string(id));
}

std::optional<std::size_t> NetworkCase::parent_branch(int bus_id) const {
  for (std::size_t b = 0; b < branches.size(); ++b) {
    if (branches[b].to == bus_id) return b;
  }
  return std::nullopt;
}

std::vector<std::size_t> NetworkCase::child_branches(int bus_id) const {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < branches.size(); ++b) {
    if (branches[b].from == bus_id) out.push_back(b);
  }
  return out;
}

std::vector<int> NetworkCase::bfs_order() const {
  std::vector<int> order;
  std::queue<int> pending;
  pending.push(root_bus);
  while (!pending.empty()) {
    const int bus = pending.front();
    pending.pop();
    order.push_back(bus);
    for (auto b : child_branches(bus)) pending.push(branches[b].to);
  }
  return order;
}

double NetworkCase::total_load_p() const {
  return std::accumulate(loads.begin(), loads.end(), 0.0,
                         [](double s, const Load& l) { return s + l.p_pu; });
}

void validate_case(const NetworkCase& net) {
  if (!(net.bases.s_base_mva > 0.0) || !(net.bases.v_base_kv > 0.0)) {
    throw CaseError("bases must be positive");
  }
  if (net.buses.empty()) throw CaseError("case has no buses");

  std::set<int> ids;
  for (const auto& b : net.buses) {
    if (!ids.insert(b.id).second) {
      throw CaseError("duplicate bus " + std::to_string(b.id));
    }
    if (b.v2_min && b.v2_max && *b.v2_min > *b.v2_max) {
      throw CaseError("bus " + std::to_string(b.id) +
                      ": voltage bounds reversed");
    }
  }
  if (!ids.contains(net.root_bus)) {
    throw CaseError("root bus " + std::to_string(net.root_bus) +
                    " is not declared");
  }

  std::map<int, int> parent;
  for (const auto& br : net.branches) {
    if (!ids.contains(br.from) || !ids.contains(br.to)) {
      throw CaseError("branch " + br.label() + " references unknown bus");
    }
    if (br.from == br.to) throw CaseError("branch " + br.label() + " is a loop");
    if (br.r_pu < 0.0 || br.x_pu < 0.0) {
      throw CaseError("branch " + br.label() + ": negative impedance");
    }
    if (!(br.i_max_amps > 0.0)) {
      throw CaseError("branch " + br.label() + ": ampacity must be positive");
    }
    if (br.to == net.root_bus) {
      throw CaseError("branch " + br.label() +
                      " points into the root; orient branches away from it");
    }
    if (!parent.emplace(br.to, br.from).second) {
      throw CaseError("network is not radial: bus " + std::to_string(br.to) +
                      " has two feeding branches");
    }
  }
  if (net.branches.size() + 1 != net.buses.size()) {
    throw CaseError("network is not radial: " +
                    std::to_string(net.buses.size()) + " buses but " +
                    std::to_string(net.branches.size()) + " branches");
  }
  // Every bus must trace back to the root without revisiting a bus.
  for (int id : ids) {
    std::set<int> seen;
    int cur = id;
    while (cur != net.root_bus) {
      if (!seen.insert(cur).second) {
        throw CaseError("network is not radial: cycle through bus " +
                        std::to_string(cur));
      }
      auto it = parent.find(cur);
      if (it == parent.end()) {
        throw CaseError("bus " + std::to_string(id) +
                        " is not connected to the root");
      }
      cur = it->second;
    }
  }

  std::set<int> load_buses;
  for (const auto& l : net.loads) {
    if (!ids.contains(l.bus)) {
      throw CaseError("load at unknown bus " + std::to_string(l.bus));
    }
    if (!load_buses.insert(l.bus).second) {
      throw CaseError("more than one load at bus " + std::to_string(l.bus));
    }
  }
  for (const auto& g : net.generators) {
    if (!ids.contains(g.bus)) {
      throw CaseError("generator at unknown bus " + std::to_string(g.bus));
    }
    if (g.p_max_pu < 0.0 || g.q_min_pu > g.q_max_pu) {
      throw CaseError("generator at bus " + std::to_string(g.bus) +
                      ": invalid limits");
    }
  }
}

namespace {

class LineReader {
 public:
  LineReader(std::size_t line_no, std::string_view line)
      : line_no_(line_no) {
    std::istringstream ss{std::string(line)};
    std::string w;
    while (ss >> w) words_.push_back(w);
  }

  std::size_t size() const { return words_.size(); }
  const std::string& word(std::size_t i) const { return words_.at(i); }

  double real(std::size_t i) const {
    require(i + 1);
    double v = 0.0;
    const auto& w = words_[i];
    auto res = std::from_chars(w.data(), w.data() + w.size(), v);
    if (res.ec != std::errc() || res.ptr != w.data() + w.size() ||
        !std::isfinite(v)) {
      fail("expected a number, got '" + w + "'");
    }
    return v;
  }

  int integer(std::size_t i) const {
    require(i + 1);
    int v = 0;
    const auto& w = words_[i];
    auto res = std::from_chars(w.data(), w.data() + w.size(), v);
    if (res.ec != std::errc() || res.ptr != w.data() + w.size()) {
      fail("expected an integer, got '" + w + "'");
    }
    return v;
  }

  void require(std::size_t n) const {
    if (words_.size() < n) {
      fail("expected " + std::to_string(n) + " fields, got " +
           std::to_string(words_.size()));
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw CaseError("line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::size_t line_no_;
  std::vector<std::string> words_;
};

bool parse_switch(const LineReader& f, std::size_t i) {
  const auto& w = f.word(i);
  if (w == "on" || w == "true" || w == "1") return true;
  if (w == "off" || w == "false" || w == "0") return false;
  f.fail("expected on/off, got '" + w + "'");
}

}  // namespace

NetworkCase parse_case(std::string_view text) {
  NetworkCase net;
  std::string section;
  bool branch_units_ohm = false;
  bool units_seen = false;
  bool have_s_base = false;
  bool have_v_base = false;
  struct RawBranch {
    LineReader fields;
  };
  std::vector<RawBranch> raw_branches;

  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    LineReader f(line_no, raw);
    if (f.size() == 0) continue;
    const std::string& head = f.word(0);
    if (head.front() == '[') {
      if (head.back() != ']' || f.size() != 1) f.fail("malformed section");
      section = head.substr(1, head.size() - 2);
      static const std::set<std::string> known{
          "bases", "scenario", "buses", "branches", "loads", "generators"};
      if (!known.contains(section)) f.fail("unknown section [" + section + "]");
      continue;
    }

    if (section.empty()) {
      if (head == "name" && f.size() == 2) {
        net.name = f.word(1);
        continue;
      }
      f.fail("content before the first section");
    } else if (section == "bases") {
      f.require(2);
      if (head == "s_base_mva") {
        net.bases.s_base_mva = f.real(1);
        have_s_base = true;
      } else if (head == "v_base_kv") {
        net.bases.v_base_kv = f.real(1);
        have_v_base = true;
      } else {
        f.fail("unknown base '" + head + "'");
      }
    } else if (section == "scenario") {
      f.require(2);
      if (head == "root_bus") {
        net.root_bus = f.integer(1);
      } else if (head == "root_supply") {
        net.root_supply = parse_switch(f, 1);
      } else {
        f.fail("unknown scenario key '" + head + "'");
      }
    } else if (section == "buses") {
      Bus bus{f.integer(0), std::nullopt, std::nullopt};
      if (f.size() == 3) {
        bus.v2_min = f.real(1);
        bus.v2_max = f.real(2);
      } else if (f.size() != 1) {
        f.fail("bus rows are 'id' or 'id v2_min v2_max'");
      }
      net.buses.push_back(bus);
    } else if (section == "branches") {
      if (head == "units") {
        f.require(2);
        if (f.word(1) == "ohm") {
          branch_units_ohm = true;
        } else if (f.word(1) == "pu") {
          branch_units_ohm = false;
        } else {
          f.fail("units must be 'ohm' or 'pu'");
        }
        units_seen = true;
        continue;
      }
      f.require(5);
      raw_branches.push_back({f});
    } else if (section == "loads") {
      f.require(3);
      net.loads.push_back({f.integer(0), f.real(1), f.real(2)});
    } else if (section == "generators") {
      f.require(3);
      Generator g{f.integer(0), f.real(1), f.real(2), 0.0};
      if (f.size() >= 4) g.q_min_pu = f.real(3);
      net.generators.push_back(g);
    }
  }

  if (!have_s_base || !have_v_base) {
    throw CaseError("missing s_base_mva or v_base_kv in [bases]");
  }
  if (!raw_branches.empty() && !units_seen) {
    throw CaseError("[branches] needs a 'units ohm' or 'units pu' line");
  }
  if (!(net.bases.s_base_mva > 0.0) || !(net.bases.v_base_kv > 0.0)) {
    throw CaseError("bases must be positive");
  }
  const double z_base = branch_units_ohm ? net.bases.impedance_base_ohm() : 1.0;
  for (const auto& rb : raw_branches) {
    const auto& f = rb.fields;
    net.branches.push_back({f.integer(0), f.integer(1), f.real(2) / z_base,
                            f.real(3) / z_base, f.real(4)});
  }
  validate_case(net);
  return net;
}

NetworkCase load_case(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CaseError("cannot open case file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  NetworkCase net = parse_case(ss.str());
  if (net.name.empty()) net.name = path.stem().string();
  return net;
}

}  // namespace sopwl
