#pragma once

// Radial distribution network data and the case-document reader.

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sopwl {

struct Bases {
  double s_base_mva = 0.0;
  double v_base_kv = 0.0;

  /// S_base / (sqrt(3) * V_base), in amperes.
  double current_base_amps() const;
  /// V_base^2 / S_base, in ohms.
  double impedance_base_ohm() const;
};

struct Bus {
  int id = 0;
  // Squared-voltage bounds in pu^2; unset means "use the build default".
  std::optional<double> v2_min;
  std::optional<double> v2_max;
};

/// Oriented parent -> child. Impedances are per-unit.
struct Branch {
  int from = 0;
  int to = 0;
  double r_pu = 0.0;
  double x_pu = 0.0;
  double i_max_amps = 0.0;

  /// "9-10"
  std::string label() const;
};

struct Load {
  int bus = 0;
  double p_pu = 0.0;
  double q_pu = 0.0;
};

struct Generator {
  int bus = 0;
  double p_max_pu = 0.0;
  double q_max_pu = 0.0;
  double q_min_pu = 0.0;
};

struct NetworkCase {
  std::string name;
  Bases bases;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Load> loads;
  std::vector<Generator> generators;
  int root_bus = 1;
  /// Whether the substation at the root may inject power. Off models an
  /// upstream outage where only local generation can restore load.
  bool root_supply = true;

  std::size_t bus_index(int id) const;
  /// Branch feeding `bus_id`, or nullopt for the root.
  std::optional<std::size_t> parent_branch(int bus_id) const;
  std::vector<std::size_t> child_branches(int bus_id) const;
  /// Bus ids in breadth-first order from the root.
  std::vector<int> bfs_order() const;
  double total_load_p() const;
};

/// Checks bases, impedances and that branches form a tree rooted at
/// `root_bus` with every branch oriented away from the root.
void validate_case(const NetworkCase& net);

/// Parses a sectioned case document ([bases] [scenario] [buses] [branches]
/// [loads] [generators]) and validates it.
NetworkCase parse_case(std::string_view text);
NetworkCase load_case(const std::filesystem::path& path);

}  // namespace sopwl
