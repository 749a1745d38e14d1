#include "sopwl/validation.hpp"

#include "sopwl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace sopwl {

FillingStated extract_filling(const Solution& solution, const MilpModel& model,
                              const PwlBlockHandle& block) {
  const auto& grid = block.grid;
  VectorX<double> d(grid.num_segments());
  for (int l = 0; l < grid.num_segments(); ++l) {
    const auto& name = model.variable(block.deltas[static_cast<std::size_t>(l)]).name;
    double v = solution.value(name);
    if (v < -kFeasTol || v > grid.seg_width() + kFeasTol) {
      throw std::invalid_argument("extract_filling: '" + name +
                                  "' outside [0, seg_width]");
    }
    d[l] = std::clamp(v, 0.0, grid.seg_width());
  }
  return FillingStated(grid, std::move(d), kFeasTol);
}

double solved_eso_tol(const PwlBlockHandle& block) {
  return block.epsilon_plus + kFeasTol;
}

bool ErrorReport::all_eso_ok() const {
  return std::all_of(records.begin(), records.end(), [](const auto& r) {
    return (r.p.negligible || r.p.eso_ok) && (r.q.negligible || r.q.eso_ok);
  });
}

namespace {

FlowErrorRecord flow_record(const Solution& solution, const MilpModel& model,
                            const PwlBlockHandle& block, double floor) {
  FlowErrorRecord rec;
  rec.flow = solution.value(model.variable(block.y).name);
  rec.filling = extract_filling(solution, model, block);
  rec.approx = pwl_value(rec.filling);
  rec.eso_ok = is_eso(rec.filling, solved_eso_tol(block));
  const double y = std::abs(rec.flow);
  rec.negligible = y < floor;
  if (!rec.negligible) rec.error_pct = relative_error(rec.approx, y);
  return rec;
}

ErrorSummary summarize(const std::vector<BranchErrorRecord>& records,
                       FlowErrorRecord BranchErrorRecord::*kind) {
  ErrorSummary s;
  double total = 0.0;
  for (const auto& r : records) {
    const auto& e = r.*kind;
    if (!e.error_pct) continue;
    ++s.reported;
    total += *e.error_pct;
    s.max_pct = std::max(s.max_pct, *e.error_pct);
  }
  if (s.reported > 0) s.mean_pct = total / static_cast<double>(s.reported);
  return s;
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string pct_cell(const FlowErrorRecord& r) {
  return r.error_pct ? fixed(*r.error_pct) : std::string("negligible");
}

std::string eso_cell(const BranchErrorRecord& r) {
  const bool ok = (r.p.negligible || r.p.eso_ok) && (r.q.negligible || r.q.eso_ok);
  return ok ? "true" : "false";
}

}  // namespace

ErrorReport branch_errors(const Solution& solution, const MilpModel& model,
                          const DistflowArtifacts& artifacts,
                          double zero_flow_floor) {
  if (!solution.has_values()) {
    throw std::invalid_argument("branch_errors: solution has no values");
  }
  ErrorReport report;
  report.mode = artifacts.options.mode;
  for (std::size_t b = 0; b < artifacts.branches.size(); ++b) {
    report.records.push_back(
        {artifacts.network.branches[b].label(),
         flow_record(solution, model, artifacts.branches[b].p_block,
                     zero_flow_floor),
         flow_record(solution, model, artifacts.branches[b].q_block,
                     zero_flow_floor)});
  }
  report.p_summary = summarize(report.records, &BranchErrorRecord::p);
  report.q_summary = summarize(report.records, &BranchErrorRecord::q);
  return report;
}

std::string to_delimited(const ErrorReport& report) {
  std::string out = "feeder,mode,E_p,E_q,eso_ok\n";
  for (const auto& r : report.records) {
    out += r.feeder + ',' + std::string(to_string(report.mode)) + ',' +
           pct_cell(r.p) + ',' + pct_cell(r.q) + ',' + eso_cell(r) + '\n';
  }
  return out;
}

std::string to_table(const ErrorReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-8s %-6s %14s %14s %7s\n", "feeder",
                "mode", "E_p (%)", "E_q (%)", "eso_ok");
  out << line;
  for (const auto& r : report.records) {
    std::snprintf(line, sizeof(line), "%-8s %-6s %14s %14s %7s\n",
                  r.feeder.c_str(), std::string(to_string(report.mode)).c_str(),
                  pct_cell(r.p).c_str(), pct_cell(r.q).c_str(),
                  eso_cell(r).c_str());
    out << line;
  }
  out << "E_p over " << report.p_summary.reported
      << " feeders: max " << fixed(report.p_summary.max_pct) << " mean "
      << fixed(report.p_summary.mean_pct) << '\n';
  out << "E_q over " << report.q_summary.reported
      << " feeders: max " << fixed(report.q_summary.max_pct) << " mean "
      << fixed(report.q_summary.mean_pct) << '\n';
  return out.str();
}

std::string filling_dump(const ErrorReport& report) {
  std::string out = "feeder,kind,lambda,delta\n";
  for (const auto& r : report.records) {
    for (const auto* rec : {&r.p, &r.q}) {
      const char* kind = rec == &r.p ? "P" : "Q";
      const auto& d = rec->filling.deltas();
      for (Eigen::Index l = 0; l < d.size(); ++l) {
        out += r.feeder + ',' + kind + ',' + std::to_string(l + 1) + ',' +
               format_number(d[l]) + '\n';
      }
    }
  }
  return out;
}

std::string comparison_table(const ErrorReport& pwl, const ErrorReport& sopwl) {
  if (pwl.records.size() != sopwl.records.size()) {
    throw std::invalid_argument("comparison_table: reports differ in size");
  }
  std::string out =
      "feeder,E_p_pwl,E_p_sopwl,E_q_pwl,E_q_sopwl,eso_ok_pwl,eso_ok_sopwl\n";
  for (std::size_t i = 0; i < pwl.records.size(); ++i) {
    const auto& a = pwl.records[i];
    const auto& b = sopwl.records[i];
    out += a.feeder + ',' + pct_cell(a.p) + ',' + pct_cell(b.p) + ',' +
           pct_cell(a.q) + ',' + pct_cell(b.q) + ',' + eso_cell(a) + ',' +
           eso_cell(b) + '\n';
  }
  return out;
}

UnorderedFeasibility check_unordered_feasibility(
    const PwlGridd& grid, const VectorX<double>& deltas,
    std::optional<double> big_m, std::optional<double> epsilon_plus) {
  if (deltas.size() != grid.num_segments()) {
    throw std::invalid_argument(
        "check_unordered_feasibility: wrong number of segment values");
  }
  UnorderedFeasibility result;
  const double total = deltas.sum();
  for (auto mode : {PwlMode::Pwl, PwlMode::SoPwl}) {
    MilpModel m;
    const VarId y = m.add_variable("y", -kInf, kInf);
    const auto blk = emit_pwl_block(m, y, grid, mode, big_m, epsilon_plus);
    m.freeze();

    Eigen::VectorXd x = Eigen::VectorXd::Zero(
        static_cast<Eigen::Index>(m.num_variables()));
    auto set = [&x](VarId v, double value) {
      x[static_cast<Eigen::Index>(v.index)] = value;
    };
    set(y, total);
    for (int l = 0; l < deltas.size(); ++l) {
      set(blk.deltas[static_cast<std::size_t>(l)], deltas[l]);
    }
    set(blk.y_plus, total);
    set(blk.z_plus, total > 0.0 ? 1.0 : 0.0);
    // x_l = 1 is only ever forced by a nonzero Delta_{l+1}, and only makes
    // the full-segment row harder; the least such assignment is the best.
    for (std::size_t l = 0; l < blk.order.size(); ++l) {
      const bool next_used =
          l + 1 < blk.order.size() && deltas[static_cast<Eigen::Index>(l + 1)] > 0.0;
      set(blk.order[l], next_used ? 1.0 : 0.0);
    }
    auto violations = check_assignment(m, x);
    if (mode == PwlMode::Pwl) {
      result.feasible_in_pwl = violations.empty();
      result.pwl_violations = std::move(violations);
    } else {
      result.feasible_in_sopwl = violations.empty();
      result.sopwl_violations = std::move(violations);
    }
  }
  return result;
}

SweepResult radial_sweep(const NetworkCase& net,
                         const Eigen::VectorXcd& injections, double v_norm,
                         double tol, int max_iterations) {
  validate_case(net);
  const auto n_bus = static_cast<Eigen::Index>(net.buses.size());
  if (injections.size() != n_bus) {
    throw std::invalid_argument("radial_sweep: one injection per bus expected");
  }
  const std::vector<int> order = net.bfs_order();
  std::vector<std::size_t> order_idx;
  std::vector<std::optional<std::size_t>> feeder(net.buses.size());
  for (int id : order) {
    const std::size_t k = net.bus_index(id);
    order_idx.push_back(k);
    feeder[k] = net.parent_branch(id);
  }
  std::vector<std::size_t> from_idx;
  std::vector<std::complex<double>> z;
  for (const auto& br : net.branches) {
    from_idx.push_back(net.bus_index(br.from));
    z.emplace_back(br.r_pu, br.x_pu);
  }

  SweepResult res;
  Eigen::VectorXcd v = Eigen::VectorXcd::Constant(n_bus, v_norm);
  Eigen::VectorXcd current(static_cast<Eigen::Index>(net.branches.size()));
  bool converged = false;
  for (int it = 1; it <= max_iterations; ++it) {
    current.setZero();
    // Backward: accumulate load currents towards the root.
    for (auto k = order_idx.rbegin(); k != order_idx.rend(); ++k) {
      if (!feeder[*k]) continue;
      const auto ki = static_cast<Eigen::Index>(*k);
      const std::complex<double> drawn = std::conj(-injections[ki] / v[ki]);
      const auto b = static_cast<Eigen::Index>(*feeder[*k]);
      current[b] += drawn;
      if (auto up = feeder[from_idx[*feeder[*k]]]) {
        current[static_cast<Eigen::Index>(*up)] += current[b];
      }
    }
    // Forward: voltage drops away from the root.
    Eigen::VectorXcd next = v;
    for (std::size_t k : order_idx) {
      const auto ki = static_cast<Eigen::Index>(k);
      if (!feeder[k]) {
        next[ki] = v_norm;
        continue;
      }
      const std::size_t b = *feeder[k];
      next[ki] = next[static_cast<Eigen::Index>(from_idx[b])] -
                 z[b] * current[static_cast<Eigen::Index>(b)];
    }
    const double change = (next - v).cwiseAbs().maxCoeff();
    v = next;
    res.trace.push_back(change);
    res.iterations = it;
    if (!std::isfinite(change)) break;
    if (change < tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "radial_sweep: no convergence after " << res.iterations
        << " iterations; max |dV| trace:";
    for (double d : res.trace) msg << ' ' << d;
    throw SweepError(msg.str());
  }

  res.voltage = v;
  res.branch_power.resize(static_cast<Eigen::Index>(net.branches.size()));
  for (std::size_t b = 0; b < net.branches.size(); ++b) {
    const auto bi = static_cast<Eigen::Index>(b);
    res.branch_power[bi] =
        v[static_cast<Eigen::Index>(from_idx[b])] * std::conj(current[bi]);
  }
  const auto root = net.bus_index(net.root_bus);
  res.root_injection = -injections[static_cast<Eigen::Index>(root)];
  for (auto b : net.child_branches(net.root_bus)) {
    res.root_injection += res.branch_power[static_cast<Eigen::Index>(b)];
  }
  return res;
}

Eigen::VectorXcd injections_from_solution(const Solution& solution,
                                          const MilpModel& model,
                                          const DistflowArtifacts& art) {
  const auto& net = art.network;
  Eigen::VectorXcd s =
      Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(net.buses.size()));
  auto val = [&](VarId v) { return solution.value(model.variable(v).name); };
  for (std::size_t g = 0; g < net.generators.size(); ++g) {
    const auto k = static_cast<Eigen::Index>(net.bus_index(net.generators[g].bus));
    s[k] += std::complex<double>(val(art.generators[g].p),
                                 val(art.generators[g].q));
  }
  for (std::size_t l = 0; l < net.loads.size(); ++l) {
    if (!art.pickup[l]) continue;
    const double beta = val(*art.pickup[l]);
    const auto k = static_cast<Eigen::Index>(net.bus_index(net.loads[l].bus));
    s[k] -= beta * std::complex<double>(net.loads[l].p_pu, net.loads[l].q_pu);
  }
  return s;
}

Eigen::VectorXd voltage_deviation(const SweepResult& sweep,
                                  const Solution& solution,
                                  const MilpModel& model,
                                  const DistflowArtifacts& art) {
  Eigen::VectorXd dev(sweep.voltage.size());
  for (Eigen::Index k = 0; k < dev.size(); ++k) {
    const double v2 = solution.value(
        model.variable(art.v2[static_cast<std::size_t>(k)]).name);
    dev[k] = std::abs(sweep.voltage[k]) - std::sqrt(std::max(v2, 0.0));
  }
  return dev;
}

std::string sweep_report(const SweepResult& sweep, const NetworkCase& net,
                         const Eigen::VectorXd& deviation) {
  std::string out = "# iterations " + std::to_string(sweep.iterations) + "\n";
  out += "# root_injection " + fixed(sweep.root_injection.real(), 9) + " " +
         fixed(sweep.root_injection.imag(), 9) + "\n";
  out += "bus,v_sweep,deviation\n";
  for (std::size_t k = 0; k < net.buses.size(); ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    out += std::to_string(net.buses[k].id) + ',' +
           fixed(std::abs(sweep.voltage[ki]), 9) + ',' +
           fixed(deviation[ki], 9) + '\n';
  }
  return out;
}

}  // namespace sopwl
