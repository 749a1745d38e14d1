#include "sopwl/milp.hpp"

#include "sopwl/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace sopwl {

// ---------------------------------------------------------------------------
// LinearExpr

LinearExpr::LinearExpr(std::initializer_list<Term> terms) {
  for (const auto& t : terms) add(t.var, t.coef);
}

LinearExpr& LinearExpr::add(VarId var, double coef) {
  auto [it, inserted] = slot_.try_emplace(var.index, terms_.size());
  if (inserted) {
    terms_.push_back({var, coef});
  } else {
    terms_[it->second].coef += coef;
  }
  return *this;
}

LinearExpr& LinearExpr::add(const LinearExpr& other, double scale) {
  for (const auto& t : other.terms()) add(t.var, scale * t.coef);
  return *this;
}

double LinearExpr::evaluate(const Eigen::VectorXd& x) const {
  double v = 0.0;
  for (const auto& t : terms_) v += t.coef * x[static_cast<Eigen::Index>(t.var.index)];
  return v;
}

// ---------------------------------------------------------------------------
// MilpModel

void MilpModel::require_mutable(const char* op) const {
  if (frozen_) throw ModelError(std::string(op) + ": model is frozen");
}

VarId MilpModel::add_variable(std::string name, double lower, double upper,
                              VarKind kind) {
  require_mutable("add_variable");
  if (name.empty()) throw ModelError("add_variable: empty name");
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw ModelError("add_variable: invalid bounds for '" + name + "'");
  }
  if (kind == VarKind::Binary && (lower < 0.0 || upper > 1.0)) {
    throw ModelError("add_variable: binary '" + name +
                     "' bounds must lie within [0, 1]");
  }
  if (var_index_.contains(name)) {
    throw ModelError("add_variable: duplicate name '" + name + "'");
  }
  VarId id{variables_.size()};
  var_index_.emplace(name, id.index);
  variables_.push_back({std::move(name), lower, upper, kind});
  return id;
}

void MilpModel::validate_terms(const std::vector<Term>& terms,
                               std::string_view where) const {
  for (const auto& t : terms) {
    if (t.var.index >= variables_.size()) {
      throw ModelError(std::string(where) +
                       ": dangling variable reference #" +
                       std::to_string(t.var.index));
    }
    if (!std::isfinite(t.coef)) {
      throw ModelError(std::string(where) + ": non-finite coefficient on '" +
                       variables_[t.var.index].name + "'");
    }
  }
}

std::size_t MilpModel::add_constraint(const LinearExpr& expr, Sense sense,
                                      double rhs, std::string tag) {
  require_mutable("add_constraint");
  if (tag.empty()) throw ModelError("add_constraint: empty tag");
  if (expr.empty()) {
    throw ModelError("add_constraint: '" + tag + "' has no terms");
  }
  if (!std::isfinite(rhs)) {
    throw ModelError("add_constraint: '" + tag + "' has non-finite rhs");
  }
  validate_terms(expr.terms(), "add_constraint '" + tag + "'");
  if (tag_index_.contains(tag)) {
    throw ModelError("add_constraint: duplicate tag '" + tag + "'");
  }
  const std::size_t row = constraints_.size();
  tag_index_.emplace(tag, row);
  constraints_.push_back({expr.terms(), sense, rhs, std::move(tag)});
  return row;
}

void MilpModel::set_objective(ObjectiveSense sense, const LinearExpr& expr) {
  require_mutable("set_objective");
  validate_terms(expr.terms(), "set_objective");
  objective_ = {sense, expr.terms()};
}

std::optional<VarId> MilpModel::find_variable(std::string_view name) const {
  auto it = var_index_.find(std::string(name));
  if (it == var_index_.end()) return std::nullopt;
  return VarId{it->second};
}

VarId MilpModel::variable_id(std::string_view name) const {
  auto id = find_variable(name);
  if (!id) throw ModelError("unknown variable '" + std::string(name) + "'");
  return *id;
}

const LinearConstraint* MilpModel::find_constraint(std::string_view tag) const {
  auto it = tag_index_.find(std::string(tag));
  return it == tag_index_.end() ? nullptr : &constraints_[it->second];
}

std::vector<std::size_t> MilpModel::constraints_with_prefix(
    std::string_view prefix) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    if (std::string_view(constraints_[i].tag).starts_with(prefix)) {
      rows.push_back(i);
    }
  }
  return rows;
}

std::size_t MilpModel::count_variables(VarKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(variables_.begin(), variables_.end(),
                    [kind](const Variable& v) { return v.kind == kind; }));
}

Eigen::SparseMatrix<double, Eigen::RowMajor> MilpModel::constraint_matrix()
    const {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t r = 0; r < constraints_.size(); ++r) {
    for (const auto& t : constraints_[r].terms) {
      triplets.emplace_back(static_cast<int>(r),
                            static_cast<int>(t.var.index), t.coef);
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> a(
      static_cast<Eigen::Index>(constraints_.size()),
      static_cast<Eigen::Index>(variables_.size()));
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

// ---------------------------------------------------------------------------
// LP text

namespace {

constexpr std::string_view kLpPunct = "!\"#$%&()/,.;?@_`'{}|~";
constexpr std::size_t kWrapColumn = 240;

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string_view sense_token(Sense s) {
  switch (s) {
    case Sense::LessEqual: return "<=";
    case Sense::Equal: return "=";
    case Sense::GreaterEqual: return ">=";
  }
  return "?";
}

std::string checked_number(double v, std::string_view where) {
  if (!std::isfinite(v)) {
    throw SerializationError("write_lp: non-finite number in " +
                             std::string(where));
  }
  return format_number(v);
}

// Appends terms to `out`, wrapping long rows onto continuation lines.
void append_terms(std::string& out, std::size_t line_start,
                  const std::vector<Term>& terms, const MilpModel& model,
                  std::string_view where) {
  bool first = true;
  for (const auto& t : terms) {
    const std::string& name = model.variable(t.var).name;
    std::string piece;
    const double mag = std::abs(t.coef);
    const bool negative = std::signbit(t.coef) && t.coef != 0.0;
    if (first) {
      if (negative) piece += "- ";
    } else {
      piece += negative ? " - " : " + ";
    }
    if (mag != 1.0) {
      piece += checked_number(mag, where);
      piece += ' ';
    }
    piece += name;
    if (out.size() - line_start + piece.size() > kWrapColumn) {
      out += "\n  ";
      line_start = out.size() - 2;
      if (piece.front() == ' ') piece.erase(0, 1);
    }
    out += piece;
    first = false;
  }
}

}  // namespace

bool is_lp_safe_name(std::string_view name) {
  if (name.empty() || name.size() > 255) return false;
  for (char c : name) {
    const bool alnum = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                       is_digit(c);
    if (!alnum && kLpPunct.find(c) == std::string_view::npos) return false;
  }
  if (is_digit(name[0]) || name[0] == '.') return false;
  // "e5" or "E" alone would read as an exponent.
  if ((name[0] == 'e' || name[0] == 'E') &&
      (name.size() == 1 || is_digit(name[1]) || name[1] == 'e' ||
       name[1] == 'E')) {
    return false;
  }
  return true;
}

std::string lp_row_name(std::string_view tag) {
  std::string name(tag);
  std::replace(name.begin(), name.end(), ':', '.');
  std::replace(name.begin(), name.end(), '-', '_');
  return name;
}

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string write_lp(const MilpModel& model) {
  if (!model.frozen()) {
    throw SerializationError("write_lp: model must be frozen");
  }
  for (const auto& v : model.variables()) {
    if (!is_lp_safe_name(v.name)) {
      throw SerializationError("write_lp: variable name '" + v.name +
                               "' is not LP-safe");
    }
  }

  std::string out;
  out += "\\ sopwl MILP\n";
  out += model.objective().sense == ObjectiveSense::Maximize ? "Maximize\n"
                                                             : "Minimize\n";
  {
    const std::size_t start = out.size();
    out += " obj:";
    if (!model.objective().terms.empty()) {
      out += ' ';
      append_terms(out, start, model.objective().terms, model, "objective");
    } else if (model.num_variables() > 0) {
      out += " 0 " + model.variables().front().name;
    }
    out += '\n';
  }

  out += "Subject To\n";
  for (const auto& c : model.constraints()) {
    const std::string row = lp_row_name(c.tag);
    if (!is_lp_safe_name(row)) {
      throw SerializationError("write_lp: constraint tag '" + c.tag +
                               "' is not LP-safe");
    }
    const std::size_t start = out.size();
    out += ' ';
    out += row;
    out += ": ";
    append_terms(out, start, c.terms, model, c.tag);
    out += ' ';
    out += sense_token(c.sense);
    out += ' ';
    out += checked_number(c.rhs, c.tag);
    out += '\n';
  }

  out += "Bounds\n";
  for (const auto& v : model.variables()) {
    if (v.kind == VarKind::Binary && v.lower == 0.0 && v.upper == 1.0) {
      continue;
    }
    const bool lo_inf = std::isinf(v.lower);
    const bool hi_inf = std::isinf(v.upper);
    out += ' ';
    if (lo_inf && hi_inf) {
      out += v.name + " free";
    } else if (v.lower == v.upper) {
      out += v.name + " = " + format_number(v.lower);
    } else if (hi_inf) {
      out += v.name + " >= " + format_number(v.lower);
    } else if (lo_inf) {
      out += "-inf <= " + v.name + " <= " + format_number(v.upper);
    } else {
      out += format_number(v.lower) + " <= " + v.name +
             " <= " + format_number(v.upper);
    }
    out += '\n';
  }

  if (model.count_variables(VarKind::Binary) > 0) {
    out += "Binaries\n";
    for (const auto& v : model.variables()) {
      if (v.kind == VarKind::Binary) out += ' ' + v.name + '\n';
    }
  }
  out += "End\n";
  return out;
}

// ---------------------------------------------------------------------------
// Solutions

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Feasible: return "feasible";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::Error: return "error";
  }
  return "error";
}

std::optional<SolveStatus> parse_status(std::string_view token) {
  for (auto s : {SolveStatus::Optimal, SolveStatus::Feasible,
                 SolveStatus::Infeasible, SolveStatus::Unbounded,
                 SolveStatus::Error}) {
    if (token == to_string(s)) return s;
  }
  return std::nullopt;
}

double Solution::value(std::string_view name) const {
  auto it = values.find(std::string(name));
  if (it == values.end()) {
    throw SolutionParseError("solution has no value for '" +
                             std::string(name) + "'");
  }
  return it->second;
}

Eigen::VectorXd Solution::to_vector(const MilpModel& model) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(model.num_variables()));
  for (std::size_t i = 0; i < model.num_variables(); ++i) {
    auto it = values.find(model.variables()[i].name);
    if (it != values.end()) x[static_cast<Eigen::Index>(i)] = it->second;
  }
  return x;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(std::string_view token, std::size_t line_no) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && token.front() == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || std::isnan(v)) {
    throw SolutionParseError("line " + std::to_string(line_no) +
                             ": unparseable value '" + std::string(token) +
                             "'");
  }
  return v;
}

// Splits "a b" into two whitespace-separated fields.
std::pair<std::string_view, std::string_view> split_pair(std::string_view s,
                                                         std::size_t line_no) {
  const auto sep = s.find_first_of(" \t");
  if (sep == std::string_view::npos) {
    throw SolutionParseError("line " + std::to_string(line_no) +
                             ": expected '<name> <value>'");
  }
  return {s.substr(0, sep), trim(s.substr(sep))};
}

}  // namespace

Solution parse_solution(std::string_view text, const MilpModel& model,
                        double bound_tol) {
  Solution sol;
  bool have_status = false;
  bool have_obj = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    if (!have_status) {
      auto st = parse_status(line);
      if (!st) {
        throw SolutionParseError("unknown status token '" +
                                 std::string(line) + "'");
      }
      sol.status = *st;
      have_status = true;
      continue;
    }
    auto [key, value] = split_pair(line, line_no);
    if (!have_obj && key == "obj") {
      sol.objective_value = parse_real(value, line_no);
      have_obj = true;
      continue;
    }
    if (!model.find_variable(key)) {
      throw SolutionParseError("line " + std::to_string(line_no) +
                               ": unknown variable '" + std::string(key) +
                               "'");
    }
    sol.values[std::string(key)] = parse_real(value, line_no);
  }
  if (!have_status) throw SolutionParseError("empty solution text");

  if (!sol.has_values()) {
    sol.values.clear();
    return sol;
  }
  for (const auto& v : model.variables()) {
    auto it = sol.values.find(v.name);
    if (it == sol.values.end()) {
      sol.missing.push_back(v.name);
      sol.values.emplace(v.name, 0.0);
      continue;
    }
    if (it->second < v.lower - bound_tol || it->second > v.upper + bound_tol) {
      throw BoundViolation("value " + format_number(it->second) + " of '" +
                           v.name + "' outside [" + format_number(v.lower) +
                           ", " + format_number(v.upper) + "]");
    }
  }
  return sol;
}

std::string write_solution(const Solution& solution, const MilpModel& model) {
  std::string out(to_string(solution.status));
  out += '\n';
  if (!solution.has_values()) return out;
  out += "obj " + format_number(solution.objective_value) + '\n';
  for (const auto& v : model.variables()) {
    auto it = solution.values.find(v.name);
    if (it == solution.values.end()) continue;
    out += v.name + ' ' + format_number(it->second) + '\n';
  }
  return out;
}

std::vector<Violation> check_assignment(const MilpModel& model,
                                        const Eigen::VectorXd& x, double tol) {
  std::vector<Violation> out;
  const auto& vars = model.variables();
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const double xi = x[static_cast<Eigen::Index>(i)];
    const double over = std::max(vars[i].lower - xi, xi - vars[i].upper);
    if (over > tol) out.push_back({"bound:" + vars[i].name, over});
    if (vars[i].kind == VarKind::Binary) {
      const double frac = std::abs(xi - std::round(xi));
      if (frac > tol) out.push_back({"integrality:" + vars[i].name, frac});
    }
  }

  const Eigen::VectorXd activity = model.constraint_matrix() * x;
  const auto& rows = model.constraints();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double lhs = activity[static_cast<Eigen::Index>(r)];
    double amount = 0.0;
    switch (rows[r].sense) {
      case Sense::LessEqual: amount = lhs - rows[r].rhs; break;
      case Sense::GreaterEqual: amount = rows[r].rhs - lhs; break;
      case Sense::Equal: amount = std::abs(lhs - rows[r].rhs); break;
    }
    if (amount > tol) out.push_back({rows[r].tag, amount});
  }
  return out;
}

std::vector<Violation> check_solution(const MilpModel& model,
                                      const Solution& solution, double tol) {
  if (!solution.has_values()) return {};
  return check_assignment(model, solution.to_vector(model), tol);
}

}  // namespace sopwl
