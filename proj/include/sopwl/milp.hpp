#pragma once

// Solver-agnostic mixed-integer linear program, LP-text export and
// solution import.

#include <Eigen/SparseCore>

#include <compare>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sopwl {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Feasibility tolerance used for bound and row re-checks.
inline constexpr double kFeasTol = 1e-6;

struct VarId {
  std::size_t index = 0;
  auto operator<=>(const VarId&) const = default;
};

enum class VarKind { Continuous, Binary };

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  VarKind kind = VarKind::Continuous;
};

struct Term {
  VarId var;
  double coef = 0.0;
};

/// Sum of coefficient * variable. Repeated variables are merged so a built
/// expression never holds duplicates.
class LinearExpr {
 public:
  LinearExpr() = default;
  LinearExpr(std::initializer_list<Term> terms);

  LinearExpr& add(VarId var, double coef);
  LinearExpr& add(const LinearExpr& other, double scale = 1.0);

  const std::vector<Term>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  /// Value at a dense assignment indexed by VarId.
  double evaluate(const Eigen::VectorXd& x) const;

 private:
  std::vector<Term> terms_;
  std::unordered_map<std::size_t, std::size_t> slot_;
};

enum class Sense { LessEqual, Equal, GreaterEqual };

struct LinearConstraint {
  std::vector<Term> terms;
  Sense sense = Sense::LessEqual;
  double rhs = 0.0;
  std::string tag;
};

enum class ObjectiveSense { Minimize, Maximize };

struct Objective {
  ObjectiveSense sense = ObjectiveSense::Maximize;
  std::vector<Term> terms;
};

class MilpModel {
 public:
  VarId add_variable(std::string name, double lower, double upper,
                     VarKind kind = VarKind::Continuous);
  VarId add_binary(std::string name) {
    return add_variable(std::move(name), 0.0, 1.0, VarKind::Binary);
  }

  /// Tags must be unique; they double as LP row names.
  std::size_t add_constraint(const LinearExpr& expr, Sense sense, double rhs,
                             std::string tag);

  void set_objective(ObjectiveSense sense, const LinearExpr& expr);

  /// After freezing, every mutator throws ModelError.
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<LinearConstraint>& constraints() const {
    return constraints_;
  }
  const Objective& objective() const { return objective_; }

  const Variable& variable(VarId id) const { return variables_.at(id.index); }
  std::optional<VarId> find_variable(std::string_view name) const;
  VarId variable_id(std::string_view name) const;
  const LinearConstraint* find_constraint(std::string_view tag) const;
  /// Indices of constraints whose tag starts with `prefix`.
  std::vector<std::size_t> constraints_with_prefix(
      std::string_view prefix) const;

  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_constraints() const { return constraints_.size(); }
  std::size_t count_variables(VarKind kind) const;

  /// Row-major coefficient matrix, one row per constraint.
  Eigen::SparseMatrix<double, Eigen::RowMajor> constraint_matrix() const;

 private:
  void require_mutable(const char* op) const;
  void validate_terms(const std::vector<Term>& terms,
                      std::string_view where) const;

  std::vector<Variable> variables_;
  std::vector<LinearConstraint> constraints_;
  Objective objective_;
  std::unordered_map<std::string, std::size_t> var_index_;
  std::unordered_map<std::string, std::size_t> tag_index_;
  bool frozen_ = false;
};

// ---------------------------------------------------------------------------
// LP text

/// True when `name` can be written as an LP identifier.
bool is_lp_safe_name(std::string_view name);

/// Row name used for a constraint tag (':' becomes '.', '-' becomes '_').
std::string lp_row_name(std::string_view tag);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

/// Deterministic LP text in declaration order. The model must be frozen.
std::string write_lp(const MilpModel& model);

// ---------------------------------------------------------------------------
// Solutions

enum class SolveStatus { Optimal, Feasible, Infeasible, Unbounded, Error };

std::string_view to_string(SolveStatus status);
std::optional<SolveStatus> parse_status(std::string_view token);

struct Solution {
  SolveStatus status = SolveStatus::Error;
  double objective_value = 0.0;
  std::unordered_map<std::string, double> values;
  /// Model variables absent from the solution text; they were set to 0.
  std::vector<std::string> missing;

  bool has_values() const {
    return status == SolveStatus::Optimal || status == SolveStatus::Feasible;
  }
  bool incomplete() const { return !missing.empty(); }
  double value(std::string_view name) const;
  /// Dense assignment indexed by VarId.
  Eigen::VectorXd to_vector(const MilpModel& model) const;
};

/// Reads `status` / `obj <value>` / `name value` lines.
Solution parse_solution(std::string_view text, const MilpModel& model,
                        double bound_tol = kFeasTol);

/// Inverse of parse_solution, variables in declaration order.
std::string write_solution(const Solution& solution, const MilpModel& model);

struct Violation {
  std::string tag;  // constraint tag, or "bound:<var>" / "integrality:<var>"
  double amount = 0.0;
};

/// Substitutes the solution into every bound, integrality requirement and
/// row; returns everything violated by more than `tol`.
std::vector<Violation> check_solution(const MilpModel& model,
                                      const Solution& solution,
                                      double tol = kFeasTol);
std::vector<Violation> check_assignment(const MilpModel& model,
                                        const Eigen::VectorXd& x,
                                        double tol = kFeasTol);

}  // namespace sopwl
