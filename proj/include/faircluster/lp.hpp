#pragma once

#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace faircluster::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// A value within this distance of 0 or 1 counts as integral.
inline constexpr double kIntegralityTol = 1e-6;

struct Term {
  int var;
  double coef;
};

enum class Sense { kLessEqual, kGreaterEqual, kEqual };

struct Row {
  std::vector<Term> terms;
  double lower;
  double upper;
  std::string name;
};

struct Variable {
  double lower;
  double upper;
  double cost;
  std::string name;
};

// Sparse linear program: minimize c'x subject to lower <= Ax <= upper and
// variable bounds. Rows are stored as ranges; the Sense helpers cover the
// usual one-sided forms.
class LpModel {
 public:
  int add_variable(double lower, double upper, double cost, std::string name = {});
  int add_row(std::vector<Term> terms, double lower, double upper, std::string name = {});
  int add_constraint(std::vector<Term> terms, Sense sense, double rhs, std::string name = {});

  void set_cost(int var, double cost);
  void set_objective_offset(double offset) { offset_ = offset; }

  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  const Variable& variable(int j) const { return vars_[j]; }
  const Row& row(int i) const { return rows_[i]; }
  std::span<const Variable> variables() const { return vars_; }
  std::span<const Row> rows() const { return rows_; }
  double objective_offset() const { return offset_; }

  // Throws DomainError on out-of-range indices, non-finite coefficients or
  // crossed bounds.
  void validate() const;

 private:
  std::vector<Variable> vars_;
  std::vector<Row> rows_;
  double offset_ = 0.0;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

const char* to_string(LpStatus status);

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  std::vector<double> values;
  double objective = 0.0;
  // True when `values` is a basic solution (a vertex of the feasible region).
  bool is_basic = false;
  int iterations = 0;
  // Phase-1 residual when infeasible.
  double infeasibility = 0.0;
};

struct SolverOptions {
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  int max_iterations = 1'000'000;
  int refactor_interval = 64;
  // Phase-2 objective is dropped and only feasibility is established.
  bool feasibility_only = false;
};

// Bounded primal simplex on a sparse LU factorized basis. Always returns a
// basic solution when the status is kOptimal.
LpSolution solve_lp(const LpModel& model, const SolverOptions& options = {});

// True iff the constraint system admits a feasible point.
bool check_feasible(const LpModel& model, const SolverOptions& options = {});

// Largest violation of any row or bound by `values`.
double max_violation(const LpModel& model, std::span<const double> values);

int count_fractional(std::span<const double> values, double tol = kIntegralityTol);

// Fixed-format MPS dump for cross-checking against external solvers.
void write_mps(const LpModel& model, std::ostream& out, const std::string& name = "FAIRLP");

}  // namespace faircluster::lp
