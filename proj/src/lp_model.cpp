#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "faircluster/errors.hpp"
#include "faircluster/lp.hpp"

namespace faircluster::lp {

int LpModel::add_variable(double lower, double upper, double cost, std::string name) {
  vars_.push_back({lower, upper, cost, std::move(name)});
  return num_variables() - 1;
}

int LpModel::add_row(std::vector<Term> terms, double lower, double upper, std::string name) {
  rows_.push_back({std::move(terms), lower, upper, std::move(name)});
  return num_rows() - 1;
}

int LpModel::add_constraint(std::vector<Term> terms, Sense sense, double rhs, std::string name) {
  switch (sense) {
    case Sense::kLessEqual:
      return add_row(std::move(terms), -kInf, rhs, std::move(name));
    case Sense::kGreaterEqual:
      return add_row(std::move(terms), rhs, kInf, std::move(name));
    case Sense::kEqual:
      break;
  }
  return add_row(std::move(terms), rhs, rhs, std::move(name));
}

void LpModel::set_cost(int var, double cost) {
  if (var < 0 || var >= num_variables()) throw DomainError("set_cost: unknown variable");
  vars_[var].cost = cost;
}

void LpModel::validate() const {
  for (int j = 0; j < num_variables(); ++j) {
    const Variable& v = vars_[j];
    if (!std::isfinite(v.cost) || std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper ||
        v.lower == kInf || v.upper == -kInf) {
      throw DomainError("LP variable " + std::to_string(j) + " has invalid bounds or cost");
    }
  }
  for (int i = 0; i < num_rows(); ++i) {
    const Row& r = rows_[i];
    if (std::isnan(r.lower) || std::isnan(r.upper) || r.lower > r.upper || r.lower == kInf ||
        r.upper == -kInf) {
      throw DomainError("LP row " + std::to_string(i) + " has crossed bounds");
    }
    for (const Term& t : r.terms) {
      if (t.var < 0 || t.var >= num_variables()) {
        throw DomainError("LP row " + std::to_string(i) + " references undeclared variable " +
                          std::to_string(t.var));
      }
      if (!std::isfinite(t.coef)) {
        throw DomainError("LP row " + std::to_string(i) + " has a non-finite coefficient");
      }
    }
  }
}

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal:
      return "OPTIMAL";
    case LpStatus::kInfeasible:
      return "INFEASIBLE";
    case LpStatus::kUnbounded:
      return "UNBOUNDED";
  }
  return "?";
}

double max_violation(const LpModel& model, std::span<const double> values) {
  double worst = 0.0;
  for (int j = 0; j < model.num_variables(); ++j) {
    const Variable& v = model.variable(j);
    worst = std::max({worst, v.lower - values[j], values[j] - v.upper});
  }
  for (const Row& r : model.rows()) {
    double activity = 0.0;
    for (const Term& t : r.terms) activity += t.coef * values[t.var];
    worst = std::max({worst, r.lower - activity, activity - r.upper});
  }
  return worst;
}

int count_fractional(std::span<const double> values, double tol) {
  int count = 0;
  for (double x : values) {
    if (x > tol && x < 1.0 - tol) ++count;
  }
  return count;
}

namespace {

std::string mps_name(const std::string& given, char prefix, int index) {
  std::string name = given.empty() ? prefix + std::to_string(index) : given;
  for (char& c : name) {
    if (c == ' ') c = '_';
  }
  if (name.size() > 8) name = prefix + std::to_string(index);
  return name;
}

std::string mps_number(double x) {
  std::ostringstream s;
  s << std::setprecision(12) << x;
  std::string out = s.str();
  if (out.size() > 12) {
    s.str({});
    s << std::setprecision(6) << x;
    out = s.str();
  }
  return out;
}

void field_line(std::ostream& out, const std::string& f1, const std::string& f2,
                const std::string& f3, const std::string& f4) {
  // Fixed MPS columns: 2-3, 5-12, 15-22, 25-36.
  out << ' ' << std::left << std::setw(2) << f1 << ' ' << std::setw(8) << f2 << "  "
      << std::setw(8) << f3 << "  " << std::setw(12) << f4 << '\n';
}

}  // namespace

void write_mps(const LpModel& model, std::ostream& out, const std::string& name) {
  out << "NAME          " << name << '\n';
  out << "ROWS\n";
  out << " N  COST\n";
  std::vector<std::string> row_names(model.num_rows());
  for (int i = 0; i < model.num_rows(); ++i) {
    const Row& r = model.row(i);
    row_names[i] = mps_name(r.name, 'R', i);
    const char* type = "E";
    if (r.lower == -kInf && r.upper == kInf) {
      type = "N";
    } else if (r.lower == -kInf) {
      type = "L";
    } else if (r.upper == kInf || r.lower != r.upper) {
      type = "G";
    }
    out << ' ' << std::left << std::setw(2) << type << ' ' << row_names[i] << '\n';
  }

  std::vector<std::vector<std::pair<int, double>>> columns(model.num_variables());
  for (int i = 0; i < model.num_rows(); ++i) {
    for (const Term& t : model.row(i).terms) columns[t.var].emplace_back(i, t.coef);
  }
  out << "COLUMNS\n";
  std::vector<std::string> col_names(model.num_variables());
  for (int j = 0; j < model.num_variables(); ++j) {
    col_names[j] = mps_name(model.variable(j).name, 'X', j);
    if (model.variable(j).cost != 0.0) {
      field_line(out, "", col_names[j], "COST", mps_number(model.variable(j).cost));
    }
    for (auto [i, coef] : columns[j]) field_line(out, "", col_names[j], row_names[i], mps_number(coef));
  }

  out << "RHS\n";
  for (int i = 0; i < model.num_rows(); ++i) {
    const Row& r = model.row(i);
    double rhs = r.lower == -kInf ? r.upper : r.lower;
    if (std::isfinite(rhs) && rhs != 0.0) field_line(out, "", "RHS", row_names[i], mps_number(rhs));
  }
  if (model.objective_offset() != 0.0) {
    field_line(out, "", "RHS", "COST", mps_number(-model.objective_offset()));
  }

  bool any_range = false;
  for (int i = 0; i < model.num_rows(); ++i) {
    const Row& r = model.row(i);
    if (std::isfinite(r.lower) && std::isfinite(r.upper) && r.lower != r.upper) {
      if (!any_range) out << "RANGES\n";
      any_range = true;
      field_line(out, "", "RNG", row_names[i], mps_number(r.upper - r.lower));
    }
  }

  out << "BOUNDS\n";
  for (int j = 0; j < model.num_variables(); ++j) {
    const Variable& v = model.variable(j);
    if (v.lower == v.upper) {
      field_line(out, "FX", "BND", col_names[j], mps_number(v.lower));
      continue;
    }
    if (v.lower == -kInf && v.upper == kInf) {
      field_line(out, "FR", "BND", col_names[j], "");
      continue;
    }
    if (v.lower == -kInf) {
      field_line(out, "MI", "BND", col_names[j], "");
    } else if (v.lower != 0.0) {
      field_line(out, "LO", "BND", col_names[j], mps_number(v.lower));
    }
    if (v.upper != kInf) field_line(out, "UP", "BND", col_names[j], mps_number(v.upper));
  }
  out << "ENDATA\n";
}

}  // namespace faircluster::lp
