#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "faircluster/errors.hpp"
#include "faircluster/lp.hpp"

namespace faircluster::lp {
namespace {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vector = Eigen::VectorXd;

enum class VarState : unsigned char { kBasic, kLower, kUpper, kFree };

// Product-form update of the basis inverse: column `pos` of the identity is
// replaced by the FTRAN'd entering column.
struct Eta {
  int pos;
  double pivot;
  std::vector<std::pair<int, double>> entries;  // i != pos
};

// Bounded primal simplex over the system A x - s = 0, where s holds one
// logical variable per row carrying that row's range. The basis always has
// one column per row, so the working matrix is m x m.
class BoundedSimplex {
 public:
  BoundedSimplex(const LpModel& model, const SolverOptions& options)
      : opt_(options), n_(model.num_variables()) {
    // Free rows never bind; leave them out of the working system.
    for (int i = 0; i < model.num_rows(); ++i) {
      const Row& r = model.row(i);
      if (r.lower == -kInf && r.upper == kInf) continue;
      row_map_.push_back(i);
    }
    m_ = static_cast<int>(row_map_.size());
    const int total = n_ + m_;
    lower_.resize(total);
    upper_.resize(total);
    cost_.assign(total, 0.0);
    for (int j = 0; j < n_; ++j) {
      lower_[j] = model.variable(j).lower;
      upper_[j] = model.variable(j).upper;
      cost_[j] = model.variable(j).cost;
    }
    std::vector<std::vector<std::pair<int, double>>> cols(n_);
    for (int r = 0; r < m_; ++r) {
      const Row& row = model.row(row_map_[r]);
      lower_[n_ + r] = row.lower;
      upper_[n_ + r] = row.upper;
      for (const Term& t : row.terms) {
        if (t.coef != 0.0) cols[t.var].emplace_back(r, t.coef);
      }
    }
    col_start_.assign(n_ + 1, 0);
    for (int j = 0; j < n_; ++j) {
      // Merge duplicate (row, var) terms.
      auto& c = cols[j];
      std::sort(c.begin(), c.end());
      std::vector<std::pair<int, double>> merged;
      for (auto& e : c) {
        if (!merged.empty() && merged.back().first == e.first) {
          merged.back().second += e.second;
        } else {
          merged.push_back(e);
        }
      }
      for (auto& e : merged) {
        if (e.second == 0.0) continue;
        row_index_.push_back(e.first);
        values_.push_back(e.second);
      }
      col_start_[j + 1] = static_cast<int>(row_index_.size());
    }
    x_.assign(total, 0.0);
    state_.assign(total, VarState::kLower);
    basis_pos_.assign(total, -1);
  }

  LpSolution run() {
    LpSolution out;
    slack_basis();
    int restarts = 0;
    bool phase_two = false;
    while (true) {
      Status s = iterate(phase_two);
      if (s == Status::kPhaseOneDone) {
        phase_two = true;
        if (opt_.feasibility_only) break;
        continue;
      }
      if (s == Status::kInfeasible) {
        out.status = LpStatus::kInfeasible;
        out.infeasibility = infeasibility();
        out.iterations = iterations_;
        return out;
      }
      if (s == Status::kUnbounded) {
        out.status = LpStatus::kUnbounded;
        out.iterations = iterations_;
        return out;
      }
      // Optimal: confirm with a fresh factorization.
      refactor();
      compute_basic_values();
      if (infeasibility() > opt_.primal_tol * 10 || (!opt_.feasibility_only && !dual_feasible())) {
        if (++restarts > 5) {
          throw SolverError("simplex: optimality could not be confirmed after 5 restarts (" +
                            std::to_string(iterations_) + " iterations, infeasibility " +
                            std::to_string(infeasibility()) + ")");
        }
        phase_two = infeasibility() <= opt_.primal_tol;
        continue;
      }
      break;
    }
    out.status = LpStatus::kOptimal;
    out.is_basic = true;
    out.iterations = iterations_;
    out.values.assign(x_.begin(), x_.begin() + n_);
    for (int j = 0; j < n_; ++j) {
      double& v = out.values[j];
      if (std::abs(v - lower_[j]) <= opt_.primal_tol) v = lower_[j];
      if (std::abs(v - upper_[j]) <= opt_.primal_tol) v = upper_[j];
    }
    return out;
  }

 private:
  enum class Status { kOptimal, kInfeasible, kUnbounded, kPhaseOneDone };

  double nonbasic_value(int j, VarState s) const {
    switch (s) {
      case VarState::kLower:
        return lower_[j];
      case VarState::kUpper:
        return upper_[j];
      default:
        return 0.0;
    }
  }

  VarState resting_state(int j) const {
    if (std::isfinite(lower_[j])) return VarState::kLower;
    if (std::isfinite(upper_[j])) return VarState::kUpper;
    return VarState::kFree;
  }

  void slack_basis() {
    basis_.resize(m_);
    std::fill(basis_pos_.begin(), basis_pos_.end(), -1);
    for (int j = 0; j < n_; ++j) {
      state_[j] = resting_state(j);
      x_[j] = nonbasic_value(j, state_[j]);
    }
    for (int r = 0; r < m_; ++r) {
      basis_[r] = n_ + r;
      basis_pos_[n_ + r] = r;
      state_[n_ + r] = VarState::kBasic;
    }
    refactor();
    compute_basic_values();
  }

  // Column of variable j in the working system.
  template <typename F>
  void for_column(int j, F&& f) const {
    if (j >= n_) {
      f(j - n_, -1.0);
      return;
    }
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) f(row_index_[k], values_[k]);
  }

  void refactor() {
    etas_.clear();
    if (m_ == 0) return;
    std::vector<Eigen::Triplet<double>> trips;
    for (int r = 0; r < m_; ++r) {
      for_column(basis_[r], [&](int i, double a) { trips.emplace_back(i, r, a); });
    }
    SparseMatrix b(m_, m_);
    b.setFromTriplets(trips.begin(), trips.end());
    b.makeCompressed();
    lu_.analyzePattern(b);
    lu_.factorize(b);
    if (lu_.info() != Eigen::Success) {
      if (singular_recoveries_++ > 3) {
        throw SolverError("simplex: basis factorization failed repeatedly: " + lu_.lastErrorMessage());
      }
      // Fall back to the slack basis; the current nonbasic point is kept.
      for (int r = 0; r < m_; ++r) {
        int j = basis_[r];
        basis_pos_[j] = -1;
        state_[j] = resting_state(j);
        double lo = lower_[j], hi = upper_[j];
        if (std::isfinite(lo) && std::isfinite(hi)) {
          state_[j] = std::abs(x_[j] - lo) <= std::abs(x_[j] - hi) ? VarState::kLower : VarState::kUpper;
        }
        x_[j] = nonbasic_value(j, state_[j]);
      }
      for (int r = 0; r < m_; ++r) {
        basis_[r] = n_ + r;
        basis_pos_[n_ + r] = r;
        state_[n_ + r] = VarState::kBasic;
      }
      refactor();
    }
  }

  Vector ftran(Vector rhs) const {
    Vector z = lu_.solve(rhs);
    for (const Eta& e : etas_) {
      double zr = z[e.pos] / e.pivot;
      z[e.pos] = zr;
      if (zr == 0.0) continue;
      for (auto [i, d] : e.entries) z[i] -= d * zr;
    }
    return z;
  }

  Vector btran(Vector w) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double acc = w[it->pos];
      for (auto [i, d] : it->entries) acc -= w[i] * d;
      w[it->pos] = acc / it->pivot;
    }
    return lu_.transpose().solve(w);
  }

  void compute_basic_values() {
    if (m_ == 0) return;
    Vector rhs = Vector::Zero(m_);
    for (int j = 0; j < n_ + m_; ++j) {
      if (state_[j] == VarState::kBasic || x_[j] == 0.0) continue;
      double xj = x_[j];
      for_column(j, [&](int i, double a) { rhs[i] -= a * xj; });
    }
    Vector xb = ftran(rhs);
    for (int r = 0; r < m_; ++r) x_[basis_[r]] = xb[r];
  }

  double infeasibility() const {
    double sum = 0.0;
    for (int r = 0; r < m_; ++r) {
      int j = basis_[r];
      if (x_[j] < lower_[j] - opt_.primal_tol) sum += lower_[j] - x_[j];
      if (x_[j] > upper_[j] + opt_.primal_tol) sum += x_[j] - upper_[j];
    }
    return sum;
  }

  // Phase-one cost of basic position r: gradient of the sum of infeasibilities.
  double phase_one_cost(int r) const {
    int j = basis_[r];
    if (x_[j] < lower_[j] - opt_.primal_tol) return -1.0;
    if (x_[j] > upper_[j] + opt_.primal_tol) return 1.0;
    return 0.0;
  }

  Vector duals(bool phase_two) const {
    Vector cb(m_);
    for (int r = 0; r < m_; ++r) cb[r] = phase_two ? cost_[basis_[r]] : phase_one_cost(r);
    if (m_ == 0) return cb;
    return btran(cb);
  }

  double reduced_cost(int j, const Vector& y, bool phase_two) const {
    double d = phase_two ? cost_[j] : 0.0;
    for_column(j, [&](int i, double a) { d -= y[i] * a; });
    return d;
  }

  // +1 to increase, -1 to decrease, 0 if j is not an improving candidate.
  int improving_direction(int j, double d) const {
    if (lower_[j] == upper_[j]) return 0;
    switch (state_[j]) {
      case VarState::kLower:
        return d < -opt_.dual_tol ? 1 : 0;
      case VarState::kUpper:
        return d > opt_.dual_tol ? -1 : 0;
      case VarState::kFree:
        return d < -opt_.dual_tol ? 1 : (d > opt_.dual_tol ? -1 : 0);
      case VarState::kBasic:
        return 0;
    }
    return 0;
  }

  bool dual_feasible() const {
    Vector y = duals(true);
    for (int j = 0; j < n_ + m_; ++j) {
      if (state_[j] == VarState::kBasic) continue;
      if (improving_direction(j, reduced_cost(j, y, true)) != 0) return false;
    }
    return true;
  }

  Status iterate(bool phase_two) {
    constexpr double kPivotTol = 1e-9;
    int degenerate_run = 0;
    bool bland = false;
    int since_refactor = 0;
    while (true) {
      if (iterations_ >= opt_.max_iterations) {
        throw SolverError("simplex: iteration limit " + std::to_string(opt_.max_iterations) + " reached");
      }
      if (since_refactor >= opt_.refactor_interval) {
        refactor();
        compute_basic_values();
        since_refactor = 0;
      }
      if (!phase_two && infeasibility() == 0.0) return Status::kPhaseOneDone;

      Vector y = duals(phase_two);

      // Pricing: Dantzig, falling back to Bland's rule on long degenerate runs.
      int entering = -1;
      int dir = 0;
      double best = 0.0;
      for (int j = 0; j < n_ + m_; ++j) {
        if (state_[j] == VarState::kBasic) continue;
        double d = reduced_cost(j, y, phase_two);
        int s = improving_direction(j, d);
        if (s == 0) continue;
        if (bland) {
          entering = j;
          dir = s;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          entering = j;
          dir = s;
        }
      }
      if (entering < 0) {
        if (since_refactor > 0) {
          // Re-check against a fresh factorization before concluding.
          refactor();
          compute_basic_values();
          since_refactor = 0;
          continue;
        }
        if (!phase_two) return infeasibility() > 0.0 ? Status::kInfeasible : Status::kPhaseOneDone;
        return Status::kOptimal;
      }

      Vector a = Vector::Zero(m_);
      for_column(entering, [&](int i, double v) { a[i] = v; });
      Vector alpha = m_ > 0 ? ftran(a) : a;

      // Basic position r moves at rate[r] per unit step of the entering variable.
      auto rate = [&](int r) { return -dir * alpha[r]; };
      auto limit = [&](int r, double slack) -> double {
        int j = basis_[r];
        double rt = rate(r);
        if (std::abs(rt) <= kPivotTol) return kInf;
        double xv = x_[j];
        bool below = xv < lower_[j] - opt_.primal_tol;
        bool above = xv > upper_[j] + opt_.primal_tol;
        if (below) return rt > 0 ? (lower_[j] - xv + slack) / rt : kInf;
        if (above) return rt < 0 ? (xv - upper_[j] + slack) / -rt : kInf;
        if (rt < 0) return std::isfinite(lower_[j]) ? (xv - lower_[j] + slack) / -rt : kInf;
        return std::isfinite(upper_[j]) ? (upper_[j] - xv + slack) / rt : kInf;
      };

      double flip = upper_[entering] - lower_[entering];  // inf for half-bounded or free
      int leaving = -1;
      double step = kInf;
      if (bland) {
        for (int r = 0; r < m_; ++r) {
          double t = limit(r, 0.0);
          if (t == kInf) continue;
          if (leaving < 0 || t < step - 1e-12 || (t <= step + 1e-12 && basis_[r] < basis_[leaving])) {
            step = std::min(step, t);
            leaving = r;
          }
        }
      } else {
        // Harris two-pass ratio test.
        double relaxed = kInf;
        for (int r = 0; r < m_; ++r) relaxed = std::min(relaxed, limit(r, opt_.primal_tol));
        double best_rate = 0.0;
        for (int r = 0; r < m_; ++r) {
          double t = limit(r, 0.0);
          if (t <= relaxed && std::abs(rate(r)) > best_rate) {
            best_rate = std::abs(rate(r));
            leaving = r;
            step = t;
          }
        }
      }

      if (flip <= step || (!bland && leaving >= 0 && flip <= step + opt_.primal_tol)) {
        if (flip == kInf) {
          if (!phase_two) {
            throw SolverError("simplex: unbounded phase-one ray");
          }
          return Status::kUnbounded;
        }
        // Bound flip, basis unchanged.
        double delta = dir * flip;
        x_[entering] += delta;
        state_[entering] = dir > 0 ? VarState::kUpper : VarState::kLower;
        x_[entering] = nonbasic_value(entering, state_[entering]);
        for (int r = 0; r < m_; ++r) x_[basis_[r]] += rate(r) * flip;
        ++iterations_;
        degenerate_run = 0;
        bland = false;
        continue;
      }
      if (leaving < 0) {
        if (!phase_two) throw SolverError("simplex: unbounded phase-one ray");
        return Status::kUnbounded;
      }
      if (std::abs(alpha[leaving]) < kPivotTol) {
        refactor();
        compute_basic_values();
        since_refactor = 0;
        continue;
      }

      step = std::max(step, 0.0);
      int out_var = basis_[leaving];
      // Leaving variable rests at the bound it was moving toward.
      VarState out_state = rate(leaving) < 0 ? VarState::kLower : VarState::kUpper;
      if (x_[out_var] < lower_[out_var] - opt_.primal_tol) out_state = VarState::kLower;
      if (x_[out_var] > upper_[out_var] + opt_.primal_tol) out_state = VarState::kUpper;
      for (int r = 0; r < m_; ++r) x_[basis_[r]] += rate(r) * step;
      x_[entering] += dir * step;
      state_[out_var] = out_state;
      x_[out_var] = nonbasic_value(out_var, out_state);
      basis_pos_[out_var] = -1;

      basis_[leaving] = entering;
      basis_pos_[entering] = leaving;
      state_[entering] = VarState::kBasic;

      Eta eta{leaving, alpha[leaving], {}};
      for (int r = 0; r < m_; ++r) {
        if (r != leaving && alpha[r] != 0.0) eta.entries.emplace_back(r, alpha[r]);
      }
      etas_.push_back(std::move(eta));
      ++since_refactor;
      ++iterations_;

      if (step <= 1e-12) {
        if (++degenerate_run > 50) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }
    }
  }

  SolverOptions opt_;
  int n_;
  int m_ = 0;
  std::vector<int> row_map_;
  std::vector<double> lower_, upper_, cost_;
  std::vector<int> col_start_, row_index_;
  std::vector<double> values_;

  std::vector<double> x_;
  std::vector<VarState> state_;
  std::vector<int> basis_;
  std::vector<int> basis_pos_;
  mutable Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
  int iterations_ = 0;
  int singular_recoveries_ = 0;
};

}  // namespace

LpSolution solve_lp(const LpModel& model, const SolverOptions& options) {
  model.validate();
  BoundedSimplex simplex(model, options);
  LpSolution sol = simplex.run();
  if (sol.status == LpStatus::kOptimal) {
    sol.objective = model.objective_offset();
    for (int j = 0; j < model.num_variables(); ++j) sol.objective += model.variable(j).cost * sol.values[j];
    double viol = max_violation(model, sol.values);
    if (viol > 1e-7) {
      throw SolverError("simplex: returned point violates constraints by " + std::to_string(viol));
    }
  }
  return sol;
}

bool check_feasible(const LpModel& model, const SolverOptions& options) {
  SolverOptions o = options;
  o.feasibility_only = true;
  return solve_lp(model, o).status == LpStatus::kOptimal;
}

}  // namespace faircluster::lp
