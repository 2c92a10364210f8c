#include "faircluster/fair_assignment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <string>

#include "faircluster/errors.hpp"

namespace faircluster {
namespace {

constexpr double kTol = lp::kIntegralityTol;

// floor/ceil that treat values within kTol of an integer as that integer.
double safe_floor(double t) {
  double r = std::round(t);
  return std::abs(t - r) <= kTol ? r : std::floor(t);
}

double safe_ceil(double t) {
  double r = std::round(t);
  return std::abs(t - r) <= kTol ? r : std::ceil(t);
}

// Adds the per-(f, i) fairness rows and per-client assignment rows.
void add_fairness_rows(const FairAssignmentProblem& problem, FairLp& lp) {
  const ClusteringInstance& inst = problem.instance;
  const int n = inst.num_clients();
  const int s = static_cast<int>(problem.opened.size());
  std::vector<char> member(n);
  for (int j = 0; j < s; ++j) {
    for (int i = 0; i < inst.num_groups(); ++i) {
      std::fill(member.begin(), member.end(), 0);
      for (int v : inst.group(i)) member[v] = 1;
      const double alpha = problem.profile.alpha(i);
      const double beta = problem.profile.beta(i);
      std::string tag = "f" + std::to_string(problem.opened[j]) + "g" + std::to_string(i);
      if (alpha < 1.0) {
        std::vector<lp::Term> terms;
        for (int v = 0; v < n; ++v) {
          if (lp.var[v][j] >= 0) terms.push_back({lp.var[v][j], (member[v] ? 1.0 : 0.0) - alpha});
        }
        lp.model.add_constraint(std::move(terms), lp::Sense::kLessEqual, 0.0, "RD" + tag);
      }
      if (beta > 0.0) {
        std::vector<lp::Term> terms;
        for (int v = 0; v < n; ++v) {
          if (lp.var[v][j] >= 0) terms.push_back({lp.var[v][j], (member[v] ? 1.0 : 0.0) - beta});
        }
        lp.model.add_constraint(std::move(terms), lp::Sense::kGreaterEqual, 0.0, "MP" + tag);
      }
    }
  }
  for (int v = 0; v < n; ++v) {
    std::vector<lp::Term> terms;
    for (int j = 0; j < s; ++j) {
      if (lp.var[v][j] >= 0) terms.push_back({lp.var[v][j], 1.0});
    }
    lp.model.add_constraint(std::move(terms), lp::Sense::kEqual, 1.0, "A" + std::to_string(v));
  }
}

double max_distance(const FairAssignmentProblem& problem) {
  double dmax = 0.0;
  for (int v = 0; v < problem.instance.num_clients(); ++v) {
    for (int f : problem.opened) dmax = std::max(dmax, problem.instance.distance(v, f));
  }
  return dmax;
}

}  // namespace

FairAssignmentProblem::FairAssignmentProblem(ClusteringInstance inst, std::vector<int> centers,
                                             FairnessProfile fairness)
    : instance(std::move(inst)), opened(std::move(centers)), profile(std::move(fairness)) {
  std::sort(opened.begin(), opened.end());
  if (opened.empty()) throw DomainError("fair assignment needs at least one open facility");
  if (std::adjacent_find(opened.begin(), opened.end()) != opened.end()) {
    throw DomainError("open facilities must be distinct");
  }
  if (opened.front() < 0 || opened.back() >= instance.num_facilities()) {
    throw DomainError("open facility outside F");
  }
  if (profile.num_groups() != instance.num_groups()) {
    throw DomainError("fairness profile has " + std::to_string(profile.num_groups()) +
                      " groups, instance has " + std::to_string(instance.num_groups()));
  }
}

FairLp build_fair_lp(const FairAssignmentProblem& problem) {
  const Norm p = problem.norm();
  if (p.is_infinite()) throw DomainError("build_fair_lp needs a finite norm; use the feasibility LP");
  const ClusteringInstance& inst = problem.instance;
  const int n = inst.num_clients();
  const int s = static_cast<int>(problem.opened.size());
  FairLp lp;
  double dmax = max_distance(problem);
  lp.distance_scale = dmax > 0.0 ? dmax : 1.0;
  lp.cost_scale = p.power(lp.distance_scale);
  lp.var.assign(n, std::vector<int>(s, -1));
  for (int v = 0; v < n; ++v) {
    for (int j = 0; j < s; ++j) {
      double c = p.power(inst.distance(v, problem.opened[j]) / lp.distance_scale);
      lp.var[v][j] = lp.model.add_variable(0.0, 1.0, c);
    }
  }
  add_fairness_rows(problem, lp);
  return lp;
}

FairLp build_fair_feasibility_lp(const FairAssignmentProblem& problem, double guess,
                                 bool tie_break_by_distance) {
  const ClusteringInstance& inst = problem.instance;
  const int n = inst.num_clients();
  const int s = static_cast<int>(problem.opened.size());
  FairLp lp;
  double dmax = max_distance(problem);
  lp.distance_scale = dmax > 0.0 ? dmax : 1.0;
  lp.cost_scale = lp.distance_scale;
  lp.var.assign(n, std::vector<int>(s, -1));
  for (int v = 0; v < n; ++v) {
    for (int j = 0; j < s; ++j) {
      double d = inst.distance(v, problem.opened[j]);
      if (d > guess) continue;
      lp.var[v][j] = lp.model.add_variable(0.0, 1.0, tie_break_by_distance ? d / lp.distance_scale : 0.0);
    }
  }
  add_fairness_rows(problem, lp);
  return lp;
}

namespace {

// Live state of the rounding loop over the LP2 support.
struct Lp2State {
  struct Pair {
    int client;
    int slot;
    double cost;  // scaled objective coefficient
  };
  struct Bound {
    double lo;
    double hi;
    bool active = true;
  };
  std::vector<Pair> pairs;  // surviving variables
  std::vector<Bound> facility_rows;              // [slot]
  std::vector<std::vector<Bound>> group_rows;    // [slot][group]
};

}  // namespace

RoundingResult iterative_round(const FairAssignmentProblem& problem, const FairLp& lp,
                               const lp::LpSolution& solution) {
  if (solution.status != lp::LpStatus::kOptimal || !solution.is_basic) {
    throw SolverError("iterative_round needs an optimal basic LP solution");
  }
  const ClusteringInstance& inst = problem.instance;
  const int n = inst.num_clients();
  const int s = static_cast<int>(problem.opened.size());
  const int ell = inst.num_groups();
  const int delta = inst.max_groups_per_client();
  const int support_limit = 2 * (delta + 1);

  RoundingTrace trace;
  std::vector<int> phi(n, -1);
  double lp_scaled = 0.0;
  for (int v = 0; v < n; ++v) {
    for (int j = 0; j < s; ++j) {
      int id = lp.var[v][j];
      if (id < 0) continue;
      lp_scaled += lp.model.variable(id).cost * solution.values[id];
      if (solution.values[id] >= 1.0 - kTol) phi[v] = j;
    }
  }

  // T_f and T_{f,i} over the clients left fractional, plus the LP2 support.
  trace.facility_mass.assign(s, 0.0);
  trace.group_mass.assign(s, std::vector<double>(ell, 0.0));
  trace.facility_fixed.assign(s, 0);
  trace.group_fixed.assign(s, std::vector<int>(ell, 0));
  Lp2State st;
  for (int v = 0; v < n; ++v) {
    if (phi[v] >= 0) {
      ++trace.facility_fixed[phi[v]];
      for (int g : inst.groups_of(v)) ++trace.group_fixed[phi[v]][g];
      continue;
    }
    for (int j = 0; j < s; ++j) {
      int id = lp.var[v][j];
      if (id < 0) continue;
      double x = solution.values[id];
      if (x <= kTol) continue;
      trace.facility_mass[j] += x;
      for (int g : inst.groups_of(v)) trace.group_mass[j][g] += x;
      st.pairs.push_back({v, j, lp.model.variable(id).cost});
    }
  }
  st.facility_rows.resize(s);
  st.group_rows.assign(s, std::vector<Lp2State::Bound>(ell));
  for (int j = 0; j < s; ++j) {
    st.facility_rows[j] = {safe_floor(trace.facility_mass[j]), safe_ceil(trace.facility_mass[j])};
    for (int i = 0; i < ell; ++i) {
      st.group_rows[j][i] = {safe_floor(trace.group_mass[j][i]), safe_ceil(trace.group_mass[j][i])};
    }
  }

  auto unfixed = [&] { return std::count(phi.begin(), phi.end(), -1); };
  const int max_iterations = static_cast<int>(st.pairs.size()) + s * (ell + 1) + n + 1;

  while (unfixed() > 0) {
    if (trace.iterations >= max_iterations) {
      throw SolverError("iterative_round exceeded its iteration bound");
    }
    // LP2 over the surviving support.
    lp::LpModel model;
    for (const auto& pr : st.pairs) model.add_variable(0.0, 1.0, pr.cost);
    std::vector<std::vector<lp::Term>> client_terms(n);
    std::vector<std::vector<lp::Term>> facility_terms(s);
    std::vector<std::vector<std::vector<lp::Term>>> group_terms(s, std::vector<std::vector<lp::Term>>(ell));
    for (int idx = 0; idx < static_cast<int>(st.pairs.size()); ++idx) {
      const auto& pr = st.pairs[idx];
      client_terms[pr.client].push_back({idx, 1.0});
      facility_terms[pr.slot].push_back({idx, 1.0});
      for (int g : inst.groups_of(pr.client)) group_terms[pr.slot][g].push_back({idx, 1.0});
    }
    for (int j = 0; j < s; ++j) {
      if (st.facility_rows[j].active) {
        model.add_row(facility_terms[j], st.facility_rows[j].lo, st.facility_rows[j].hi);
      }
      for (int i = 0; i < ell; ++i) {
        if (st.group_rows[j][i].active) {
          model.add_row(group_terms[j][i], st.group_rows[j][i].lo, st.group_rows[j][i].hi);
        }
      }
    }
    for (int v = 0; v < n; ++v) {
      if (phi[v] < 0) model.add_constraint(client_terms[v], lp::Sense::kEqual, 1.0);
    }
    lp::LpSolution sol = lp::solve_lp(model);
    ++trace.iterations;
    if (sol.status != lp::LpStatus::kOptimal) {
      throw SolverError(std::string("LP2 solve returned ") + lp::to_string(sol.status) +
                        " at iteration " + std::to_string(trace.iterations));
    }
    trace.objectives.push_back(sol.objective * lp.cost_scale);

    std::vector<double> mass(n, 0.0);
    for (int idx = 0; idx < static_cast<int>(st.pairs.size()); ++idx) mass[st.pairs[idx].client] += sol.values[idx];
    for (int v = 0; v < n; ++v) {
      if (phi[v] < 0) trace.max_row_drift = std::max(trace.max_row_drift, std::abs(mass[v] - 1.0));
    }

    // Fractional support per active row, from this solution.
    std::vector<int> facility_support(s, 0);
    std::vector<std::vector<int>> group_support(s, std::vector<int>(ell, 0));
    for (int idx = 0; idx < static_cast<int>(st.pairs.size()); ++idx) {
      double x = sol.values[idx];
      if (x <= kTol || x >= 1.0 - kTol) continue;
      const auto& pr = st.pairs[idx];
      ++facility_support[pr.slot];
      for (int g : inst.groups_of(pr.client)) ++group_support[pr.slot][g];
    }

    // Delete zeros, fix ones.
    int fixed_now = 0;
    std::vector<Lp2State::Pair> survivors;
    std::size_t deleted = 0;
    for (int idx = 0; idx < static_cast<int>(st.pairs.size()); ++idx) {
      const auto& pr = st.pairs[idx];
      double x = sol.values[idx];
      if (x >= 1.0 - kTol && phi[pr.client] < 0) {
        phi[pr.client] = pr.slot;
        ++fixed_now;
        st.facility_rows[pr.slot].lo -= 1.0;
        st.facility_rows[pr.slot].hi -= 1.0;
        for (int g : inst.groups_of(pr.client)) {
          st.group_rows[pr.slot][g].lo -= 1.0;
          st.group_rows[pr.slot][g].hi -= 1.0;
        }
      }
    }
    for (int idx = 0; idx < static_cast<int>(st.pairs.size()); ++idx) {
      const auto& pr = st.pairs[idx];
      if (phi[pr.client] >= 0 || sol.values[idx] <= kTol) {
        ++deleted;
        continue;
      }
      survivors.push_back(pr);
    }
    st.pairs = std::move(survivors);

    // Drop low-support rows: per (f, i) first, then per f.
    int dropped = 0;
    for (int j = 0; j < s; ++j) {
      for (int i = 0; i < ell; ++i) {
        if (st.group_rows[j][i].active && group_support[j][i] <= support_limit) {
          st.group_rows[j][i].active = false;
          ++dropped;
        }
      }
    }
    for (int j = 0; j < s; ++j) {
      if (st.facility_rows[j].active && facility_support[j] <= support_limit) {
        st.facility_rows[j].active = false;
        ++dropped;
      }
    }
    trace.fixed_clients.push_back(fixed_now);
    trace.dropped_rows.push_back(dropped);

    if (fixed_now == 0 && dropped == 0 && deleted == 0) {
      std::ostringstream msg;
      msg << "iterative_round stalled with " << unfixed() << " unfixed clients; fractional support:";
      for (int idx = 0; idx < static_cast<int>(st.pairs.size()); ++idx) {
        msg << " (v" << st.pairs[idx].client << ",f" << problem.opened[st.pairs[idx].slot] << ")="
            << sol.values[idx];
      }
      throw SolverError(msg.str());
    }
  }

  std::vector<int> out(n);
  for (int v = 0; v < n; ++v) out[v] = problem.opened[phi[v]];
  // The problem's instance may carry a k smaller than |S| (e.g. hand-built S).
  ClusteringInstance sized = static_cast<int>(problem.opened.size()) > inst.k()
                                 ? inst.with_k(static_cast<int>(problem.opened.size()))
                                 : inst;
  RoundingResult result{Assignment(sized, problem.opened, std::move(out)), 0.0, 0.0, std::move(trace)};
  result.lambda = additive_violation(inst, problem.profile, result.assignment);
  result.lp_cost = problem.norm().is_infinite() ? 0.0 : lp_scaled * lp.cost_scale;
  return result;
}

namespace {

// With alpha = 1 and beta = 0 the LP optimum is the nearest assignment, so
// it is returned directly with no LP2 rounds.
RoundingResult nearest_rounding(const FairAssignmentProblem& problem) {
  const ClusteringInstance& inst = problem.instance;
  const int s = static_cast<int>(problem.opened.size());
  ClusteringInstance sized = s > inst.k() ? inst.with_k(s) : inst;
  Assignment a(sized, problem.opened, nearest_assignment(inst, problem.opened));
  double lp_cost = 0.0;
  if (!problem.norm().is_infinite()) {
    for (int v = 0; v < inst.num_clients(); ++v) lp_cost += problem.norm().power(inst.distance(v, a[v]));
  }
  return RoundingResult{std::move(a), 0.0, lp_cost, RoundingTrace{}};
}

}  // namespace

RoundingResult fair_assign(const FairAssignmentProblem& problem) {
  if (problem.profile.is_vacuous()) return nearest_rounding(problem);
  FairLp lp = build_fair_lp(problem);
  lp::LpSolution sol = lp::solve_lp(lp.model);
  if (sol.status == lp::LpStatus::kInfeasible) {
    for (int i = 0; i < problem.instance.num_groups(); ++i) {
      double r = problem.instance.group_ratio(i);
      if (r < problem.profile.beta(i) || r > problem.profile.alpha(i)) {
        throw InfeasibleError("fair assignment LP infeasible: group " + std::to_string(i) + " ratio " +
                              std::to_string(r) + " outside [beta, alpha] = [" +
                              std::to_string(problem.profile.beta(i)) + ", " +
                              std::to_string(problem.profile.alpha(i)) + "]");
      }
    }
    throw InfeasibleError("fair assignment LP infeasible");
  }
  if (sol.status != lp::LpStatus::kOptimal) throw SolverError("fair assignment LP is unbounded");
  return iterative_round(problem, lp, sol);
}

KCenterResult fair_assign_k_center(const FairAssignmentProblem& problem) {
  const ClusteringInstance& inst = problem.instance;
  if (problem.profile.is_vacuous()) {
    RoundingResult r = nearest_rounding(problem);
    double g = 0.0;
    for (int v = 0; v < inst.num_clients(); ++v) g = std::max(g, inst.distance(v, r.assignment[v]));
    return KCenterResult{std::move(r), g, 0};
  }
  std::vector<double> radii;
  for (int v = 0; v < inst.num_clients(); ++v) {
    for (int f : problem.opened) radii.push_back(inst.distance(v, f));
  }
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());

  int solves = 0;
  auto feasible = [&](double g) {
    ++solves;
    return lp::check_feasible(build_fair_feasibility_lp(problem, g).model);
  };
  if (!feasible(radii.back())) {
    for (int i = 0; i < inst.num_groups(); ++i) {
      double r = inst.group_ratio(i);
      if (r < problem.profile.beta(i) || r > problem.profile.alpha(i)) {
        throw InfeasibleError("no feasible radius: group " + std::to_string(i) + " ratio " +
                              std::to_string(r) + " outside [beta, alpha]");
      }
    }
    throw InfeasibleError("no feasible radius even at the largest distance");
  }
  // Smallest index whose radius is feasible.
  std::size_t lo = 0, hi = radii.size() - 1;
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (feasible(radii[mid])) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  const double guess = radii[lo];
  FairLp lp = build_fair_feasibility_lp(problem, guess, /*tie_break_by_distance=*/true);
  lp::LpSolution sol = lp::solve_lp(lp.model);
  if (sol.status != lp::LpStatus::kOptimal) {
    throw SolverError("feasibility LP at the selected radius is not solvable");
  }
  return KCenterResult{iterative_round(problem, lp, sol), guess, solves};
}

FairClusteringResult fair_clustering(const ClusteringInstance& instance, const FairnessProfile& profile,
                                     SolverId solver, std::uint64_t seed) {
  auto t0 = std::chrono::steady_clock::now();
  VanillaSolution vanilla = solve_vanilla(instance, solver, seed);
  double vanilla_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  FairClusteringResult r = fair_clustering(instance, profile, std::move(vanilla));
  r.report.timings.insert(r.report.timings.begin(), PhaseTiming{"vanilla", vanilla_ms});
  return r;
}

FairClusteringResult fair_clustering(const ClusteringInstance& instance, const FairnessProfile& profile,
                                     VanillaSolution vanilla) {
  FairAssignmentProblem problem(instance, vanilla.opened, profile);
  auto t0 = std::chrono::steady_clock::now();
  std::optional<double> guess;
  RoundingResult rounding = [&] {
    if (!instance.norm().is_infinite()) return fair_assign(problem);
    KCenterResult kc = fair_assign_k_center(problem);
    guess = kc.guess;
    return std::move(kc.rounding);
  }();
  double fair_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  FairnessReport report = make_report(instance, profile, vanilla.assignment(instance), rounding.assignment,
                                      {PhaseTiming{"fair_assignment", fair_ms}});
  return FairClusteringResult{std::move(vanilla), std::move(rounding), guess, std::move(report)};
}

}  // namespace faircluster
