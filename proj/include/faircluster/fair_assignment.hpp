#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "faircluster/instance.hpp"
#include "faircluster/lp.hpp"
#include "faircluster/vanilla.hpp"

namespace faircluster {

// Fixed centers S plus fairness bounds: the fair p-assignment problem.
struct FairAssignmentProblem {
  FairAssignmentProblem(ClusteringInstance instance, std::vector<int> opened, FairnessProfile profile);

  ClusteringInstance instance;
  std::vector<int> opened;  // sorted, distinct, non-empty subset of F
  FairnessProfile profile;

  Norm norm() const { return instance.norm(); }
};

// The assignment LP together with the (client, slot) -> variable map.
// Slot j refers to problem.opened[j]. Objective coefficients are
// (d / distance_scale)^p; multiply the LP objective by cost_scale to get
// sum_v d(v, f)^p.
struct FairLp {
  lp::LpModel model;
  std::vector<std::vector<int>> var;  // [client][slot], -1 when absent
  double distance_scale = 1.0;
  double cost_scale = 1.0;
};

// min sum d(v,f)^p x_vf subject to the fairness rows per (f, i) and one
// assignment row per client. Requires a finite norm.
FairLp build_fair_lp(const FairAssignmentProblem& problem);

// Same rows without an objective, keeping only pairs with d(v, f) <= guess.
// With `tie_break_by_distance` the objective sum d(v,f) x_vf is added, which
// leaves the feasible region (and hence the vertex guarantee) unchanged.
FairLp build_fair_feasibility_lp(const FairAssignmentProblem& problem, double guess,
                                 bool tie_break_by_distance = false);

struct RoundingTrace {
  int iterations = 0;              // LP2 solves
  std::vector<double> objectives;  // LP2 objective (true cost^p units) per solve
  std::vector<int> dropped_rows;   // rows dropped per iteration
  std::vector<int> fixed_clients;  // clients fixed per iteration
  std::vector<double> facility_mass;             // initial T_f per slot
  std::vector<std::vector<double>> group_mass;   // initial T_{f,i} per [slot][group]
  // Initially fixed (integral) clients per slot and per [slot][group].
  std::vector<int> facility_fixed;
  std::vector<std::vector<int>> group_fixed;
  // Largest deviation of an unfixed client's surviving mass from 1.
  double max_row_drift = 0.0;
};

struct RoundingResult {
  Assignment assignment;
  double lambda = 0.0;
  double lp_cost = 0.0;  // initial LP objective in cost^p units (0 for p = inf)
  RoundingTrace trace;
};

// Iterative rounding of a basic optimal solution of `lp` to an integral
// assignment with additive violation at most 4*Delta + 3.
RoundingResult iterative_round(const FairAssignmentProblem& problem, const FairLp& lp,
                               const lp::LpSolution& solution);

// Solves the fair LP and rounds it (finite p).
RoundingResult fair_assign(const FairAssignmentProblem& problem);

struct KCenterResult {
  RoundingResult rounding;
  double guess = 0.0;  // smallest fractionally feasible radius G*
  int feasibility_solves = 0;
};

// p = infinity: binary search over the candidate radii d(v, f), f in S, for
// the smallest fractionally feasible guess, then round at that guess.
KCenterResult fair_assign_k_center(const FairAssignmentProblem& problem);

struct FairClusteringResult {
  VanillaSolution vanilla;
  RoundingResult rounding;
  std::optional<double> guess;
  FairnessReport report;

  const Assignment& fair() const { return rounding.assignment; }
};

// Vanilla solver for S, then fair reassignment on S.
FairClusteringResult fair_clustering(const ClusteringInstance& instance, const FairnessProfile& profile,
                                     SolverId solver, std::uint64_t seed);

// Same, with the centers given.
FairClusteringResult fair_clustering(const ClusteringInstance& instance, const FairnessProfile& profile,
                                     VanillaSolution vanilla);

}  // namespace faircluster
