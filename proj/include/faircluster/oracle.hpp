#pragma once

#include <optional>
#include <vector>

#include "faircluster/instance.hpp"

namespace faircluster {

inline constexpr double kDefaultOracleGuard = 1e7;

enum class EnumerationOrder { kForward, kReverse };

struct Witness {
  std::vector<int> opened;
  std::vector<int> phi;
  double cost = 0.0;
};

// Exhaustive optima; each field is populated only by the oracle that
// computes it. A fairness optimum that does not exist stays empty and
// `fair_infeasible` is set.
struct OracleResult {
  std::optional<Witness> vnll;
  std::optional<Witness> fair;
  std::optional<Witness> asgn;
  std::optional<Witness> lambda_asgn;  // best assignment with violation <= lambda
  std::optional<Witness> lbnd;
  bool fair_infeasible = false;
};

// Estimated number of (S, phi) states: C(|F|, k) k^n.
double fair_state_count(const ClusteringInstance& instance);

// All S with |S| = k and all phi: C -> S; unused centers cover smaller S.
// Records opt_vnll and the best exactly fair clustering. Throws
// GuardExceeded above `guard` states.
OracleResult brute_force_fair(const ClusteringInstance& instance, const FairnessProfile& profile,
                              double guard = kDefaultOracleGuard,
                              EnumerationOrder order = EnumerationOrder::kForward);

// All phi: C -> S. Records opt_asgn (exactly fair) and, when `lambda` is
// given, the best assignment whose additive violation is at most lambda.
OracleResult brute_force_assignment(const ClusteringInstance& instance, std::vector<int> opened,
                                    const FairnessProfile& profile, std::optional<double> lambda = std::nullopt,
                                    double guard = kDefaultOracleGuard,
                                    EnumerationOrder order = EnumerationOrder::kForward);

// Best clustering with |S| <= k in which every non-empty cluster has at
// least L clients.
OracleResult brute_force_lower_bounded(const ClusteringInstance& instance, int lower_bound,
                                       double guard = kDefaultOracleGuard,
                                       EnumerationOrder order = EnumerationOrder::kForward);

// Best assignment onto a fixed facility set where every facility of T
// receives at least L clients.
std::optional<Witness> brute_force_lb_assignment(const ClusteringInstance& instance,
                                                 const std::vector<int>& facilities, int lower_bound,
                                                 double guard = kDefaultOracleGuard);

// Almost-fair LP over all of F with center variables y_f, sum y_f <= k and
// fairness rows relaxed by an additive lambda. Returns objective^(1/p), a
// lower bound on the cost of any clustering violating fairness by at most
// lambda. Finite p only.
double almost_fair_lp(const ClusteringInstance& instance, const FairnessProfile& profile, double lambda);

// Exactly fair (violation 0, up to 1e-9 rounding) per non-empty cluster.
bool is_exactly_fair(const ClusteringInstance& instance, const FairnessProfile& profile,
                     const std::vector<int>& phi);

}  // namespace faircluster
