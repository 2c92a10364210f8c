#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "faircluster/instance.hpp"
#include "faircluster/vanilla.hpp"

namespace faircluster {

struct FlowArc {
  int from;
  int to;
  std::int64_t lower;
  std::int64_t capacity;
  double cost;  // per unit, non-negative
};

class FlowNetwork {
 public:
  explicit FlowNetwork(int nodes = 0) : nodes_(nodes) {}
  int add_node() { return nodes_++; }
  int add_arc(int from, int to, std::int64_t lower, std::int64_t capacity, double cost);

  int num_nodes() const { return nodes_; }
  const std::vector<FlowArc>& arcs() const { return arcs_; }

 private:
  int nodes_;
  std::vector<FlowArc> arcs_;
};

struct FlowResult {
  bool feasible = false;
  double cost = 0.0;
  std::vector<std::int64_t> flow;  // per arc
};

// Minimum-cost circulation respecting arc lower bounds: lower bounds are
// moved into node excesses, then successive shortest paths with potentials
// route the excess from a super source to a super sink.
FlowResult min_cost_circulation(const FlowNetwork& network);

struct LbMatching {
  bool feasible = false;
  std::vector<int> phi;  // facility per client
  // sum_v d(v, phi(v))^p for finite p; max_v d(v, phi(v)) for p = inf.
  double cost = 0.0;
};

// Assign every client exactly once so that each facility of `facilities`
// gets at least `lower_bound` clients, at minimum cost. For p = inf the
// bottleneck distance is minimized instead. Infeasible iff L |T| > n.
LbMatching min_cost_lb_matching(const ClusteringInstance& instance, const std::vector<int>& facilities,
                                int lower_bound, Norm p);

struct LbOptions {
  int max_k = 20;
};

struct LbResult {
  VanillaSolution vanilla;
  Assignment assignment;  // opened = best subset T
  double cost = 0.0;      // l_p cost of `assignment`
  int subsets_evaluated = 0;
};

// Vanilla centers S, then the best lower-bounded matching over every
// non-empty T subset of S. Ties go to the lexicographically smallest T.
LbResult lb_clustering(const ClusteringInstance& instance, int lower_bound, int k, SolverId solver,
                       std::uint64_t seed, const LbOptions& options = {});

// Same with the centers supplied.
LbResult lb_clustering(const ClusteringInstance& instance, int lower_bound, VanillaSolution vanilla,
                       const LbOptions& options = {});

}  // namespace faircluster
