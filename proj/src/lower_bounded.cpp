#include "faircluster/lower_bounded.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <string>

#include "faircluster/errors.hpp"

namespace faircluster {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Residual {
  struct Edge {
    int to;
    std::int64_t cap;
    double cost;
    int rev;
  };
  std::vector<std::vector<Edge>> adj;

  explicit Residual(int n) : adj(n) {}

  // Returns (node, index) of the forward edge.
  std::pair<int, int> add(int u, int v, std::int64_t cap, double cost) {
    adj[u].push_back({v, cap, cost, static_cast<int>(adj[v].size())});
    adj[v].push_back({u, 0, -cost, static_cast<int>(adj[u].size()) - 1});
    return {u, static_cast<int>(adj[u].size()) - 1};
  }

  // Successive shortest paths from s to t; returns (flow, cost).
  std::pair<std::int64_t, double> min_cost_flow(int s, int t, std::int64_t want) {
    const int n = static_cast<int>(adj.size());
    std::vector<double> potential(n, 0.0);
    std::int64_t sent = 0;
    double total = 0.0;
    std::vector<double> dist(n);
    std::vector<int> prev_node(n), prev_edge(n);
    while (sent < want) {
      std::fill(dist.begin(), dist.end(), kInf);
      dist[s] = 0.0;
      using Item = std::pair<double, int>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
      pq.push({0.0, s});
      while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u]) continue;
        for (int e = 0; e < static_cast<int>(adj[u].size()); ++e) {
          const Edge& ed = adj[u][e];
          if (ed.cap <= 0) continue;
          // Reduced costs are non-negative up to rounding.
          double nd = d + std::max(0.0, ed.cost + potential[u] - potential[ed.to]);
          if (nd < dist[ed.to]) {
            dist[ed.to] = nd;
            prev_node[ed.to] = u;
            prev_edge[ed.to] = e;
            pq.push({nd, ed.to});
          }
        }
      }
      if (dist[t] == kInf) break;
      for (int v = 0; v < n; ++v) {
        if (dist[v] < kInf) potential[v] += dist[v];
      }
      std::int64_t push = want - sent;
      for (int v = t; v != s; v = prev_node[v]) push = std::min(push, adj[prev_node[v]][prev_edge[v]].cap);
      for (int v = t; v != s; v = prev_node[v]) {
        Edge& ed = adj[prev_node[v]][prev_edge[v]];
        ed.cap -= push;
        adj[v][ed.rev].cap += push;
        total += push * ed.cost;
      }
      sent += push;
    }
    return {sent, total};
  }
};

}  // namespace

int FlowNetwork::add_arc(int from, int to, std::int64_t lower, std::int64_t capacity, double cost) {
  if (from < 0 || to < 0 || from >= nodes_ || to >= nodes_) throw DomainError("flow arc endpoint out of range");
  if (lower < 0 || lower > capacity) throw DomainError("flow arc needs 0 <= lower <= capacity");
  if (!(cost >= 0.0) || !std::isfinite(cost)) throw DomainError("flow arc cost must be finite and >= 0");
  arcs_.push_back({from, to, lower, capacity, cost});
  return static_cast<int>(arcs_.size()) - 1;
}

FlowResult min_cost_circulation(const FlowNetwork& network) {
  const int n = network.num_nodes();
  const int source = n, sink = n + 1;
  Residual g(n + 2);
  std::vector<std::int64_t> excess(n, 0);
  std::vector<std::pair<int, int>> handle;
  double fixed_cost = 0.0;
  for (const FlowArc& a : network.arcs()) {
    handle.push_back(g.add(a.from, a.to, a.capacity - a.lower, a.cost));
    excess[a.to] += a.lower;
    excess[a.from] -= a.lower;
    fixed_cost += a.lower * a.cost;
  }
  std::int64_t demand = 0;
  for (int v = 0; v < n; ++v) {
    if (excess[v] > 0) {
      g.add(source, v, excess[v], 0.0);
      demand += excess[v];
    } else if (excess[v] < 0) {
      g.add(v, sink, -excess[v], 0.0);
    }
  }
  auto [sent, cost] = g.min_cost_flow(source, sink, demand);
  FlowResult r;
  r.feasible = sent == demand;
  if (!r.feasible) return r;
  r.cost = fixed_cost + cost;
  r.flow.resize(network.arcs().size());
  for (std::size_t i = 0; i < handle.size(); ++i) {
    auto [u, e] = handle[i];
    const auto& arc = network.arcs()[i];
    r.flow[i] = arc.lower + (arc.capacity - arc.lower - g.adj[u][e].cap);
  }
  return r;
}

namespace {

// Flow model of the lower-bounded b-matching restricted to pairs within
// `radius`. Costs are d^p for finite p and d (a tie-break) otherwise.
LbMatching solve_matching(const ClusteringInstance& inst, const std::vector<int>& facilities, int lower_bound,
                          Norm p, double radius) {
  const int n = inst.num_clients();
  const int t = static_cast<int>(facilities.size());
  FlowNetwork net(n + t + 2);
  const int src = n + t, snk = n + t + 1;
  for (int v = 0; v < n; ++v) net.add_arc(src, v, 1, 1, 0.0);
  std::vector<std::pair<int, int>> pair_of_arc;
  std::vector<int> pair_arc;
  for (int v = 0; v < n; ++v) {
    for (int j = 0; j < t; ++j) {
      double d = inst.distance(v, facilities[j]);
      if (d > radius) continue;
      pair_arc.push_back(net.add_arc(v, n + j, 0, 1, p.is_infinite() ? d : p.power(d)));
      pair_of_arc.emplace_back(v, j);
    }
  }
  for (int j = 0; j < t; ++j) net.add_arc(n + j, snk, lower_bound, n, 0.0);
  net.add_arc(snk, src, n, n, 0.0);
  FlowResult fr = min_cost_circulation(net);
  LbMatching m;
  if (!fr.feasible) return m;
  m.feasible = true;
  m.phi.assign(n, -1);
  for (std::size_t k = 0; k < pair_arc.size(); ++k) {
    if (fr.flow[pair_arc[k]] > 0) m.phi[pair_of_arc[k].first] = facilities[pair_of_arc[k].second];
  }
  // Recompute the objective from the assignment so it is independent of
  // the order in which the flow accumulated costs.
  double agg = 0.0;
  for (int v = 0; v < n; ++v) {
    double w = p.power(inst.distance(v, m.phi[v]));
    agg = p.is_infinite() ? std::max(agg, w) : agg + w;
  }
  m.cost = agg;
  return m;
}

}  // namespace

LbMatching min_cost_lb_matching(const ClusteringInstance& instance, const std::vector<int>& facilities,
                                int lower_bound, Norm p) {
  if (facilities.empty()) throw DomainError("lower-bounded matching needs a non-empty facility set");
  if (lower_bound < 0) throw DomainError("lower bound must be non-negative");
  const int n = instance.num_clients();
  if (static_cast<long long>(lower_bound) * static_cast<long long>(facilities.size()) > n) return {};
  if (!p.is_infinite()) return solve_matching(instance, facilities, lower_bound, p, kInf);

  std::vector<double> radii;
  for (int v = 0; v < n; ++v) {
    for (int f : facilities) radii.push_back(instance.distance(v, f));
  }
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  std::size_t lo = 0, hi = radii.size() - 1;
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (solve_matching(instance, facilities, lower_bound, p, radii[mid]).feasible) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return solve_matching(instance, facilities, lower_bound, p, radii[lo]);
}

LbResult lb_clustering(const ClusteringInstance& instance, int lower_bound, int k, SolverId solver,
                       std::uint64_t seed, const LbOptions& options) {
  if (k > options.max_k) {
    throw ConfigError("k = " + std::to_string(k) + " exceeds the subset enumeration cap " +
                      std::to_string(options.max_k));
  }
  ClusteringInstance sized = instance.with_k(k);
  return lb_clustering(sized, lower_bound, solve_vanilla(sized, solver, seed), options);
}

LbResult lb_clustering(const ClusteringInstance& instance, int lower_bound, VanillaSolution vanilla,
                       const LbOptions& options) {
  const int n = instance.num_clients();
  if (lower_bound < 1) throw DomainError("lower bound L must be at least 1");
  if (lower_bound > n) {
    throw InfeasibleError("lower bound L = " + std::to_string(lower_bound) + " exceeds n = " + std::to_string(n));
  }
  const std::vector<int>& centers = vanilla.opened;
  const int s = static_cast<int>(centers.size());
  if (s > options.max_k) {
    throw ConfigError("|S| = " + std::to_string(s) + " exceeds the subset enumeration cap " +
                      std::to_string(options.max_k));
  }
  const Norm p = instance.norm();
  std::optional<LbMatching> best;
  std::vector<int> best_subset;
  int evaluated = 0;
  for (std::uint32_t mask = 1; mask < (1u << s); ++mask) {
    std::vector<int> subset;
    for (int j = 0; j < s; ++j) {
      if (mask & (1u << j)) subset.push_back(centers[j]);
    }
    ++evaluated;
    LbMatching m = min_cost_lb_matching(instance, subset, lower_bound, p);
    if (!m.feasible) continue;
    if (!best || m.cost < best->cost || (m.cost == best->cost && subset < best_subset)) {
      best = std::move(m);
      best_subset = subset;
    }
  }
  if (!best) throw InfeasibleError("no subset of the vanilla centers admits a lower-bounded assignment");

  ClusteringInstance sized = instance.with_k(std::max(instance.k(), static_cast<int>(best_subset.size())));
  Assignment a(sized, best_subset, best->phi);
  ClusterCounts counts = cluster_counts(instance, a);
  for (int size : counts.size) {
    if (size < lower_bound) throw SolverError("lower-bounded assignment left a cluster below L");
  }
  double cost = a.cost();
  return LbResult{std::move(vanilla), std::move(a), cost, evaluated};
}

}  // namespace faircluster
