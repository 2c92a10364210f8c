#include "faircluster/vanilla.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "faircluster/errors.hpp"
#include "faircluster/rng.hpp"

namespace faircluster {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_k(const ClusteringInstance& instance, int k) {
  if (k < 1 || k > instance.num_facilities()) {
    throw DomainError("k = " + std::to_string(k) + " outside [1, |F| = " +
                      std::to_string(instance.num_facilities()) + "]");
  }
}

// Index drawn with probability proportional to weights[i]; falls back to a
// uniform pick among `allowed` when every weight is zero.
int weighted_pick(const std::vector<double>& weights, const std::vector<char>& allowed, std::mt19937_64& rng) {
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (allowed[i]) total += weights[i];
  }
  if (total > 0.0) {
    double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    double acc = 0.0;
    int last = -1;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!allowed[i] || weights[i] <= 0.0) continue;
      acc += weights[i];
      last = static_cast<int>(i);
      if (u < acc) return last;
    }
    return last;
  }
  std::vector<int> pool;
  for (std::size_t i = 0; i < allowed.size(); ++i) {
    if (allowed[i]) pool.push_back(static_cast<int>(i));
  }
  return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
}

// Adds the free facility nearest to the client farthest from `opened` until
// |opened| = k.
void farthest_point_fill(const ClusteringInstance& instance, std::vector<int>& opened, int k) {
  const int n = instance.num_clients();
  const int m = instance.num_facilities();
  std::vector<char> chosen(m, 0);
  std::vector<double> gap(n, kInf);
  for (int f : opened) chosen[f] = 1;
  for (int v = 0; v < n; ++v) {
    for (int f : opened) gap[v] = std::min(gap[v], instance.distance(v, f));
  }
  while (static_cast<int>(opened.size()) < k) {
    int far = 0;
    for (int v = 1; v < n; ++v) {
      if (gap[v] > gap[far]) far = v;
    }
    int pick = -1;
    for (int f = 0; f < m; ++f) {
      if (chosen[f]) continue;
      if (pick < 0 || instance.distance(far, f) < instance.distance(far, pick)) pick = f;
    }
    chosen[pick] = 1;
    opened.push_back(pick);
    for (int v = 0; v < n; ++v) gap[v] = std::min(gap[v], instance.distance(v, pick));
  }
}

VanillaSolution finish(const ClusteringInstance& instance, std::vector<int> opened, SolverId id,
                       std::uint64_t seed) {
  std::sort(opened.begin(), opened.end());
  VanillaSolution s;
  s.phi = nearest_assignment(instance, opened);
  s.cost = lp_norm_cost(instance, opened, s.phi, instance.norm());
  s.opened = std::move(opened);
  s.solver = id;
  s.seed = seed;
  return s;
}

}  // namespace

const char* to_string(SolverId id) {
  switch (id) {
    case SolverId::kKCenterGonzalez:
      return "K_CENTER_GONZALEZ";
    case SolverId::kKMedianLocalSearch:
      return "K_MEDIAN_LOCAL_SEARCH";
    case SolverId::kKMeansLloyd:
      return "K_MEANS_LLOYD";
  }
  return "?";
}

SolverId parse_solver_id(std::string_view text) {
  std::string t(text);
  for (char& c : t) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (t == "K_CENTER_GONZALEZ" || t == "GONZALEZ" || t == "KCENTER") return SolverId::kKCenterGonzalez;
  if (t == "K_MEDIAN_LOCAL_SEARCH" || t == "LOCAL_SEARCH" || t == "KMEDIAN") {
    return SolverId::kKMedianLocalSearch;
  }
  if (t == "K_MEANS_LLOYD" || t == "KMEANS" || t == "LLOYD") return SolverId::kKMeansLloyd;
  throw DomainError("unknown solver '" + std::string(text) + "'");
}

std::vector<int> nearest_assignment(const ClusteringInstance& instance, std::vector<int> opened) {
  if (opened.empty()) throw DomainError("no opened facility");
  std::sort(opened.begin(), opened.end());
  std::vector<int> phi(instance.num_clients());
  for (int v = 0; v < instance.num_clients(); ++v) {
    int best = opened.front();
    for (int f : opened) {
      if (instance.distance(v, f) < instance.distance(v, best)) best = f;
    }
    phi[v] = best;
  }
  return phi;
}

VanillaSolution gonzalez_k_center(const ClusteringInstance& instance, int k, std::uint64_t seed,
                                  std::optional<int> first_center) {
  check_k(instance, k);
  int first = 0;
  if (first_center) {
    if (*first_center < 0 || *first_center >= instance.num_facilities()) {
      throw DomainError("first center out of range");
    }
    first = *first_center;
  } else if (instance.facilities_are_clients()) {
    auto rng = make_stream(seed, 0);
    first = std::uniform_int_distribution<int>(0, instance.num_facilities() - 1)(rng);
  }
  std::vector<int> opened{first};
  farthest_point_fill(instance, opened, k);
  return finish(instance, std::move(opened), SolverId::kKCenterGonzalez, seed);
}

namespace {

struct SwapSearch {
  const ClusteringInstance& instance;
  Norm p;
  int n;
  int m;

  double weight(int v, int f) const { return p.power(instance.distance(v, f)); }

  double aggregate(double acc, double w) const { return p.is_infinite() ? std::max(acc, w) : acc + w; }

  double to_cost(double agg) const {
    if (p.is_infinite() || p.exponent() == 1.0) return agg;
    return std::pow(agg, 1.0 / p.exponent());
  }

  double cost_of(const std::vector<int>& opened) const {
    double agg = 0.0;
    for (int v = 0; v < n; ++v) {
      double best = kInf;
      for (int f : opened) best = std::min(best, weight(v, f));
      agg = aggregate(agg, best);
    }
    return to_cost(agg);
  }

  // Cost after swapping opened[slot] for facility `in`, using per-client
  // nearest / second-nearest weights over the current set.
  double swap_cost(const std::vector<int>& opened, int slot, int in, const std::vector<int>& best1,
                   const std::vector<double>& d1, const std::vector<double>& d2) const {
    double agg = 0.0;
    for (int v = 0; v < n; ++v) {
      double w_in = weight(v, in);
      double w = best1[v] == opened[slot] ? std::min(w_in, d2[v]) : std::min(d1[v], w_in);
      agg = aggregate(agg, w);
    }
    return to_cost(agg);
  }

  void nearest_two(const std::vector<int>& opened, std::vector<int>& best1, std::vector<double>& d1,
                   std::vector<double>& d2) const {
    best1.assign(n, -1);
    d1.assign(n, kInf);
    d2.assign(n, kInf);
    for (int v = 0; v < n; ++v) {
      for (int f : opened) {
        double w = weight(v, f);
        if (w < d1[v]) {
          d2[v] = d1[v];
          d1[v] = w;
          best1[v] = f;
        } else if (w < d2[v]) {
          d2[v] = w;
        }
      }
    }
  }

  std::vector<int> d_sampling(int k, std::mt19937_64& rng) const {
    std::vector<char> allowed(m, 1);
    std::vector<double> gap(m, kInf);
    std::vector<int> opened;
    int first = std::uniform_int_distribution<int>(0, m - 1)(rng);
    opened.push_back(first);
    allowed[first] = 0;
    for (int f = 0; f < m; ++f) gap[f] = instance.facility_distance(f, first);
    while (static_cast<int>(opened.size()) < k) {
      int pick = weighted_pick(gap, allowed, rng);
      opened.push_back(pick);
      allowed[pick] = 0;
      for (int f = 0; f < m; ++f) gap[f] = std::min(gap[f], instance.facility_distance(f, pick));
    }
    return opened;
  }
};

}  // namespace

VanillaSolution local_search_k_median(const ClusteringInstance& instance, int k, std::uint64_t seed,
                                      const LocalSearchOptions& options) {
  check_k(instance, k);
  if (options.trials < 1) throw DomainError("local search needs at least one trial");
  SwapSearch search{instance, instance.norm(), instance.num_clients(), instance.num_facilities()};
  const double threshold = 1.0 - options.epsilon / k;

  std::vector<int> best_set;
  double best_cost = kInf;
  for (int trial = 0; trial < options.trials; ++trial) {
    auto rng = make_stream(seed, static_cast<std::uint64_t>(trial));
    std::vector<int> opened = search.d_sampling(k, rng);
    std::vector<char> is_open(search.m, 0);
    for (int f : opened) is_open[f] = 1;
    double cost = search.cost_of(opened);
    std::vector<int> best1;
    std::vector<double> d1, d2;
    while (true) {
      search.nearest_two(opened, best1, d1, d2);
      int swap_slot = -1, swap_in = -1;
      double swap_value = cost;
      for (int slot = 0; slot < k; ++slot) {
        for (int in = 0; in < search.m; ++in) {
          if (is_open[in]) continue;
          double c = search.swap_cost(opened, slot, in, best1, d1, d2);
          if (c < swap_value) {
            swap_value = c;
            swap_slot = slot;
            swap_in = in;
          }
        }
      }
      if (swap_slot < 0 || !(swap_value < threshold * cost)) break;
      is_open[opened[swap_slot]] = 0;
      is_open[swap_in] = 1;
      opened[swap_slot] = swap_in;
      cost = swap_value;
    }
    if (cost < best_cost) {
      best_cost = cost;
      best_set = opened;
    }
  }
  return finish(instance, std::move(best_set), SolverId::kKMedianLocalSearch, seed);
}

VanillaSolution kmeans(const ClusteringInstance& instance, int k, std::uint64_t seed,
                       const KMeansOptions& options) {
  if (!instance.has_coordinates()) {
    throw UnsupportedOperation("k-means needs a coordinate (Euclidean) instance");
  }
  check_k(instance, k);
  const Eigen::MatrixXd& x = instance.client_coordinates();
  const int n = static_cast<int>(x.rows());
  auto rng = make_stream(seed, 0);

  // k-means++ seeding over the clients.
  Eigen::MatrixXd centers(k, x.cols());
  std::vector<char> allowed(n, 1);
  std::vector<double> gap(n, kInf);
  int chosen = 0;
  while (chosen < k) {
    int pick = chosen == 0 ? std::uniform_int_distribution<int>(0, n - 1)(rng)
                           : weighted_pick(gap, allowed, rng);
    allowed[pick] = 0;
    centers.row(chosen++) = x.row(pick);
    for (int v = 0; v < n; ++v) gap[v] = std::min(gap[v], (x.row(v) - x.row(pick)).squaredNorm());
    if (chosen < k && std::none_of(allowed.begin(), allowed.end(), [](char a) { return a; })) {
      // Fewer clients than k: remaining centers duplicate the last one.
      while (chosen < k) centers.row(chosen++) = x.row(pick);
    }
  }

  VanillaSolution out;
  std::vector<int> label(n, 0);
  double previous = kInf;
  for (int iter = 0; iter < options.max_iters; ++iter) {
    double cost = 0.0;
    for (int v = 0; v < n; ++v) {
      int best = 0;
      double bd = (x.row(v) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        double d = (x.row(v) - centers.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      label[v] = best;
      cost += bd;
    }
    out.lloyd_costs.push_back(cost);
    if (cost == 0.0 || (std::isfinite(previous) && (previous - cost) < options.tolerance * previous)) break;
    previous = cost;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    std::vector<int> counts(k, 0);
    for (int v = 0; v < n; ++v) {
      sums.row(label[v]) += x.row(v);
      ++counts[label[v]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) centers.row(c) = sums.row(c) / counts[c];
    }
  }

  // Snap centroids onto F, dedupe, refill by farthest-point additions.
  const Eigen::MatrixXd& fac = instance.facility_coordinates();
  std::vector<int> opened;
  for (int c = 0; c < k; ++c) {
    int best = 0;
    double bd = (fac.row(0) - centers.row(c)).squaredNorm();
    for (int f = 1; f < fac.rows(); ++f) {
      double d = (fac.row(f) - centers.row(c)).squaredNorm();
      if (d < bd) {
        bd = d;
        best = f;
      }
    }
    if (std::find(opened.begin(), opened.end(), best) == opened.end()) opened.push_back(best);
  }
  farthest_point_fill(instance, opened, k);
  VanillaSolution s = finish(instance, std::move(opened), SolverId::kKMeansLloyd, seed);
  s.lloyd_costs = std::move(out.lloyd_costs);
  return s;
}

VanillaSolution solve_vanilla(const ClusteringInstance& instance, SolverId id, std::uint64_t seed) {
  switch (id) {
    case SolverId::kKCenterGonzalez:
      return gonzalez_k_center(instance, instance.k(), seed);
    case SolverId::kKMedianLocalSearch:
      return local_search_k_median(instance, instance.k(), seed);
    case SolverId::kKMeansLloyd:
      return kmeans(instance, instance.k(), seed);
  }
  throw DomainError("unknown solver");
}

}  // namespace faircluster
