#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "faircluster/instance.hpp"

namespace faircluster {

enum class SolverId { kKCenterGonzalez, kKMedianLocalSearch, kKMeansLloyd };

const char* to_string(SolverId id);
SolverId parse_solver_id(std::string_view text);

struct VanillaSolution {
  std::vector<int> opened;
  std::vector<int> phi;
  double cost = 0.0;
  SolverId solver = SolverId::kKCenterGonzalez;
  std::uint64_t seed = 0;
  // Lloyd objective (sum of squared distances to centroids) per iteration.
  std::vector<double> lloyd_costs;

  Assignment assignment(const ClusteringInstance& instance) const {
    return Assignment(instance, opened, phi);
  }
};

// Every client to its closest opened facility, ties to the lowest index.
std::vector<int> nearest_assignment(const ClusteringInstance& instance, std::vector<int> opened);

// Farthest-point traversal. The first center is drawn from the seed when
// F = C and is facility 0 otherwise, unless `first_center` is given.
VanillaSolution gonzalez_k_center(const ClusteringInstance& instance, int k, std::uint64_t seed,
                                  std::optional<int> first_center = std::nullopt);

struct LocalSearchOptions {
  int trials = 5;
  double epsilon = 1e-3;
};

// Single-swap local search from D-sampling seeds, best of `trials` runs.
// Minimizes the instance's l_p objective.
VanillaSolution local_search_k_median(const ClusteringInstance& instance, int k, std::uint64_t seed,
                                      const LocalSearchOptions& options = {});

struct KMeansOptions {
  int max_iters = 300;
  double tolerance = 1e-6;
};

// k-means++ seeding, Lloyd iterations, then centroids snapped onto F.
VanillaSolution kmeans(const ClusteringInstance& instance, int k, std::uint64_t seed,
                       const KMeansOptions& options = {});

VanillaSolution solve_vanilla(const ClusteringInstance& instance, SolverId id, std::uint64_t seed);

}  // namespace faircluster
