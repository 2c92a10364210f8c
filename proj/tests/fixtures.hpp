#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "faircluster/instance.hpp"

namespace fixtures {

struct TinySpec {
  int n = 8;
  int facilities = 4;  // 0 means F = C
  int k = 2;
  int groups = 2;
  int delta = 1;
  faircluster::Norm p = faircluster::Norm::finite(1.0);
};

// Groups over n clients: Delta = 1 splits clients into `count` classes;
// Delta = 2 builds two independent attributes whose classes are all groups.
inline std::vector<std::vector<int>> random_groups(std::mt19937_64& rng, int n, int count, int delta) {
  auto partition = [&](int classes) {
    std::vector<int> label(n);
    for (int v = 0; v < n; ++v) label[v] = v < classes ? v : static_cast<int>(rng() % classes);
    std::shuffle(label.begin(), label.end(), rng);
    std::vector<std::vector<int>> out(classes);
    for (int v = 0; v < n; ++v) out[label[v]].push_back(v);
    return out;
  };
  if (delta == 1) return partition(count);
  int first = std::max(1, count / 2);
  auto a = partition(first);
  auto b = partition(count - first);
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Points drawn uniformly from a square, so distance ties have probability 0.
inline faircluster::ClusteringInstance random_instance(std::mt19937_64& rng, const TinySpec& spec) {
  std::uniform_real_distribution<double> u(0.0, 10.0);
  Eigen::MatrixXd clients(spec.n, 2);
  for (int v = 0; v < spec.n; ++v) clients.row(v) << u(rng), u(rng);
  auto groups = random_groups(rng, spec.n, spec.groups, spec.delta);
  if (spec.facilities == 0) {
    return faircluster::ClusteringInstance::from_coordinates(clients, groups, spec.k, spec.p);
  }
  Eigen::MatrixXd fac(spec.facilities, 2);
  for (int f = 0; f < spec.facilities; ++f) fac.row(f) << u(rng), u(rng);
  return faircluster::ClusteringInstance::from_coordinates(clients, groups, spec.k, spec.p, fac);
}

// Integer points on a small grid with L1 distances: integral, tie-prone costs.
inline faircluster::ClusteringInstance integer_instance(std::mt19937_64& rng, int n, int facilities, int k,
                                                        faircluster::Norm p) {
  const int total = n + facilities;
  std::vector<std::pair<int, int>> pts(total);
  for (auto& q : pts) q = {static_cast<int>(rng() % 9), static_cast<int>(rng() % 9)};
  Eigen::MatrixXd d(total, total);
  for (int a = 0; a < total; ++a) {
    for (int b = 0; b < total; ++b) {
      d(a, b) = std::abs(pts[a].first - pts[b].first) + std::abs(pts[a].second - pts[b].second);
    }
  }
  std::vector<std::vector<int>> groups(1);
  for (int v = 0; v < n; ++v) groups[0].push_back(v);
  return faircluster::ClusteringInstance::from_distance_matrix(d, n, groups, k, p);
}

inline faircluster::Norm norm_of(int code) {
  return code == 0 ? faircluster::Norm::infinity() : faircluster::Norm::finite(code);
}

}  // namespace fixtures
