#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace faircluster {

// The l_p objective selector: a finite exponent p >= 1 or the max norm.
class Norm {
 public:
  static Norm finite(double p);
  static Norm infinity() { return Norm(0.0, true); }
  // Accepts "1", "2", "1.5", "inf", "infinity".
  static Norm parse(std::string_view text);

  bool is_infinite() const { return infinite_; }
  double exponent() const { return p_; }
  std::string to_string() const;

  // d^p for finite p; d itself for the max norm.
  double power(double d) const;

  friend bool operator==(const Norm&, const Norm&) = default;

 private:
  Norm(double p, bool inf) : p_(p), infinite_(inf) {}
  double p_;
  bool infinite_;
};

enum class MetricCheck { kAuto, kAlways, kNever };

// Clients C, candidate facilities F, a metric over C u F, overlapping
// protected groups C_1..C_l, the budget k and the norm p. Immutable; copies
// share the underlying distance tables.
class ClusteringInstance {
 public:
  // Euclidean instance. When `facilities` is empty, F = C.
  static ClusteringInstance from_coordinates(Eigen::MatrixXd clients,
                                             std::vector<std::vector<int>> groups, int k, Norm p,
                                             std::optional<Eigen::MatrixXd> facilities = std::nullopt);

  // Explicit metric over C u F: indices [0, num_clients) are clients and the
  // remainder facilities. A square matrix of size num_clients means F = C.
  // Symmetry, zero diagonal and non-negativity are always checked; the O(N^3)
  // triangle check runs for kAlways, or for kAuto when N <= 500.
  static ClusteringInstance from_distance_matrix(const Eigen::MatrixXd& distances, int num_clients,
                                                 std::vector<std::vector<int>> groups, int k, Norm p,
                                                 MetricCheck check = MetricCheck::kAuto);

  int num_clients() const { return static_cast<int>(data_->client_facility.rows()); }
  int num_facilities() const { return static_cast<int>(data_->client_facility.cols()); }
  int num_groups() const { return static_cast<int>(data_->groups.size()); }
  int k() const { return k_; }
  Norm norm() const { return norm_; }
  bool facilities_are_clients() const { return data_->facilities_are_clients; }

  // Max number of groups containing any one client.
  int max_groups_per_client() const { return data_->delta; }

  double distance(int client, int facility) const { return data_->client_facility(client, facility); }
  double facility_distance(int f, int g) const { return data_->facility_facility(f, g); }
  const Eigen::MatrixXd& client_facility_distances() const { return data_->client_facility; }

  const std::vector<int>& group(int i) const { return data_->groups[i]; }
  const std::vector<std::vector<int>>& groups() const { return data_->groups; }
  const std::vector<int>& groups_of(int client) const { return data_->client_groups[client]; }
  // r_i = |C_i| / |C|.
  double group_ratio(int i) const;

  bool has_coordinates() const { return data_->client_coords.has_value(); }
  const Eigen::MatrixXd& client_coordinates() const;
  const Eigen::MatrixXd& facility_coordinates() const;

  ClusteringInstance with_k(int k) const;
  ClusteringInstance with_norm(Norm p) const;

 private:
  struct Data {
    Eigen::MatrixXd client_facility;
    Eigen::MatrixXd facility_facility;
    std::optional<Eigen::MatrixXd> client_coords;
    std::optional<Eigen::MatrixXd> facility_coords;
    bool facilities_are_clients = true;
    std::vector<std::vector<int>> groups;
    std::vector<std::vector<int>> client_groups;
    int delta = 0;
  };

  ClusteringInstance(std::shared_ptr<const Data> data, int k, Norm p);
  static std::shared_ptr<Data> with_groups(std::shared_ptr<Data> data,
                                           std::vector<std::vector<int>> groups);

  std::shared_ptr<const Data> data_;
  int k_;
  Norm norm_;
};

// Per-group fairness bounds: beta_i <= |C_i(f)| / |C(f)| <= alpha_i.
class FairnessProfile {
 public:
  FairnessProfile(std::vector<double> alpha, std::vector<double> beta);
  // alpha = 1, beta = 0 for every group.
  static FairnessProfile vacuous(int num_groups);

  int num_groups() const { return static_cast<int>(alpha_.size()); }
  double alpha(int i) const { return alpha_[i]; }
  double beta(int i) const { return beta_[i]; }
  const std::vector<double>& alphas() const { return alpha_; }
  const std::vector<double>& betas() const { return beta_; }
  bool is_vacuous() const;

 private:
  std::vector<double> alpha_;
  std::vector<double> beta_;
};

// beta_i = r_i (1 - delta), alpha_i = min(1, r_i / (1 - delta)).
FairnessProfile delta_to_profile(const ClusteringInstance& instance, double delta);

// (sum_v d(v, phi(v))^p)^(1/p), or max_v d(v, phi(v)) for the max norm.
// Finite p uses compensated summation.
double lp_norm_cost(const ClusteringInstance& instance, std::span<const int> opened,
                    std::span<const int> phi, Norm p);

// Norm of an arbitrary non-negative distance vector.
double lp_norm(std::span<const double> distances, Norm p);

// Opened facilities S and a total map phi: C -> S. The cost is computed at
// construction with the instance's norm.
class Assignment {
 public:
  Assignment(const ClusteringInstance& instance, std::vector<int> opened, std::vector<int> phi);

  const std::vector<int>& opened() const { return opened_; }
  const std::vector<int>& phi() const { return phi_; }
  int operator[](int client) const { return phi_[client]; }
  double cost() const { return cost_; }

 private:
  std::vector<int> opened_;
  std::vector<int> phi_;
  double cost_;
};

// Per opened facility: |C(f)| and |C_i(f)| for every group.
struct ClusterCounts {
  std::vector<int> facility;
  std::vector<int> size;
  std::vector<std::vector<int>> group_count;  // [cluster][group]
};

ClusterCounts cluster_counts(const ClusteringInstance& instance, const Assignment& assignment);

// Balance of every non-empty cluster, keyed by facility index.
std::map<int, double> balance(const ClusteringInstance& instance, const Assignment& assignment);

// Smallest lambda >= 0 with beta_i |C(f)| - lambda <= |C_i(f)| <= alpha_i |C(f)| + lambda.
double additive_violation(const ClusteringInstance& instance, const FairnessProfile& profile,
                          const Assignment& assignment);

struct PhaseTiming {
  std::string phase;
  double milliseconds;
};

struct FairnessReport {
  ClusterCounts counts;
  std::map<int, double> balance;
  double min_balance = 0.0;
  double lambda_max = 0.0;
  double vanilla_cost = 0.0;
  double fair_cost = 0.0;
  double cost_of_fairness = 0.0;
  std::vector<PhaseTiming> timings;
};

FairnessReport make_report(const ClusteringInstance& instance, const FairnessProfile& profile,
                           const Assignment& vanilla, const Assignment& fair,
                           std::vector<PhaseTiming> timings = {});

}  // namespace faircluster
