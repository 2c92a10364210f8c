#include "faircluster/instance.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "faircluster/errors.hpp"

namespace faircluster {

Norm Norm::finite(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw DomainError("norm exponent must be a finite p >= 1");
  return Norm(p, false);
}

Norm Norm::parse(std::string_view text) {
  std::string lower(text);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "inf" || lower == "infinity") return infinity();
  double p = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), p);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DomainError("cannot parse norm '" + std::string(text) + "'");
  }
  return finite(p);
}

std::string Norm::to_string() const {
  if (infinite_) return "inf";
  std::ostringstream s;
  s << p_;
  return s.str();
}

double Norm::power(double d) const {
  if (infinite_ || p_ == 1.0) return d;
  if (p_ == 2.0) return d * d;
  return std::pow(d, p_);
}

namespace {

Eigen::MatrixXd euclidean(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd d(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) d(i, j) = (a.row(i) - b.row(j)).norm();
  }
  return d;
}

}  // namespace

ClusteringInstance::ClusteringInstance(std::shared_ptr<const Data> data, int k, Norm p)
    : data_(std::move(data)), k_(k), norm_(p) {
  if (k_ < 1 || k_ > num_facilities()) {
    throw DomainError("k = " + std::to_string(k_) + " must lie in [1, |F| = " +
                      std::to_string(num_facilities()) + "]");
  }
}

std::shared_ptr<ClusteringInstance::Data> ClusteringInstance::with_groups(
    std::shared_ptr<Data> data, std::vector<std::vector<int>> groups) {
  const int n = static_cast<int>(data->client_facility.rows());
  if (n == 0) throw DomainError("instance has no clients");
  if (data->client_facility.cols() == 0) throw DomainError("instance has no facilities");
  if (groups.empty()) throw DomainError("at least one group is required");
  data->client_groups.assign(n, {});
  for (std::size_t i = 0; i < groups.size(); ++i) {
    auto& g = groups[i];
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    if (g.empty()) throw DomainError("group " + std::to_string(i) + " is empty");
    if (g.front() < 0 || g.back() >= n) {
      throw DomainError("group " + std::to_string(i) + " references a client outside C");
    }
    for (int v : g) data->client_groups[v].push_back(static_cast<int>(i));
  }
  data->delta = 0;
  for (const auto& cg : data->client_groups) data->delta = std::max<int>(data->delta, cg.size());
  data->groups = std::move(groups);
  return data;
}

ClusteringInstance ClusteringInstance::from_coordinates(Eigen::MatrixXd clients,
                                                        std::vector<std::vector<int>> groups, int k,
                                                        Norm p,
                                                        std::optional<Eigen::MatrixXd> facilities) {
  if (!clients.allFinite()) throw DomainError("client coordinates must be finite");
  auto data = std::make_shared<Data>();
  if (facilities) {
    if (facilities->cols() != clients.cols()) {
      throw DomainError("facility and client coordinates differ in dimension");
    }
    if (!facilities->allFinite()) throw DomainError("facility coordinates must be finite");
    data->client_facility = euclidean(clients, *facilities);
    data->facility_facility = euclidean(*facilities, *facilities);
    data->facility_coords = std::move(*facilities);
    data->facilities_are_clients = false;
  } else {
    data->client_facility = euclidean(clients, clients);
    data->facility_facility = data->client_facility;
    data->facility_coords = clients;
  }
  data->client_coords = std::move(clients);
  return ClusteringInstance(with_groups(std::move(data), std::move(groups)), k, p);
}

ClusteringInstance ClusteringInstance::from_distance_matrix(const Eigen::MatrixXd& d, int num_clients,
                                                            std::vector<std::vector<int>> groups,
                                                            int k, Norm p, MetricCheck check) {
  const Eigen::Index total = d.rows();
  if (d.cols() != total) throw DomainError("distance matrix must be square");
  if (num_clients < 1 || num_clients > total) throw DomainError("bad client count for distance matrix");
  for (Eigen::Index i = 0; i < total; ++i) {
    if (d(i, i) != 0.0) throw DomainError("distance matrix must have a zero diagonal");
    for (Eigen::Index j = 0; j < total; ++j) {
      if (!std::isfinite(d(i, j)) || d(i, j) < 0.0) {
        throw DomainError("distances must be finite and non-negative");
      }
      if (d(i, j) != d(j, i)) throw DomainError("distance matrix must be symmetric");
    }
  }
  bool triangle = check == MetricCheck::kAlways || (check == MetricCheck::kAuto && total <= 500);
  if (triangle) {
    for (Eigen::Index i = 0; i < total; ++i) {
      for (Eigen::Index j = 0; j < total; ++j) {
        for (Eigen::Index m = 0; m < total; ++m) {
          if (d(i, j) > d(i, m) + d(m, j) + 1e-9) {
            throw DomainError("triangle inequality fails for (" + std::to_string(i) + ", " +
                              std::to_string(j) + ") via " + std::to_string(m));
          }
        }
      }
    }
  }
  auto data = std::make_shared<Data>();
  if (total == num_clients) {
    data->client_facility = d;
    data->facility_facility = d;
  } else {
    const Eigen::Index nf = total - num_clients;
    data->client_facility = d.block(0, num_clients, num_clients, nf);
    data->facility_facility = d.block(num_clients, num_clients, nf, nf);
    data->facilities_are_clients = false;
  }
  return ClusteringInstance(with_groups(std::move(data), std::move(groups)), k, p);
}

double ClusteringInstance::group_ratio(int i) const {
  return static_cast<double>(data_->groups[i].size()) / num_clients();
}

const Eigen::MatrixXd& ClusteringInstance::client_coordinates() const {
  if (!data_->client_coords) throw UnsupportedOperation("instance has no coordinates");
  return *data_->client_coords;
}

const Eigen::MatrixXd& ClusteringInstance::facility_coordinates() const {
  if (!data_->facility_coords) throw UnsupportedOperation("instance has no coordinates");
  return *data_->facility_coords;
}

ClusteringInstance ClusteringInstance::with_k(int k) const { return ClusteringInstance(data_, k, norm_); }

ClusteringInstance ClusteringInstance::with_norm(Norm p) const { return ClusteringInstance(data_, k_, p); }

FairnessProfile::FairnessProfile(std::vector<double> alpha, std::vector<double> beta)
    : alpha_(std::move(alpha)), beta_(std::move(beta)) {
  if (alpha_.size() != beta_.size()) throw DomainError("alpha and beta differ in length");
  for (std::size_t i = 0; i < alpha_.size(); ++i) {
    if (!(beta_[i] >= 0.0 && beta_[i] <= alpha_[i] && alpha_[i] <= 1.0)) {
      throw DomainError("group " + std::to_string(i) + ": need 0 <= beta <= alpha <= 1");
    }
  }
}

FairnessProfile FairnessProfile::vacuous(int num_groups) {
  return FairnessProfile(std::vector<double>(num_groups, 1.0), std::vector<double>(num_groups, 0.0));
}

bool FairnessProfile::is_vacuous() const {
  return std::all_of(alpha_.begin(), alpha_.end(), [](double a) { return a == 1.0; }) &&
         std::all_of(beta_.begin(), beta_.end(), [](double b) { return b == 0.0; });
}

FairnessProfile delta_to_profile(const ClusteringInstance& instance, double delta) {
  if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("delta must lie in [0, 1)");
  std::vector<double> alpha, beta;
  for (int i = 0; i < instance.num_groups(); ++i) {
    double r = instance.group_ratio(i);
    beta.push_back(r * (1.0 - delta));
    alpha.push_back(std::min(1.0, r / (1.0 - delta)));
  }
  return FairnessProfile(std::move(alpha), std::move(beta));
}

double lp_norm(std::span<const double> distances, Norm p) {
  if (p.is_infinite()) {
    double worst = 0.0;
    for (double d : distances) worst = std::max(worst, d);
    return worst;
  }
  // Neumaier summation of d^p.
  double sum = 0.0, carry = 0.0;
  for (double d : distances) {
    double term = p.power(d);
    double t = sum + term;
    if (std::abs(sum) >= std::abs(term)) {
      carry += (sum - t) + term;
    } else {
      carry += (term - t) + sum;
    }
    sum = t;
  }
  sum += carry;
  if (p.exponent() == 1.0) return sum;
  if (p.exponent() == 2.0) return std::sqrt(sum);
  return std::pow(sum, 1.0 / p.exponent());
}

double lp_norm_cost(const ClusteringInstance& instance, std::span<const int> opened,
                    std::span<const int> phi, Norm p) {
  if (opened.empty()) throw DomainError("no opened facility");
  if (static_cast<int>(phi.size()) != instance.num_clients()) {
    throw DomainError("assignment must cover every client");
  }
  std::vector<char> is_open(instance.num_facilities(), 0);
  for (int f : opened) {
    if (f < 0 || f >= instance.num_facilities()) throw DomainError("opened facility out of range");
    is_open[f] = 1;
  }
  std::vector<double> d(phi.size());
  for (std::size_t v = 0; v < phi.size(); ++v) {
    int f = phi[v];
    if (f < 0 || f >= instance.num_facilities() || !is_open[f]) {
      throw DomainError("client " + std::to_string(v) + " is assigned to a facility that is not open");
    }
    d[v] = instance.distance(static_cast<int>(v), f);
  }
  return lp_norm(d, p);
}

Assignment::Assignment(const ClusteringInstance& instance, std::vector<int> opened, std::vector<int> phi)
    : opened_(std::move(opened)), phi_(std::move(phi)) {
  std::sort(opened_.begin(), opened_.end());
  if (std::adjacent_find(opened_.begin(), opened_.end()) != opened_.end()) {
    throw DomainError("opened facilities must be distinct");
  }
  if (static_cast<int>(opened_.size()) > instance.k()) {
    throw DomainError("more than k facilities opened");
  }
  cost_ = lp_norm_cost(instance, opened_, phi_, instance.norm());
}

ClusterCounts cluster_counts(const ClusteringInstance& instance, const Assignment& assignment) {
  ClusterCounts c;
  c.facility = assignment.opened();
  const std::size_t s = c.facility.size();
  c.size.assign(s, 0);
  c.group_count.assign(s, std::vector<int>(instance.num_groups(), 0));
  std::vector<int> slot(instance.num_facilities(), -1);
  for (std::size_t j = 0; j < s; ++j) slot[c.facility[j]] = static_cast<int>(j);
  for (int v = 0; v < instance.num_clients(); ++v) {
    int j = slot[assignment[v]];
    ++c.size[j];
    for (int g : instance.groups_of(v)) ++c.group_count[j][g];
  }
  return c;
}

std::map<int, double> balance(const ClusteringInstance& instance, const Assignment& assignment) {
  ClusterCounts c = cluster_counts(instance, assignment);
  std::map<int, double> out;
  for (std::size_t j = 0; j < c.facility.size(); ++j) {
    if (c.size[j] == 0) continue;
    double b = 1.0;
    for (int i = 0; i < instance.num_groups(); ++i) {
      double r = instance.group_ratio(i);
      double rf = static_cast<double>(c.group_count[j][i]) / c.size[j];
      if (rf == 0.0) {
        b = 0.0;
        break;
      }
      b = std::min({b, r / rf, rf / r});
    }
    out[c.facility[j]] = b;
  }
  return out;
}

double additive_violation(const ClusteringInstance& instance, const FairnessProfile& profile,
                          const Assignment& assignment) {
  if (profile.num_groups() != instance.num_groups()) throw DomainError("profile/group count mismatch");
  ClusterCounts c = cluster_counts(instance, assignment);
  double worst = 0.0;
  for (std::size_t j = 0; j < c.facility.size(); ++j) {
    if (c.size[j] == 0) continue;
    for (int i = 0; i < instance.num_groups(); ++i) {
      double count = c.group_count[j][i];
      worst = std::max({worst, count - profile.alpha(i) * c.size[j], profile.beta(i) * c.size[j] - count});
    }
  }
  // alpha * |C(f)| carries rounding from the ratio; counts are integers.
  return worst <= 1e-9 ? 0.0 : worst;
}

FairnessReport make_report(const ClusteringInstance& instance, const FairnessProfile& profile,
                           const Assignment& vanilla, const Assignment& fair,
                           std::vector<PhaseTiming> timings) {
  FairnessReport r;
  r.counts = cluster_counts(instance, fair);
  r.balance = balance(instance, fair);
  r.min_balance = 1.0;
  for (const auto& [f, b] : r.balance) r.min_balance = std::min(r.min_balance, b);
  r.lambda_max = additive_violation(instance, profile, fair);
  r.vanilla_cost = vanilla.cost();
  r.fair_cost = fair.cost();
  if (vanilla.cost() > 0.0) {
    r.cost_of_fairness = fair.cost() / vanilla.cost();
  } else {
    r.cost_of_fairness = fair.cost() == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  r.timings = std::move(timings);
  return r;
}

}  // namespace faircluster
