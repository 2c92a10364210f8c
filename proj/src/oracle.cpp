#include "faircluster/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "faircluster/errors.hpp"
#include "faircluster/lp.hpp"

namespace faircluster {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCountTol = 1e-9;

double binomial(int n, int r) {
  if (r < 0 || r > n) return 0.0;
  double b = 1.0;
  for (int i = 1; i <= r; ++i) b = b * (n - r + i) / i;
  return b;
}

// All size-r subsets of {0..m-1} in lexicographic order (reversed on request).
std::vector<std::vector<int>> subsets(int m, int r, EnumerationOrder order) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(r);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == r) {
      out.push_back(cur);
      return;
    }
    for (int f = start; f < m; ++f) {
      cur[depth] = f;
      rec(f + 1, depth + 1);
    }
  };
  rec(0, 0);
  if (order == EnumerationOrder::kReverse) std::reverse(out.begin(), out.end());
  return out;
}

// Visits every map C -> {0..s-1} as an odometer while maintaining cluster
// sizes and per-group counts incrementally. Forward runs digit 0 fastest
// upward; reverse runs digit n-1 fastest downward.
class MapEnumerator {
 public:
  MapEnumerator(const ClusteringInstance& inst, int slots, EnumerationOrder order)
      : inst_(inst), n_(inst.num_clients()), s_(slots), order_(order) {
    digit_.assign(n_, order == EnumerationOrder::kForward ? 0 : s_ - 1);
    size_.assign(s_, 0);
    count_.assign(s_, std::vector<int>(inst.num_groups(), 0));
    for (int v = 0; v < n_; ++v) place(v, digit_[v], +1);
  }

  const std::vector<int>& digits() const { return digit_; }
  int size(int slot) const { return size_[slot]; }
  int count(int slot, int group) const { return count_[slot][group]; }

  bool next() {
    const bool fwd = order_ == EnumerationOrder::kForward;
    for (int step = 0; step < n_; ++step) {
      int v = fwd ? step : n_ - 1 - step;
      place(v, digit_[v], -1);
      if (fwd ? digit_[v] + 1 < s_ : digit_[v] > 0) {
        digit_[v] += fwd ? 1 : -1;
        place(v, digit_[v], +1);
        return true;
      }
      digit_[v] = fwd ? 0 : s_ - 1;
      place(v, digit_[v], +1);
    }
    return false;
  }

 private:
  void place(int v, int slot, int sign) {
    size_[slot] += sign;
    for (int g : inst_.groups_of(v)) count_[slot][g] += sign;
  }

  const ClusteringInstance& inst_;
  int n_;
  int s_;
  EnumerationOrder order_;
  std::vector<int> digit_;
  std::vector<int> size_;
  std::vector<std::vector<int>> count_;
};

double violation(const MapEnumerator& e, int slots, const FairnessProfile& profile) {
  double worst = 0.0;
  for (int j = 0; j < slots; ++j) {
    if (e.size(j) == 0) continue;
    for (int i = 0; i < profile.num_groups(); ++i) {
      double c = e.count(j, i);
      worst = std::max({worst, c - profile.alpha(i) * e.size(j), profile.beta(i) * e.size(j) - c});
    }
  }
  return worst;
}

// sum d^p (or max) of mapping client v to opened[digits[v]], in client order.
double aggregate(const ClusteringInstance& inst, const std::vector<int>& opened, const std::vector<int>& digits) {
  const Norm p = inst.norm();
  double agg = 0.0;
  for (int v = 0; v < inst.num_clients(); ++v) {
    double w = p.power(inst.distance(v, opened[digits[v]]));
    agg = p.is_infinite() ? std::max(agg, w) : agg + w;
  }
  return agg;
}

Witness make_witness(const ClusteringInstance& inst, const std::vector<int>& opened, const std::vector<int>& digits) {
  Witness w;
  w.opened = opened;
  w.phi.resize(digits.size());
  for (std::size_t v = 0; v < digits.size(); ++v) w.phi[v] = opened[digits[v]];
  w.cost = lp_norm_cost(inst, opened, w.phi, inst.norm());
  return w;
}

struct Best {
  double agg = kInf;
  std::optional<Witness> witness;

  void offer(const ClusteringInstance& inst, const std::vector<int>& opened, const std::vector<int>& digits,
             double agg_value) {
    if (agg_value < agg) {
      agg = agg_value;
      witness = make_witness(inst, opened, digits);
    }
  }
};

void check_guard(double states, double guard, const char* what) {
  if (states > guard) {
    throw GuardExceeded(std::string(what) + ": " + std::to_string(states) + " states exceed the guard " +
                            std::to_string(guard),
                        states);
  }
}

}  // namespace

double fair_state_count(const ClusteringInstance& instance) {
  const int k = std::min(instance.k(), instance.num_facilities());
  return binomial(instance.num_facilities(), k) * std::pow(static_cast<double>(k), instance.num_clients());
}

bool is_exactly_fair(const ClusteringInstance& instance, const FairnessProfile& profile,
                     const std::vector<int>& phi) {
  std::vector<int> opened(phi.begin(), phi.end());
  std::sort(opened.begin(), opened.end());
  opened.erase(std::unique(opened.begin(), opened.end()), opened.end());
  Assignment a(instance.with_k(static_cast<int>(opened.size())), opened, phi);
  return additive_violation(instance, profile, a) <= kCountTol;
}

// Only |S| = k is enumerated: maps onto a k-set that leave facilities empty
// already cover every smaller S.
OracleResult brute_force_fair(const ClusteringInstance& instance, const FairnessProfile& profile, double guard,
                              EnumerationOrder order) {
  check_guard(fair_state_count(instance), guard, "brute_force_fair");
  const int k = std::min(instance.k(), instance.num_facilities());
  Best vnll, fair;
  for (const auto& opened : subsets(instance.num_facilities(), k, order)) {
    MapEnumerator e(instance, k, order);
    std::vector<int> nearest(instance.num_clients());
    for (int v = 0; v < instance.num_clients(); ++v) {
      int best = 0;
      for (int j = 1; j < k; ++j) {
        if (instance.distance(v, opened[j]) < instance.distance(v, opened[best])) best = j;
      }
      nearest[v] = best;
    }
    vnll.offer(instance, opened, nearest, aggregate(instance, opened, nearest));
    do {
      if (violation(e, k, profile) > kCountTol) continue;
      double agg = aggregate(instance, opened, e.digits());
      fair.offer(instance, opened, e.digits(), agg);
    } while (e.next());
  }
  OracleResult r;
  r.vnll = vnll.witness;
  r.fair = fair.witness;
  r.fair_infeasible = !fair.witness.has_value();
  return r;
}

OracleResult brute_force_assignment(const ClusteringInstance& instance, std::vector<int> opened,
                                    const FairnessProfile& profile, std::optional<double> lambda, double guard,
                                    EnumerationOrder order) {
  std::sort(opened.begin(), opened.end());
  if (opened.empty()) throw DomainError("brute_force_assignment needs a facility");
  const int s = static_cast<int>(opened.size());
  check_guard(std::pow(static_cast<double>(s), instance.num_clients()), guard, "brute_force_assignment");
  Best exact, relaxed;
  MapEnumerator e(instance, s, order);
  do {
    double viol = violation(e, s, profile);
    bool is_exact = viol <= kCountTol;
    bool within = lambda && viol <= *lambda + kCountTol;
    if (!is_exact && !within) continue;
    double agg = aggregate(instance, opened, e.digits());
    if (is_exact) exact.offer(instance, opened, e.digits(), agg);
    if (within) relaxed.offer(instance, opened, e.digits(), agg);
  } while (e.next());
  OracleResult r;
  r.asgn = exact.witness;
  r.lambda_asgn = relaxed.witness;
  r.fair_infeasible = !exact.witness.has_value();
  return r;
}

OracleResult brute_force_lower_bounded(const ClusteringInstance& instance, int lower_bound, double guard,
                                       EnumerationOrder order) {
  check_guard(fair_state_count(instance), guard, "brute_force_lower_bounded");
  const int k = std::min(instance.k(), instance.num_facilities());
  Best best;
  for (const auto& opened : subsets(instance.num_facilities(), k, order)) {
    MapEnumerator e(instance, k, order);
    do {
      bool ok = true;
      for (int j = 0; j < k && ok; ++j) ok = e.size(j) == 0 || e.size(j) >= lower_bound;
      if (!ok) continue;
      best.offer(instance, opened, e.digits(), aggregate(instance, opened, e.digits()));
    } while (e.next());
  }
  OracleResult r;
  if (best.witness) {
    // Report only the facilities actually used.
    Witness w = *best.witness;
    std::vector<int> used(w.phi.begin(), w.phi.end());
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    w.opened = used;
    r.lbnd = w;
  }
  return r;
}

std::optional<Witness> brute_force_lb_assignment(const ClusteringInstance& instance,
                                                 const std::vector<int>& facilities, int lower_bound,
                                                 double guard) {
  const int s = static_cast<int>(facilities.size());
  check_guard(std::pow(static_cast<double>(s), instance.num_clients()), guard, "brute_force_lb_assignment");
  std::vector<int> opened = facilities;
  std::sort(opened.begin(), opened.end());
  Best best;
  MapEnumerator e(instance, s, EnumerationOrder::kForward);
  do {
    bool ok = true;
    for (int j = 0; j < s && ok; ++j) ok = e.size(j) >= lower_bound;
    if (ok) best.offer(instance, opened, e.digits(), aggregate(instance, opened, e.digits()));
  } while (e.next());
  if (best.witness) {
    best.witness->cost = lp_norm_cost(instance.with_k(std::max(instance.k(), s)), opened, best.witness->phi,
                                      instance.norm());
  }
  return best.witness;
}

double almost_fair_lp(const ClusteringInstance& instance, const FairnessProfile& profile, double lambda) {
  const Norm p = instance.norm();
  if (p.is_infinite()) throw DomainError("almost_fair_lp needs a finite norm");
  if (lambda < 0.0) throw DomainError("lambda must be non-negative");
  const int n = instance.num_clients();
  const int m = instance.num_facilities();
  double dmax = instance.client_facility_distances().maxCoeff();
  double scale = dmax > 0.0 ? dmax : 1.0;

  lp::LpModel model;
  std::vector<int> y(m);
  std::vector<std::vector<int>> x(n, std::vector<int>(m));
  for (int f = 0; f < m; ++f) y[f] = model.add_variable(0.0, 1.0, 0.0);
  for (int v = 0; v < n; ++v) {
    for (int f = 0; f < m; ++f) x[v][f] = model.add_variable(0.0, 1.0, p.power(instance.distance(v, f) / scale));
  }
  for (int v = 0; v < n; ++v) {
    std::vector<lp::Term> row;
    for (int f = 0; f < m; ++f) row.push_back({x[v][f], 1.0});
    model.add_constraint(std::move(row), lp::Sense::kEqual, 1.0);
    for (int f = 0; f < m; ++f) model.add_constraint({{x[v][f], 1.0}, {y[f], -1.0}}, lp::Sense::kLessEqual, 0.0);
  }
  {
    std::vector<lp::Term> row;
    for (int f = 0; f < m; ++f) row.push_back({y[f], 1.0});
    model.add_constraint(std::move(row), lp::Sense::kLessEqual, static_cast<double>(instance.k()));
  }
  std::vector<char> member(n);
  for (int i = 0; i < instance.num_groups(); ++i) {
    std::fill(member.begin(), member.end(), 0);
    for (int v : instance.group(i)) member[v] = 1;
    for (int f = 0; f < m; ++f) {
      std::vector<lp::Term> rd, mp;
      for (int v = 0; v < n; ++v) {
        rd.push_back({x[v][f], (member[v] ? 1.0 : 0.0) - profile.alpha(i)});
        mp.push_back({x[v][f], (member[v] ? 1.0 : 0.0) - profile.beta(i)});
      }
      model.add_constraint(std::move(rd), lp::Sense::kLessEqual, lambda);
      model.add_constraint(std::move(mp), lp::Sense::kGreaterEqual, -lambda);
    }
  }
  lp::LpSolution sol = lp::solve_lp(model);
  if (sol.status != lp::LpStatus::kOptimal) {
    throw SolverError(std::string("almost-fair LP returned ") + lp::to_string(sol.status));
  }
  double total = std::max(0.0, sol.objective) * p.power(scale);
  if (p.exponent() == 1.0) return total;
  return std::pow(total, 1.0 / p.exponent());
}

}  // namespace faircluster
