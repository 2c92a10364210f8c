#include <doctest.h>

#include <cmath>
#include <random>

#include "faircluster/errors.hpp"
#include "faircluster/instance.hpp"
#include "fixtures.hpp"

using namespace faircluster;

namespace {

ClusteringInstance line_instance(std::vector<double> xs, std::vector<std::vector<int>> groups, int k,
                                 Norm p = Norm::finite(1.0)) {
  Eigen::MatrixXd c(static_cast<int>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) c(static_cast<int>(i), 0) = xs[i];
  return ClusteringInstance::from_coordinates(c, std::move(groups), k, p);
}

}  // namespace

TEST_CASE("norm parsing and powers") {
  CHECK(Norm::parse("inf").is_infinite());
  CHECK(Norm::parse("Infinity").is_infinite());
  CHECK(Norm::parse("2").exponent() == 2.0);
  CHECK(Norm::parse("1.5").exponent() == 1.5);
  CHECK_THROWS_AS(Norm::parse("0.5"), DomainError);
  CHECK_THROWS_AS(Norm::parse("abc"), DomainError);
  CHECK(Norm::finite(2).power(3.0) == 9.0);
  CHECK(Norm::infinity().power(3.0) == 3.0);
}

TEST_CASE("lp norms") {
  std::vector<double> d{3.0, 4.0};
  CHECK(lp_norm(d, Norm::finite(1)) == 7.0);
  CHECK(lp_norm(d, Norm::finite(2)) == doctest::Approx(5.0));
  CHECK(lp_norm(d, Norm::infinity()) == 4.0);
  // Compensated sum keeps small terms next to a large one.
  std::vector<double> skew{1e16, 1.0, 1.0, -0.0};
  CHECK(lp_norm(skew, Norm::finite(1)) == 1e16 + 2.0);
}

TEST_CASE("instance construction and validation") {
  auto inst = line_instance({0, 1, 5, 6}, {{0, 1}, {2, 3}, {1, 2}}, 2);
  CHECK(inst.num_clients() == 4);
  CHECK(inst.num_facilities() == 4);
  CHECK(inst.facilities_are_clients());
  CHECK(inst.max_groups_per_client() == 2);
  CHECK(inst.distance(0, 2) == 5.0);
  CHECK(inst.group_ratio(0) == 0.5);
  CHECK(inst.groups_of(1).size() == 2);

  CHECK_THROWS_AS(line_instance({0, 1}, {{0}}, 3), DomainError);
  CHECK_THROWS_AS(line_instance({0, 1}, {{0}, {}}, 1), DomainError);
  CHECK_THROWS_AS(line_instance({0, 1}, {{0, 7}}, 1), DomainError);
  CHECK_THROWS_AS(line_instance({0, 1}, {}, 1), DomainError);
  CHECK_THROWS_AS(inst.with_k(0), DomainError);
  CHECK(inst.with_k(3).k() == 3);
  CHECK(inst.with_norm(Norm::infinity()).norm().is_infinite());
}

TEST_CASE("distance matrix checks") {
  Eigen::MatrixXd d(3, 3);
  d << 0, 1, 5, 1, 0, 1, 5, 1, 0;
  std::vector<std::vector<int>> g{{0, 1, 2}};
  CHECK_THROWS_AS(ClusteringInstance::from_distance_matrix(d, 3, g, 1, Norm::finite(1)), DomainError);
  CHECK_NOTHROW(ClusteringInstance::from_distance_matrix(d, 3, g, 1, Norm::finite(1), MetricCheck::kNever));
  Eigen::MatrixXd asym = d;
  asym(0, 1) = 2;
  CHECK_THROWS_AS(ClusteringInstance::from_distance_matrix(asym, 3, g, 1, Norm::finite(1), MetricCheck::kNever),
                  DomainError);
  // Two clients, one facility.
  Eigen::MatrixXd cf(3, 3);
  cf << 0, 2, 1, 2, 0, 1, 1, 1, 0;
  auto inst = ClusteringInstance::from_distance_matrix(cf, 2, {{0}, {1}}, 1, Norm::finite(1));
  CHECK(inst.num_clients() == 2);
  CHECK(inst.num_facilities() == 1);
  CHECK_FALSE(inst.facilities_are_clients());
  CHECK(inst.distance(1, 0) == 1.0);
}

TEST_CASE("delta profiles") {
  auto inst = line_instance({0, 1, 2, 3}, {{0}, {1, 2, 3}}, 1);
  auto prof = delta_to_profile(inst, 0.5);
  CHECK(prof.beta(0) == doctest::Approx(0.125));
  CHECK(prof.alpha(0) == doctest::Approx(0.5));
  CHECK(prof.alpha(1) == 1.0);
  auto exact = delta_to_profile(inst, 0.0);
  CHECK(exact.alpha(0) == exact.beta(0));
  CHECK_THROWS_AS(delta_to_profile(inst, 1.0), DomainError);
  CHECK_THROWS_AS(FairnessProfile({0.2}, {0.3}), DomainError);
  CHECK(FairnessProfile::vacuous(3).is_vacuous());
}

TEST_CASE("assignment, counts, balance and violation") {
  auto inst = line_instance({0, 1, 5, 6}, {{0, 2}, {1, 3}}, 2);
  Assignment a(inst, {2, 0}, {0, 0, 2, 2});
  CHECK(a.opened() == std::vector<int>{0, 2});
  CHECK(a.cost() == 2.0);
  auto c = cluster_counts(inst, a);
  CHECK(c.size == std::vector<int>{2, 2});
  CHECK(c.group_count[0] == std::vector<int>{1, 1});
  auto b = balance(inst, a);
  CHECK(b.at(0) == 1.0);
  CHECK(b.at(2) == 1.0);
  auto exact = delta_to_profile(inst, 0.0);
  CHECK(additive_violation(inst, exact, a) == 0.0);

  Assignment skew(inst, {0, 1}, {0, 1, 1, 1});
  auto sb = balance(inst, skew);
  CHECK(sb.at(0) == 0.0);  // cluster {0} misses group 1
  CHECK(sb.at(1) == doctest::Approx((1.0 / 3.0) / 0.5));
  // Cluster {0}: group 1 count 0 vs beta 0.5 * 1.
  CHECK(additive_violation(inst, exact, skew) == doctest::Approx(0.5));

  CHECK_THROWS_AS(Assignment(inst, {0, 1, 2}, {0, 1, 2, 2}), DomainError);
  CHECK_THROWS_AS(Assignment(inst, {0, 0}, {0, 0, 0, 0}), DomainError);
  CHECK_THROWS_AS(Assignment(inst, {0}, {0, 0, 0, 1}), DomainError);
  CHECK_THROWS_AS(Assignment(inst, {0}, {0, 0}), DomainError);
}

TEST_CASE("fairness report") {
  auto inst = line_instance({0, 1, 5, 6}, {{0, 2}, {1, 3}}, 2);
  Assignment v(inst, {0, 2}, {0, 0, 2, 2});
  Assignment f(inst, {0, 2}, {0, 2, 2, 2});
  auto r = make_report(inst, delta_to_profile(inst, 0.0), v, f);
  CHECK(r.vanilla_cost == 2.0);
  CHECK(r.fair_cost == 5.0);
  CHECK(r.cost_of_fairness == 2.5);
  CHECK(r.min_balance == 0.0);
  int total = 0;
  for (int s : r.counts.size) total += s;
  CHECK(total == 4);

  auto same = make_report(inst, FairnessProfile::vacuous(2), v, v);
  CHECK(same.cost_of_fairness == 1.0);
  CHECK(same.lambda_max == 0.0);
}

TEST_CASE("random fixtures respect the requested overlap") {
  std::mt19937_64 rng(3);
  for (int delta : {1, 2}) {
    for (int ell : {2, 3, 4}) {
      fixtures::TinySpec spec;
      spec.groups = ell;
      spec.delta = delta;
      auto inst = fixtures::random_instance(rng, spec);
      CHECK(inst.num_groups() == ell);
      CHECK(inst.max_groups_per_client() == delta);
      for (int v = 0; v < inst.num_clients(); ++v) {
        CHECK(inst.groups_of(v).size() == static_cast<std::size_t>(delta));
      }
    }
  }
}
