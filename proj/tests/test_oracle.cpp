#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "faircluster/errors.hpp"
#include "faircluster/oracle.hpp"
#include "faircluster/vanilla.hpp"
#include "fixtures.hpp"

using namespace faircluster;

namespace {

// Naive recursion over every map C -> S, recomputing fairness from scratch.
double naive_fair_assignment(const ClusteringInstance& inst, const std::vector<int>& opened,
                             const FairnessProfile& prof, double lambda) {
  const int n = inst.num_clients();
  ClusteringInstance sized = inst.with_k(std::max(inst.k(), static_cast<int>(opened.size())));
  std::vector<int> phi(n);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(int)> rec = [&](int v) {
    if (v == n) {
      Assignment a(sized, opened, phi);
      if (additive_violation(inst, prof, a) <= lambda + 1e-9) best = std::min(best, a.cost());
      return;
    }
    for (int f : opened) {
      phi[v] = f;
      rec(v + 1);
    }
  };
  rec(0);
  return best;
}

}  // namespace

TEST_CASE("two clients of different groups share a midpoint center") {
  // Clients at 0 and 4, the single facility at 1.
  Eigen::MatrixXd c(2, 1), f(1, 1);
  c << 0, 4;
  f << 1;
  for (int code : {1, 2, 0}) {
    Norm p = fixtures::norm_of(code);
    auto inst = ClusteringInstance::from_coordinates(c, {{0}, {1}}, 1, p, f);
    FairnessProfile half({0.5, 0.5}, {0.5, 0.5});
    auto r = brute_force_fair(inst, half);
    REQUIRE(r.fair);
    std::vector<double> d{1.0, 3.0};
    CHECK(r.fair->cost == doctest::Approx(lp_norm(d, p)));
    CHECK(r.vnll->cost == r.fair->cost);
  }
}

TEST_CASE("vacuous fairness makes the fair optimum the vanilla optimum") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    fixtures::TinySpec spec;
    spec.n = 6;
    spec.p = fixtures::norm_of(static_cast<int>(rng() % 3));
    auto inst = fixtures::random_instance(rng, spec);
    auto r = brute_force_fair(inst, FairnessProfile::vacuous(inst.num_groups()));
    REQUIRE(r.fair);
    CHECK(r.fair->cost == doctest::Approx(r.vnll->cost));
  }
}

TEST_CASE("enumeration order does not change the optima") {
  // Four clients, two facilities.
  Eigen::MatrixXd c(4, 2), f(2, 2);
  c << 0, 0, 1, 0, 5, 1, 6, 0;
  f << 0.5, 0.5, 5.5, 0.5;
  auto inst = ClusteringInstance::from_coordinates(c, {{0, 2}, {1, 3}}, 2, Norm::finite(1), f);
  auto prof = delta_to_profile(inst, 0.0);
  auto fwd = brute_force_fair(inst, prof, kDefaultOracleGuard, EnumerationOrder::kForward);
  auto rev = brute_force_fair(inst, prof, kDefaultOracleGuard, EnumerationOrder::kReverse);
  REQUIRE(fwd.fair);
  REQUIRE(rev.fair);
  CHECK(fwd.fair->cost == doctest::Approx(rev.fair->cost));
  CHECK(fwd.vnll->cost == doctest::Approx(rev.vnll->cost));
  CHECK(fwd.vnll->cost <= fwd.fair->cost);

  std::mt19937_64 rng(22);
  for (int t = 0; t < 40; ++t) {
    fixtures::TinySpec spec;
    spec.n = 5 + static_cast<int>(rng() % 4);
    spec.groups = 2 + static_cast<int>(rng() % 3);
    spec.delta = 1 + static_cast<int>(rng() % 2);
    spec.p = fixtures::norm_of(static_cast<int>(rng() % 3));
    auto ri = fixtures::random_instance(rng, spec);
    auto rp = delta_to_profile(ri, t % 2 ? 0.2 : 0.5);
    auto a = brute_force_fair(ri, rp, kDefaultOracleGuard, EnumerationOrder::kForward);
    auto b = brute_force_fair(ri, rp, kDefaultOracleGuard, EnumerationOrder::kReverse);
    CHECK(a.fair_infeasible == b.fair_infeasible);
    if (a.fair) {
      CHECK(a.fair->cost == doctest::Approx(b.fair->cost));
      CHECK(is_exactly_fair(ri, rp, a.fair->phi));
      CHECK(a.vnll->cost <= a.fair->cost + 1e-12);
    }
  }
}

TEST_CASE("assignment oracle agrees with a naive recursion") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 60; ++t) {
    fixtures::TinySpec spec;
    spec.n = 5 + static_cast<int>(rng() % 3);
    spec.groups = 2 + static_cast<int>(rng() % 3);
    spec.delta = 1 + static_cast<int>(rng() % 2);
    spec.p = fixtures::norm_of(static_cast<int>(rng() % 3));
    auto inst = fixtures::random_instance(rng, spec);
    auto prof = delta_to_profile(inst, t % 3 == 0 ? 0.0 : 0.3);
    std::vector<int> opened{0, 2};
    double lambda = static_cast<double>(rng() % 3);
    auto r = brute_force_assignment(inst, opened, prof, lambda);
    double exact = naive_fair_assignment(inst, opened, prof, 0.0);
    double relaxed = naive_fair_assignment(inst, opened, prof, lambda);
    if (std::isinf(exact)) {
      CHECK(r.fair_infeasible);
    } else {
      REQUIRE(r.asgn);
      CHECK(r.asgn->cost == doctest::Approx(exact));
    }
    REQUIRE(r.lambda_asgn.has_value() == !std::isinf(relaxed));
    if (r.lambda_asgn) CHECK(r.lambda_asgn->cost == doctest::Approx(relaxed));
    auto rev = brute_force_assignment(inst, opened, prof, lambda, kDefaultOracleGuard, EnumerationOrder::kReverse);
    if (r.asgn) CHECK(rev.asgn->cost == doctest::Approx(r.asgn->cost));
  }
}

TEST_CASE("single facility and vacuous assignment oracles") {
  std::mt19937_64 rng(24);
  fixtures::TinySpec spec;
  auto inst = fixtures::random_instance(rng, spec);
  auto one = brute_force_assignment(inst, {1}, delta_to_profile(inst, 0.0));
  REQUIRE(one.asgn);
  CHECK(one.asgn->phi == std::vector<int>(inst.num_clients(), 1));
  auto vac = brute_force_assignment(inst, {0, 3}, FairnessProfile::vacuous(inst.num_groups()));
  REQUIRE(vac.asgn);
  CHECK(vac.asgn->phi == nearest_assignment(inst, {0, 3}));
}

TEST_CASE("guards refuse oversized enumerations") {
  std::mt19937_64 rng(25);
  fixtures::TinySpec spec;
  spec.n = 30;
  spec.facilities = 6;
  spec.k = 3;
  auto inst = fixtures::random_instance(rng, spec);
  auto prof = FairnessProfile::vacuous(inst.num_groups());
  try {
    brute_force_fair(inst, prof);
    FAIL("expected a guard refusal");
  } catch (const GuardExceeded& e) {
    CHECK(e.estimate() == doctest::Approx(fair_state_count(inst)));
  }
  CHECK_THROWS_AS(brute_force_assignment(inst, {0, 1, 2}, prof), GuardExceeded);
  CHECK_THROWS_AS(brute_force_lower_bounded(inst, 2), GuardExceeded);
  CHECK(fair_state_count(inst) == doctest::Approx(20.0 * std::pow(3.0, 30)));
}

TEST_CASE("lower-bounded oracles") {
  Eigen::MatrixXd c(4, 1);
  c << 0, 1, 10, 11;
  auto inst = ClusteringInstance::from_coordinates(c, {{0, 1, 2, 3}}, 2, Norm::finite(1));
  auto r = brute_force_lower_bounded(inst, 2);
  REQUIRE(r.lbnd);
  CHECK(r.lbnd->cost == 2.0);
  auto big = brute_force_lower_bounded(inst, 3);
  REQUIRE(big.lbnd);
  CHECK(big.lbnd->opened.size() == 1);
  CHECK(big.lbnd->cost == 20.0);
  auto forced = brute_force_lb_assignment(inst, {0, 1}, 2);
  REQUIRE(forced);
  CHECK(forced->cost == 1.0 + 9.0 + 10.0);
  CHECK_FALSE(brute_force_lb_assignment(inst, {0, 1, 2}, 2).has_value());
}

TEST_CASE("almost-fair LP orderings") {
  std::mt19937_64 rng(26);
  for (int t = 0; t < 25; ++t) {
    fixtures::TinySpec spec;
    spec.n = 6 + static_cast<int>(rng() % 3);
    spec.facilities = 3 + static_cast<int>(rng() % 2);
    spec.groups = 2 + static_cast<int>(rng() % 2);
    spec.delta = 1 + static_cast<int>(rng() % 2);
    spec.p = Norm::finite(1 + static_cast<int>(rng() % 2));
    auto inst = fixtures::random_instance(rng, spec);
    auto prof = delta_to_profile(inst, 0.2);
    auto full = brute_force_fair(inst, FairnessProfile::vacuous(inst.num_groups()));
    double loose = almost_fair_lp(inst, prof, static_cast<double>(inst.num_clients()));
    CHECK(loose <= full.vnll->cost + 1e-7);

    // LP3(lambda) below every clustering violating fairness by at most lambda.
    double lambda = static_cast<double>(rng() % 2);
    double lp3 = almost_fair_lp(inst, prof, lambda);
    for (int a = 0; a < spec.facilities; ++a) {
      for (int b = a + 1; b < spec.facilities; ++b) {
        auto r = brute_force_assignment(inst, {a, b}, prof, lambda);
        if (r.lambda_asgn) CHECK(lp3 <= r.lambda_asgn->cost + 1e-7);
      }
    }
  }
}

TEST_CASE("almost-fair LP with one center is the best single cluster") {
  std::mt19937_64 rng(27);
  fixtures::TinySpec spec;
  spec.k = 1;
  spec.p = Norm::finite(2);
  auto inst = fixtures::random_instance(rng, spec);
  double best = std::numeric_limits<double>::infinity();
  for (int f = 0; f < inst.num_facilities(); ++f) {
    std::vector<int> phi(inst.num_clients(), f);
    best = std::min(best, lp_norm_cost(inst, std::vector<int>{f}, phi, inst.norm()));
  }
  CHECK(almost_fair_lp(inst, delta_to_profile(inst, 0.0), 0.0) == doctest::Approx(best));
  CHECK_THROWS_AS(almost_fair_lp(inst.with_norm(Norm::infinity()), delta_to_profile(inst, 0.0), 0.0), DomainError);
}
