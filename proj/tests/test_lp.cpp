#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "faircluster/errors.hpp"
#include "faircluster/lp.hpp"

using namespace faircluster;
using namespace faircluster::lp;

namespace {

struct HalfSpace {
  Eigen::Vector3d a;
  double b;  // a.x <= b
};

// Minimum of c.x over a bounded 3-d polytope by enumerating every triple of
// tight halfspaces. Returns +inf when no feasible vertex exists.
double vertex_enumeration_min(const std::vector<HalfSpace>& hs, const Eigen::Vector3d& c) {
  double best = std::numeric_limits<double>::infinity();
  const int h = static_cast<int>(hs.size());
  for (int i = 0; i < h; ++i) {
    for (int j = i + 1; j < h; ++j) {
      for (int k = j + 1; k < h; ++k) {
        Eigen::Matrix3d a;
        a.row(0) = hs[i].a;
        a.row(1) = hs[j].a;
        a.row(2) = hs[k].a;
        if (std::abs(a.determinant()) < 1e-10) continue;
        Eigen::Vector3d x = a.partialPivLu().solve(Eigen::Vector3d(hs[i].b, hs[j].b, hs[k].b));
        bool feasible = true;
        for (const auto& s : hs) {
          if (s.a.dot(x) > s.b + 1e-9) {
            feasible = false;
            break;
          }
        }
        if (feasible) best = std::min(best, c.dot(x));
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("minimize x with x >= 3 on [0,10]") {
  LpModel m;
  int x = m.add_variable(0, 10, 1.0);
  m.add_constraint({{x, 1.0}}, Sense::kGreaterEqual, 3.0);
  LpSolution s = solve_lp(m);
  REQUIRE(s.status == LpStatus::kOptimal);
  CHECK(s.objective == doctest::Approx(3.0));
  CHECK(s.values[0] == doctest::Approx(3.0));
  CHECK(s.is_basic);
}

TEST_CASE("contradictory bounds are infeasible") {
  LpModel m;
  int x = m.add_variable(0, 10, 0.0);
  m.add_constraint({{x, 1.0}}, Sense::kGreaterEqual, 2.0);
  m.add_constraint({{x, 1.0}}, Sense::kLessEqual, 1.0);
  CHECK(solve_lp(m).status == LpStatus::kInfeasible);
  CHECK_FALSE(check_feasible(m));
}

TEST_CASE("empty constraint set is feasible") {
  LpModel m;
  m.add_variable(0, 1, 1.0);
  CHECK(check_feasible(m));
  LpModel none;
  CHECK(check_feasible(none));
}

TEST_CASE("unbounded objective is detected") {
  LpModel m;
  int x = m.add_variable(0, kInf, -1.0);
  int y = m.add_variable(0, kInf, 0.0);
  m.add_constraint({{x, 1.0}, {y, -1.0}}, Sense::kLessEqual, 1.0);
  CHECK(solve_lp(m).status == LpStatus::kUnbounded);
}

TEST_CASE("malformed models are rejected") {
  LpModel m;
  m.add_variable(0, 1, 0.0);
  m.add_constraint({{3, 1.0}}, Sense::kEqual, 1.0);
  CHECK_THROWS_AS(m.validate(), DomainError);
  LpModel crossed;
  crossed.add_variable(2, 1, 0.0);
  CHECK_THROWS_AS(solve_lp(crossed), DomainError);
  LpModel nan_coef;
  int v = nan_coef.add_variable(0, 1, 0.0);
  nan_coef.add_constraint({{v, std::nan("")}}, Sense::kEqual, 1.0);
  CHECK_THROWS_AS(nan_coef.validate(), DomainError);
}

TEST_CASE("free variables and equality rows") {
  LpModel m;
  int x = m.add_variable(-kInf, kInf, 1.0);
  int y = m.add_variable(-kInf, kInf, 2.0);
  m.add_constraint({{x, 1.0}, {y, 1.0}}, Sense::kEqual, 4.0);
  m.add_constraint({{x, 1.0}, {y, -1.0}}, Sense::kEqual, 2.0);
  LpSolution s = solve_lp(m);
  REQUIRE(s.status == LpStatus::kOptimal);
  CHECK(s.values[0] == doctest::Approx(3.0));
  CHECK(s.values[1] == doctest::Approx(1.0));
  CHECK(s.objective == doctest::Approx(5.0));
}

TEST_CASE("random 3-variable LPs match vertex enumeration") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  std::uniform_real_distribution<double> rhs(-2.0, 6.0);
  int optimal = 0, infeasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    LpModel m;
    std::vector<HalfSpace> hs;
    Eigen::Vector3d c;
    for (int j = 0; j < 3; ++j) {
      double hi = 1.0 + 4.0 * std::uniform_real_distribution<double>(0, 1)(rng);
      c[j] = coef(rng);
      m.add_variable(0.0, hi, c[j]);
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e[j] = 1.0;
      hs.push_back({e, hi});
      hs.push_back({-e, 0.0});
    }
    int rows = 1 + trial % 4;
    for (int r = 0; r < rows; ++r) {
      Eigen::Vector3d a(coef(rng), coef(rng), coef(rng));
      double b = rhs(rng);
      int kind = static_cast<int>(rng() % 3);
      std::vector<Term> terms{{0, a[0]}, {1, a[1]}, {2, a[2]}};
      if (kind == 0) {
        m.add_constraint(terms, Sense::kLessEqual, b);
        hs.push_back({a, b});
      } else if (kind == 1) {
        m.add_constraint(terms, Sense::kGreaterEqual, b);
        hs.push_back({-a, -b});
      } else {
        double width = std::abs(rhs(rng));
        m.add_row(terms, b, b + width);
        hs.push_back({a, b + width});
        hs.push_back({-a, -b});
      }
    }
    double oracle = vertex_enumeration_min(hs, c);
    LpSolution s = solve_lp(m);
    if (std::isinf(oracle)) {
      // Degenerate polytopes with no isolated vertex are rare; only assert
      // clear infeasibility.
      CHECK(s.status == LpStatus::kInfeasible);
      ++infeasible;
      continue;
    }
    REQUIRE(s.status == LpStatus::kOptimal);
    CHECK(s.objective == doctest::Approx(oracle).epsilon(1e-7).scale(1.0));
    CHECK(max_violation(m, s.values) <= 1e-7);
    ++optimal;
  }
  CHECK(optimal > 100);
  CHECK(infeasible > 5);
}

TEST_CASE("vertex property on a transportation polytope") {
  // 6 sources each assigned fully across 3 sinks with per-sink capacity 2:
  // a basic solution has at most (#rows) positive fractional entries.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    LpModel m;
    std::vector<std::vector<int>> x(6, std::vector<int>(3));
    for (int v = 0; v < 6; ++v) {
      for (int f = 0; f < 3; ++f) x[v][f] = m.add_variable(0, 1, u(rng));
    }
    for (int v = 0; v < 6; ++v) {
      m.add_constraint({{x[v][0], 1}, {x[v][1], 1}, {x[v][2], 1}}, Sense::kEqual, 1.0);
    }
    for (int f = 0; f < 3; ++f) {
      std::vector<Term> t;
      for (int v = 0; v < 6; ++v) t.push_back({x[v][f], 1.0});
      m.add_row(t, 1.5, 2.5);
    }
    LpSolution s = solve_lp(m);
    REQUIRE(s.status == LpStatus::kOptimal);
    CHECK(count_fractional(s.values) <= m.num_rows());
    LpSolution again = solve_lp(m);
    CHECK(again.objective == doctest::Approx(s.objective).epsilon(1e-9));
  }
}

TEST_CASE("degenerate assignment LP terminates at the optimum") {
  // Identity-cost assignment: many ties at the optimum.
  const int n = 12;
  LpModel m;
  std::vector<std::vector<int>> x(n, std::vector<int>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) x[i][j] = m.add_variable(0, 1, i == j ? 0.0 : 1.0);
  }
  for (int i = 0; i < n; ++i) {
    std::vector<Term> row, col;
    for (int j = 0; j < n; ++j) {
      row.push_back({x[i][j], 1.0});
      col.push_back({x[j][i], 1.0});
    }
    m.add_constraint(row, Sense::kEqual, 1.0);
    m.add_constraint(col, Sense::kEqual, 1.0);
  }
  LpSolution s = solve_lp(m);
  REQUIRE(s.status == LpStatus::kOptimal);
  CHECK(s.objective == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("MPS dump contains every section") {
  LpModel m;
  int x = m.add_variable(0, 1, 2.0, "x");
  int y = m.add_variable(0, kInf, 1.0, "y");
  m.add_row({{x, 1.0}, {y, 1.0}}, 1.0, 3.0, "cap");
  m.add_constraint({{x, 1.0}}, Sense::kEqual, 0.5, "fix");
  std::ostringstream out;
  write_mps(m, out);
  std::string text = out.str();
  for (const char* section : {"NAME", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA"}) {
    CHECK(text.find(section) != std::string::npos);
  }
  CHECK(text.find(" G  cap") != std::string::npos);
  CHECK(text.find(" E  fix") != std::string::npos);
  CHECK(text.find(" UP BND       x") != std::string::npos);
}
