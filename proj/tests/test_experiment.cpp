#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "faircluster/errors.hpp"
#include "faircluster/experiment.hpp"

using namespace faircluster;
namespace fs = std::filesystem;

namespace {

const fs::path kData = FAIRCLUSTER_TEST_DATA;

ExperimentConfig six_config(std::vector<std::string> attrs = {"sex"}) {
  ExperimentConfig c;
  c.dataset_path = kData / "six.csv";
  c.coordinate_columns = {"x", "y"};
  for (auto& a : attrs) c.sensitive_attributes.push_back({a, {}});
  c.k_values = {2};
  c.delta_values = {0.2};
  c.solver_id = SolverId::kKMedianLocalSearch;
  c.p = Norm::finite(1);
  c.output_dir = fs::temp_directory_path() / "faircluster-test-out";
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("one attribute partitions the clients") {
  Dataset d = ingest(six_config());
  CHECK(d.instance.num_clients() == 6);
  CHECK(d.instance.num_groups() == 2);
  CHECK(d.instance.max_groups_per_client() == 1);
  CHECK(d.rows_dropped == 0);
  CHECK(d.group_names == std::vector<std::string>{"sex=F", "sex=M"});
}

TEST_CASE("two attributes overlap") {
  Dataset d = ingest(six_config({"sex", "married"}));
  CHECK(d.instance.num_groups() == 4);
  CHECK(d.instance.max_groups_per_client() == 2);
  for (int v = 0; v < 6; ++v) CHECK(d.instance.groups_of(v).size() == 2);
}

TEST_CASE("semicolons are detected and non-numeric rows dropped") {
  auto c = six_config({"sex", "married"});
  c.dataset_path = kData / "six_dirty.csv";
  Dataset d = ingest(c);
  CHECK(d.rows_read == 7);
  CHECK(d.rows_dropped == 1);
  CHECK(d.instance.num_clients() == 6);
  CHECK(d.source_rows == std::vector<int>{0, 1, 3, 4, 5, 6});
}

TEST_CASE("ingest configuration errors") {
  auto c = six_config({"religion"});
  CHECK_THROWS_WITH_AS(ingest(c), doctest::Contains("religion"), ConfigError);
  c = six_config();
  c.dataset_path = kData / "missing.csv";
  CHECK_THROWS_AS(ingest(c), ConfigError);
  c = six_config();
  c.max_points = 7;
  CHECK_THROWS_AS(ingest(c), ConfigError);
  c = six_config();
  c.sensitive_attributes[0].mapping = {{"F", "female"}, {"X", "other"}};
  CHECK_THROWS_WITH_AS(ingest(c), doctest::Contains("other"), ConfigError);
}

TEST_CASE("mapping and subsampling") {
  auto c = six_config();
  c.sensitive_attributes[0].mapping = {{"F", "female"}};
  Dataset d = ingest(c);
  CHECK(d.group_names == std::vector<std::string>{"sex=female"});
  CHECK(d.instance.group(0) == std::vector<int>{0, 2, 4});

  c = six_config();
  c.max_points = 4;
  c.seed = 99;
  Dataset a = ingest(c), b = ingest(c);
  CHECK(a.instance.num_clients() == 4);
  CHECK(a.source_rows == b.source_rows);

  c = six_config();
  c.flags.standardize = true;
  Dataset z = ingest(c);
  CHECK(z.instance.client_coordinates().col(0).mean() == doctest::Approx(0.0));
  CHECK(z.instance.client_coordinates().col(0).squaredNorm() / 6 == doctest::Approx(1.0));
}

TEST_CASE("config parsing and overrides") {
  const char* text = R"({
    "dataset_path": "six.csv",
    "coordinate_columns": ["x", "y"],
    "sensitive_attributes": ["sex", {"column": "married", "mapping": {"yes": "m"}}],
    "k_values": [2, 3],
    "p": "inf",
    "delta_values": [0.1],
    "seed": 5,
    "solver_id": "K_CENTER_GONZALEZ",
    "output_dir": "out",
    "flags": {"run_aflp": true, "lb_mode": {"L": 2}}
  })";
  ExperimentConfig c = parse_config(text, kData);
  CHECK(c.dataset_path == kData / "six.csv");
  CHECK(c.p.is_infinite());
  CHECK(c.k_values == std::vector<int>{2, 3});
  CHECK(c.sensitive_attributes[1].mapping.at("yes") == "m");
  CHECK(c.flags.run_aflp);
  CHECK(c.flags.lb_mode == 2);

  apply_override(c, "seed=11");
  apply_override(c, "p=2");
  apply_override(c, "k_values=[4]");
  apply_override(c, "flags.vacuous=true");
  apply_override(c, "solver_id=KMEANS");
  CHECK(c.seed == 11);
  CHECK(c.p.exponent() == 2.0);
  CHECK(c.k_values == std::vector<int>{4});
  CHECK(c.flags.vacuous);
  CHECK(c.solver_id == SolverId::kKMeansLloyd);
  CHECK_THROWS_AS(apply_override(c, "colour=red"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "seed"), ConfigError);

  // Round trip through the JSON form.
  ExperimentConfig again = parse_config(config_to_json(c));
  CHECK(again.seed == c.seed);
  CHECK(again.k_values == c.k_values);

  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"dataset_path": "a", "coordinate_columns": [], "k_values": [2]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"dataset_path": "a", "coordinate_columns": ["x"], "k_values": [2],
                                   "delta_values": [1.0]})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"dataset_path": "a", "coordinate_columns": ["x"], "k_values": [2], "bogus": 1})"),
                  ConfigError);
}

TEST_CASE("experiment cells") {
  auto c = six_config({"sex", "married"});
  c.k_values = {1, 2, 3};
  c.delta_values = {0.0, 0.3};
  c.flags.run_aflp = true;
  c.flags.run_oracle = true;
  ExperimentReport r = run_experiment(c);
  REQUIRE(r.cells.size() == 6);
  CHECK(r.failures() == 0);
  for (const auto& cell : r.cells) {
    CHECK(cell.lambda_max <= 4 * 2 + 3);
    int total = 0;
    for (const auto& cl : cell.clusters) total += cl.size;
    CHECK(total == 6);
    CHECK(cell.fair_cost <= cell.lp_objective * (1.0 + 1e-6) + 1e-9);
    REQUIRE(cell.aflp_cost.has_value());
    CHECK(*cell.aflp_cost <= cell.fair_cost + 1e-7);
    REQUIRE(cell.opt_vnll.has_value());
    CHECK(*cell.opt_vnll <= cell.vanilla_cost + 1e-9);
  }
  CHECK(r.cells[0].k == 1);
  CHECK(r.cells[0].delta == 0.0);
  CHECK(r.cells[1].delta == 0.3);
}

TEST_CASE("vacuous override gives cost of fairness one") {
  auto c = six_config();
  c.k_values = {2, 3};
  c.flags.vacuous = true;
  ExperimentReport r = run_experiment(c);
  for (const auto& cell : r.cells) {
    CHECK(cell.cost_of_fairness == 1.0);
    CHECK(cell.lambda_max == 0.0);
  }
}

TEST_CASE("failed cells are recorded and the run continues") {
  auto c = six_config();
  c.k_values = {2, 9};
  ExperimentReport r = run_experiment(c);
  REQUIRE(r.cells.size() == 2);
  CHECK(r.cells[0].status == "ok");
  CHECK(r.cells[1].status == "failed");
  CHECK(r.failures() == 1);
}

TEST_CASE("reports are written and cells.csv is reproducible") {
  auto c = six_config({"sex", "married"});
  c.k_values = {2, 3};
  c.delta_values = {0.1, 0.4};
  RunOptions serial;
  RunOptions parallel;
  parallel.jobs = 3;
  ExperimentReport a = run_experiment(c, serial);
  ExperimentReport b = run_experiment(c, parallel);
  CHECK(cells_csv(a) == cells_csv(b));
  CHECK(clusters_csv(a) == clusters_csv(b));

  write_reports(a);
  CHECK(slurp(c.output_dir / "cells.csv") == cells_csv(a));
  std::string json = slurp(c.output_dir / "report.json");
  CHECK(json.find("largest_clusters") != std::string::npos);
  CHECK(json.find("timings_ms") != std::string::npos);
  CHECK(slurp(c.output_dir / "clusters.csv").rfind("k,delta,facility,size,balance", 0) == 0);
}

TEST_CASE("lower-bounded and oracle runs") {
  auto c = six_config();
  c.k_values = {2, 3};
  auto lb = run_lower_bounded(c, 3);
  REQUIRE(lb.size() == 2);
  for (const auto& cell : lb) {
    CHECK(cell.status == "ok");
    CHECK(cell.min_cluster >= 3);
  }
  CHECK(fs::exists(c.output_dir / "lb.csv"));

  auto oc = run_oracle(c);
  for (const auto& cell : oc) CHECK(cell.within_bound);
  CHECK_THROWS_AS(run_oracle(c, 10.0), GuardExceeded);
}
