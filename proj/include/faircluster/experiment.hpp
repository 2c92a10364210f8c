#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "faircluster/instance.hpp"
#include "faircluster/vanilla.hpp"

namespace faircluster {

// One sensitive column. Without a mapping every distinct value becomes a
// group; with one, raw values map to named groups and unmapped values join
// no group of this attribute.
struct SensitiveAttribute {
  std::string column;
  std::map<std::string, std::string> mapping;
};

struct ExperimentFlags {
  bool validate_metric = false;
  bool run_aflp = false;
  bool run_oracle = false;
  std::optional<int> lb_mode;  // lower bound L
  bool vacuous = false;        // alpha = 1, beta = 0 in every cell
  bool standardize = false;    // per-column z-score
};

struct ExperimentConfig {
  std::filesystem::path dataset_path;
  std::vector<std::string> coordinate_columns;
  std::vector<SensitiveAttribute> sensitive_attributes;
  std::vector<int> k_values;
  Norm p = Norm::finite(2.0);
  std::vector<double> delta_values{0.2};
  std::optional<int> max_points;
  std::uint64_t seed = 0;
  SolverId solver_id = SolverId::kKMeansLloyd;
  std::filesystem::path output_dir = "faircluster-out";
  ExperimentFlags flags;
};

// Parses the JSON config document. Relative dataset and output paths are
// resolved against `base_dir`. Throws ConfigError naming the bad field.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Applies `key=value` where key is a field name, dotted for flags
// ("flags.run_aflp") and value is JSON or a bare string.
void apply_override(ExperimentConfig& config, std::string_view assignment);

std::string config_to_json(const ExperimentConfig& config);

struct Dataset {
  ClusteringInstance instance;
  std::vector<std::string> group_names;
  int rows_read = 0;
  int rows_dropped = 0;
  std::vector<int> source_rows;  // data row (0-based, header excluded) of each client
};

// Reads the delimited file (comma or semicolon, detected from the header),
// drops rows with missing or non-numeric coordinates, builds one group per
// sensitive value, optionally subsamples and standardizes. k is set to the
// largest configured k.
Dataset ingest(const ExperimentConfig& config);

struct ClusterSummary {
  int facility = 0;
  int size = 0;
  double balance = 0.0;
  std::vector<int> group_count;
};

struct CellResult {
  int k = 0;
  double delta = 0.0;
  std::string status = "ok";  // ok | infeasible | failed
  std::string error;
  double vanilla_cost = 0.0;
  double fair_cost = 0.0;
  double cost_of_fairness = 0.0;
  double lambda_max = 0.0;
  double min_balance = 0.0;
  double lp_objective = 0.0;  // LP value^(1/p), or the radius G* for p = inf
  int rounding_iterations = 0;
  std::optional<double> aflp_cost;
  std::string aflp_status;  // empty when not requested
  std::optional<double> opt_vnll;
  std::optional<double> opt_fair;
  std::string oracle_status;
  std::vector<ClusterSummary> clusters;  // by facility index
  std::vector<std::pair<std::string, double>> timings_ms;
};

struct ExperimentReport {
  ExperimentConfig config;
  Dataset dataset;
  std::vector<CellResult> cells;  // ordered by (k, delta) as configured

  int failures() const;
};

struct RunOptions {
  int jobs = 1;
  // Cells with n * |F| above this skip the almost-fair LP.
  long long aflp_pair_cap = 40000;
  double oracle_guard = 1e7;
};

ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// report.json, cells.csv and clusters.csv under config.output_dir.
void write_reports(const ExperimentReport& report);

std::string cells_csv(const ExperimentReport& report);
std::string clusters_csv(const ExperimentReport& report);
std::string report_json(const ExperimentReport& report);

struct LbCell {
  int k = 0;
  int lower_bound = 0;
  std::string status = "ok";
  std::string error;
  double vanilla_cost = 0.0;
  double cost = 0.0;
  int opened = 0;
  int min_cluster = 0;
  int subsets_evaluated = 0;
};

// Lower-bounded clustering for every configured k; writes lb.csv and
// lb.json under config.output_dir.
std::vector<LbCell> run_lower_bounded(const ExperimentConfig& config, int lower_bound, int jobs = 1);

struct OracleCell {
  int k = 0;
  double delta = 0.0;
  std::string status = "ok";
  std::string error;
  double opt_vnll = 0.0;
  std::optional<double> opt_fair;
  double vanilla_cost = 0.0;
  double fair_cost = 0.0;
  double bound = 0.0;  // (rho + 2) opt_fair
  bool within_bound = true;
};

// Brute-force comparison on tiny datasets; writes oracle.csv. Throws
// GuardExceeded when the dataset is too large to enumerate.
std::vector<OracleCell> run_oracle(const ExperimentConfig& config, double guard = 1e7);

}  // namespace faircluster
