#include "faircluster/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "faircluster/errors.hpp"
#include "faircluster/fair_assignment.hpp"
#include "faircluster/lower_bounded.hpp"
#include "faircluster/oracle.hpp"
#include "faircluster/rng.hpp"

namespace faircluster {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint64_t kSubsampleStream = 0x5ab5a3b1e;

// ---- config ---------------------------------------------------------------

json norm_to_json(Norm p) {
  if (p.is_infinite()) return "inf";
  double e = p.exponent();
  if (e == std::floor(e)) return static_cast<int>(e);
  return e;
}

Norm norm_from_json(const json& j) {
  if (j.is_number()) return Norm::finite(j.get<double>());
  if (j.is_string()) return Norm::parse(j.get<std::string>());
  throw ConfigError("p must be a number or \"inf\"");
}

json to_json(const ExperimentConfig& c) {
  json attrs = json::array();
  for (const auto& a : c.sensitive_attributes) {
    if (a.mapping.empty()) {
      attrs.push_back(a.column);
    } else {
      attrs.push_back({{"column", a.column}, {"mapping", a.mapping}});
    }
  }
  json flags = {{"validate_metric", c.flags.validate_metric}, {"run_aflp", c.flags.run_aflp},
                {"run_oracle", c.flags.run_oracle},           {"vacuous", c.flags.vacuous},
                {"standardize", c.flags.standardize},         {"lb_mode", nullptr}};
  if (c.flags.lb_mode) flags["lb_mode"] = {{"L", *c.flags.lb_mode}};
  return {{"dataset_path", c.dataset_path.string()},
          {"coordinate_columns", c.coordinate_columns},
          {"sensitive_attributes", attrs},
          {"k_values", c.k_values},
          {"p", norm_to_json(c.p)},
          {"delta_values", c.delta_values},
          {"max_points", c.max_points ? json(*c.max_points) : json(nullptr)},
          {"seed", c.seed},
          {"solver_id", to_string(c.solver_id)},
          {"output_dir", c.output_dir.string()},
          {"flags", flags}};
}

template <typename T>
T field(const json& j, const char* name) {
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + name + "': " + e.what());
  }
}

ExperimentConfig from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {"dataset_path", "coordinate_columns", "sensitive_attributes",
                                              "k_values",     "p",                  "delta_values",
                                              "max_points",   "seed",               "solver_id",
                                              "output_dir",   "flags"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config field '" + key + "'");
  }
  ExperimentConfig c;
  c.dataset_path = field<std::string>(j, "dataset_path");
  c.coordinate_columns = field<std::vector<std::string>>(j, "coordinate_columns");
  if (j.contains("sensitive_attributes")) {
    for (const auto& a : j.at("sensitive_attributes")) {
      SensitiveAttribute attr;
      if (a.is_string()) {
        attr.column = a.get<std::string>();
      } else if (a.is_object()) {
        attr.column = field<std::string>(a, "column");
        if (a.contains("mapping")) {
          const json& m = a.at("mapping");
          if (m.is_string() && m.get<std::string>() == "one-group-per-distinct-value") {
            // default behaviour
          } else if (m.is_object()) {
            for (const auto& [raw, name] : m.items()) {
              if (!name.is_string()) throw ConfigError("mapping values of '" + attr.column + "' must be strings");
              attr.mapping[raw] = name.get<std::string>();
            }
          } else {
            throw ConfigError("mapping of '" + attr.column + "' must be an object");
          }
        }
      } else {
        throw ConfigError("sensitive_attributes entries must be strings or objects");
      }
      c.sensitive_attributes.push_back(std::move(attr));
    }
  }
  c.k_values = field<std::vector<int>>(j, "k_values");
  if (j.contains("p")) {
    try {
      c.p = norm_from_json(j.at("p"));
    } catch (const DomainError& e) {
      throw ConfigError(std::string("config field 'p': ") + e.what());
    }
  }
  if (j.contains("delta_values")) c.delta_values = field<std::vector<double>>(j, "delta_values");
  if (j.contains("max_points") && !j.at("max_points").is_null()) c.max_points = field<int>(j, "max_points");
  if (j.contains("seed")) c.seed = field<std::uint64_t>(j, "seed");
  if (j.contains("solver_id")) {
    try {
      c.solver_id = parse_solver_id(field<std::string>(j, "solver_id"));
    } catch (const DomainError& e) {
      throw ConfigError(std::string("config field 'solver_id': ") + e.what());
    }
  }
  if (j.contains("output_dir")) c.output_dir = field<std::string>(j, "output_dir");
  if (j.contains("flags")) {
    const json& f = j.at("flags");
    if (!f.is_object()) throw ConfigError("flags must be an object");
    static const std::set<std::string> known_flags = {"validate_metric", "run_aflp", "run_oracle",
                                                      "lb_mode",         "vacuous",  "standardize"};
    for (const auto& [key, _] : f.items()) {
      if (!known_flags.count(key)) throw ConfigError("unknown flag '" + key + "'");
    }
    if (f.contains("validate_metric")) c.flags.validate_metric = field<bool>(f, "validate_metric");
    if (f.contains("run_aflp")) c.flags.run_aflp = field<bool>(f, "run_aflp");
    if (f.contains("run_oracle")) c.flags.run_oracle = field<bool>(f, "run_oracle");
    if (f.contains("vacuous")) c.flags.vacuous = field<bool>(f, "vacuous");
    if (f.contains("standardize")) c.flags.standardize = field<bool>(f, "standardize");
    if (f.contains("lb_mode") && !f.at("lb_mode").is_null()) {
      const json& lb = f.at("lb_mode");
      c.flags.lb_mode = lb.is_object() ? field<int>(lb, "L") : lb.get<int>();
    }
  }

  if (c.coordinate_columns.empty()) throw ConfigError("coordinate_columns needs at least one column");
  if (c.k_values.empty()) throw ConfigError("k_values needs at least one entry");
  for (int k : c.k_values) {
    if (k < 1) throw ConfigError("k_values entries must be >= 1, got " + std::to_string(k));
  }
  if (c.delta_values.empty()) throw ConfigError("delta_values needs at least one entry");
  for (double d : c.delta_values) {
    if (!(d >= 0.0 && d < 1.0)) throw ConfigError("delta_values entries must lie in [0, 1)");
  }
  if (c.max_points && *c.max_points < 1) throw ConfigError("max_points must be positive");
  if (c.flags.lb_mode && *c.flags.lb_mode < 1) throw ConfigError("lb_mode L must be >= 1");
  if (c.dataset_path.is_relative() && !base_dir.empty()) c.dataset_path = base_dir / c.dataset_path;
  if (c.output_dir.is_relative() && !base_dir.empty()) c.output_dir = base_dir / c.output_dir;
  return c;
}

// ---- CSV ------------------------------------------------------------------

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delim) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  for (auto& s : out) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

char detect_delimiter(const std::string& header) {
  int commas = 0, semis = 0;
  bool quoted = false;
  for (char ch : header) {
    if (ch == '"') quoted = !quoted;
    if (quoted) continue;
    commas += ch == ',';
    semis += ch == ';';
  }
  return semis > commas ? ';' : ',';
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

json num(double x) {
  if (std::isfinite(x)) return x;
  return fmt(x);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

// ---- cells ----------------------------------------------------------------

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

void run_pool(int count, int jobs, const std::function<void(int)>& task) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (int i = next++; i < count; i = next++) task(i);
    });
  }
  for (auto& t : workers) t.join();
}

std::vector<ClusterSummary> summarize(const ClusteringInstance& inst, const Assignment& a) {
  ClusterCounts counts = cluster_counts(inst, a);
  auto bal = balance(inst, a);
  std::vector<ClusterSummary> out;
  for (std::size_t j = 0; j < counts.facility.size(); ++j) {
    ClusterSummary s;
    s.facility = counts.facility[j];
    s.size = counts.size[j];
    auto it = bal.find(s.facility);
    s.balance = it == bal.end() ? 0.0 : it->second;
    s.group_count = counts.group_count[j];
    out.push_back(std::move(s));
  }
  return out;
}

CellResult run_cell(const ExperimentConfig& config, const Dataset& data, int k, double delta,
                    const RunOptions& options) {
  CellResult cell;
  cell.k = k;
  cell.delta = delta;
  try {
    if (k > data.instance.num_facilities()) {
      throw ConfigError("k = " + std::to_string(k) + " exceeds the number of points");
    }
    ClusteringInstance inst = data.instance.with_k(k);
    FairnessProfile profile =
        config.flags.vacuous ? FairnessProfile::vacuous(inst.num_groups()) : delta_to_profile(inst, delta);

    auto t0 = std::chrono::steady_clock::now();
    VanillaSolution vanilla = solve_vanilla(inst, config.solver_id, config.seed);
    cell.timings_ms.emplace_back("vanilla", elapsed_ms(t0));

    FairClusteringResult fr = fair_clustering(inst, profile, std::move(vanilla));
    for (const auto& t : fr.report.timings) cell.timings_ms.emplace_back(t.phase, t.milliseconds);
    cell.vanilla_cost = fr.report.vanilla_cost;
    cell.fair_cost = fr.report.fair_cost;
    cell.cost_of_fairness = fr.report.cost_of_fairness;
    cell.lambda_max = fr.report.lambda_max;
    cell.min_balance = fr.report.min_balance;
    cell.rounding_iterations = fr.rounding.trace.iterations;
    const Norm p = inst.norm();
    if (p.is_infinite()) {
      cell.lp_objective = fr.guess.value_or(0.0);
    } else {
      cell.lp_objective = std::pow(std::max(0.0, fr.rounding.lp_cost), 1.0 / p.exponent());
    }
    cell.clusters = summarize(inst, fr.fair());

    const int bound = 4 * inst.max_groups_per_client() + 3;
    if (cell.lambda_max > bound) {
      throw SolverError("additive violation " + fmt(cell.lambda_max) + " exceeds " + std::to_string(bound));
    }

    if (config.flags.run_aflp) {
      const long long pairs = static_cast<long long>(inst.num_clients()) * inst.num_facilities();
      if (p.is_infinite()) {
        cell.aflp_status = "skipped: needs finite p";
      } else if (pairs > options.aflp_pair_cap) {
        cell.aflp_status = "skipped: " + std::to_string(pairs) + " pairs exceed cap";
      } else {
        auto ta = std::chrono::steady_clock::now();
        cell.aflp_cost = almost_fair_lp(inst, profile, cell.lambda_max);
        cell.timings_ms.emplace_back("aflp", elapsed_ms(ta));
        cell.aflp_status = "ok";
      }
    }
    if (config.flags.run_oracle) {
      try {
        auto to = std::chrono::steady_clock::now();
        OracleResult o = brute_force_fair(inst, profile, options.oracle_guard);
        cell.timings_ms.emplace_back("oracle", elapsed_ms(to));
        cell.opt_vnll = o.vnll->cost;
        if (o.fair) cell.opt_fair = o.fair->cost;
        cell.oracle_status = o.fair_infeasible ? "fair infeasible" : "ok";
      } catch (const GuardExceeded& e) {
        cell.oracle_status = std::string("skipped: ") + e.what();
      }
    }
  } catch (const InfeasibleError& e) {
    cell.status = "infeasible";
    cell.error = e.what();
  } catch (const std::exception& e) {
    cell.status = "failed";
    cell.error = e.what();
  }
  if (cell.status != "ok") spdlog::warn("cell k={} delta={}: {}: {}", k, delta, cell.status, cell.error);
  return cell;
}

fs::path ensure_output_dir(const ExperimentConfig& config) {
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw ConfigError("cannot create output_dir " + config.output_dir.string() + ": " + ec.message());
  return config.output_dir;
}

}  // namespace

// ---- public ---------------------------------------------------------------

ExperimentConfig parse_config(std::string_view text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j, base_dir);
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

void apply_override(ExperimentConfig& config, std::string_view assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override must look like key=value, got '" + std::string(assignment) + "'");
  }
  std::string key(assignment.substr(0, eq));
  std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json doc = to_json(config);
  json* target = &doc;
  std::string::size_type start = 0;
  while (true) {
    auto dot = key.find('.', start);
    std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!target->is_object() || !target->contains(part)) throw ConfigError("unknown config field '" + key + "'");
    target = &(*target)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (key == "flags.lb_mode" && value.is_number_integer()) value = {{"L", value}};
  *target = value;
  config = from_json(doc, {});
}

std::string config_to_json(const ExperimentConfig& config) { return to_json(config).dump(2); }

Dataset ingest(const ExperimentConfig& config) {
  std::ifstream in(config.dataset_path);
  if (!in) throw ConfigError("cannot open dataset " + config.dataset_path.string());
  std::string header_line;
  if (!std::getline(in, header_line)) throw ConfigError("dataset " + config.dataset_path.string() + " is empty");
  if (header_line.size() >= 3 && header_line.compare(0, 3, "\xEF\xBB\xBF") == 0) header_line.erase(0, 3);
  const char delim = detect_delimiter(header_line);
  std::vector<std::string> header = split_line(header_line, delim);
  auto column = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("column '" + name + "' not found in " + config.dataset_path.string());
    return static_cast<int>(it - header.begin());
  };
  std::vector<int> coord_cols, attr_cols;
  for (const auto& c : config.coordinate_columns) coord_cols.push_back(column(c));
  for (const auto& a : config.sensitive_attributes) attr_cols.push_back(column(a.column));

  std::vector<std::vector<double>> coords;
  std::vector<std::vector<std::string>> values;
  std::vector<int> rows;
  int read = 0, dropped = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const int row = read++;
    auto cells = split_line(line, delim);
    std::vector<double> point;
    bool ok = true;
    for (int c : coord_cols) {
      auto v = c < static_cast<int>(cells.size()) ? parse_number(cells[c]) : std::nullopt;
      if (!v) {
        ok = false;
        break;
      }
      point.push_back(*v);
    }
    std::vector<std::string> attrs;
    for (int c : attr_cols) {
      if (c >= static_cast<int>(cells.size()) || cells[c].empty()) {
        ok = false;
        break;
      }
      attrs.push_back(cells[c]);
    }
    if (!ok) {
      ++dropped;
      continue;
    }
    coords.push_back(std::move(point));
    values.push_back(std::move(attrs));
    rows.push_back(row);
  }
  if (dropped > 0) spdlog::info("dropped {} of {} rows with missing or non-numeric values", dropped, read);
  if (coords.empty()) throw ConfigError("dataset has no usable rows after cleaning");

  std::vector<int> keep(coords.size());
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = static_cast<int>(i);
  if (config.max_points) {
    if (*config.max_points > static_cast<int>(coords.size())) {
      throw ConfigError("max_points = " + std::to_string(*config.max_points) + " exceeds the " +
                        std::to_string(coords.size()) + " rows left after cleaning");
    }
    auto rng = make_stream(config.seed, kSubsampleStream);
    std::shuffle(keep.begin(), keep.end(), rng);
    keep.resize(*config.max_points);
    std::sort(keep.begin(), keep.end());
  }

  const int n = static_cast<int>(keep.size());
  const int dim = static_cast<int>(coord_cols.size());
  Eigen::MatrixXd x(n, dim);
  for (int v = 0; v < n; ++v) {
    for (int d = 0; d < dim; ++d) x(v, d) = coords[keep[v]][d];
  }
  if (config.flags.standardize) {
    for (int d = 0; d < dim; ++d) {
      double mean = x.col(d).mean();
      x.col(d).array() -= mean;
      double sd = std::sqrt(x.col(d).squaredNorm() / n);
      if (sd > 0.0) x.col(d) /= sd;
    }
  }

  std::vector<std::vector<int>> groups;
  std::vector<std::string> names;
  for (std::size_t a = 0; a < config.sensitive_attributes.size(); ++a) {
    const auto& attr = config.sensitive_attributes[a];
    std::map<std::string, std::vector<int>> by_name;
    for (int v = 0; v < n; ++v) {
      const std::string& raw = values[keep[v]][a];
      if (attr.mapping.empty()) {
        by_name[raw].push_back(v);
      } else if (auto it = attr.mapping.find(raw); it != attr.mapping.end()) {
        by_name[it->second].push_back(v);
      }
    }
    if (!attr.mapping.empty()) {
      for (const auto& [raw, name] : attr.mapping) {
        if (by_name[name].empty()) {
          throw ConfigError("group '" + attr.column + "=" + name + "' has no members");
        }
      }
    }
    for (auto& [name, members] : by_name) {
      names.push_back(attr.column + "=" + name);
      groups.push_back(std::move(members));
    }
  }
  if (groups.empty()) {
    // No sensitive attribute: a single all-client group keeps the problem well formed.
    names.push_back("all");
    groups.emplace_back(n);
    for (int v = 0; v < n; ++v) groups.back()[v] = v;
  }

  int k = std::min(n, *std::max_element(config.k_values.begin(), config.k_values.end()));
  ClusteringInstance inst = ClusteringInstance::from_coordinates(std::move(x), std::move(groups), k, config.p);
  if (config.flags.validate_metric) {
    ClusteringInstance::from_distance_matrix(inst.client_facility_distances(), n, inst.groups(), k, config.p,
                                             MetricCheck::kAlways);
  }
  std::vector<int> source;
  for (int i : keep) source.push_back(rows[i]);
  spdlog::info("ingested {} points, {} groups, Delta = {}", n, inst.num_groups(), inst.max_groups_per_client());
  return Dataset{std::move(inst), std::move(names), read, dropped, std::move(source)};
}

int ExperimentReport::failures() const {
  return static_cast<int>(std::count_if(cells.begin(), cells.end(), [](const CellResult& c) { return c.status != "ok"; }));
}

ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  Dataset data = ingest(config);
  std::vector<std::pair<int, double>> grid;
  for (int k : config.k_values) {
    for (double d : config.delta_values) grid.emplace_back(k, d);
  }
  std::vector<CellResult> cells(grid.size());
  run_pool(static_cast<int>(grid.size()), options.jobs, [&](int i) {
    spdlog::debug("cell k={} delta={} started", grid[i].first, grid[i].second);
    cells[i] = run_cell(config, data, grid[i].first, grid[i].second, options);
    spdlog::info("cell k={} delta={} {} lambda={} cost_of_fairness={}", cells[i].k, cells[i].delta, cells[i].status,
                 cells[i].lambda_max, cells[i].cost_of_fairness);
  });
  return ExperimentReport{config, std::move(data), std::move(cells)};
}

std::string cells_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "k,delta,status,vanilla_cost,fair_cost,cost_of_fairness,lambda_max,min_balance,lp_objective,"
         "rounding_iterations,aflp_cost,opt_vnll,opt_fair\n";
  for (const auto& c : report.cells) {
    out << c.k << ',' << fmt(c.delta) << ',' << c.status << ',' << fmt(c.vanilla_cost) << ',' << fmt(c.fair_cost)
        << ',' << fmt(c.cost_of_fairness) << ',' << fmt(c.lambda_max) << ',' << fmt(c.min_balance) << ','
        << fmt(c.lp_objective) << ',' << c.rounding_iterations << ',' << fmt(c.aflp_cost) << ','
        << fmt(c.opt_vnll) << ',' << fmt(c.opt_fair) << '\n';
  }
  return out.str();
}

std::string clusters_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "k,delta,facility,size,balance";
  for (const auto& g : report.dataset.group_names) out << ',' << '"' << g << '"';
  out << '\n';
  for (const auto& c : report.cells) {
    for (const auto& cl : c.clusters) {
      out << c.k << ',' << fmt(c.delta) << ',' << cl.facility << ',' << cl.size << ',' << fmt(cl.balance);
      for (int g : cl.group_count) out << ',' << g;
      out << '\n';
    }
  }
  return out.str();
}

std::string report_json(const ExperimentReport& report) {
  json cells = json::array();
  for (const auto& c : report.cells) {
    json cell = {{"k", c.k},
                 {"delta", c.delta},
                 {"status", c.status},
                 {"seed", report.config.seed},
                 {"solver_id", to_string(report.config.solver_id)}};
    if (!c.error.empty()) cell["error"] = c.error;
    if (c.status == "ok") {
      cell["vanilla_cost"] = num(c.vanilla_cost);
      cell["fair_cost"] = num(c.fair_cost);
      cell["cost_of_fairness"] = num(c.cost_of_fairness);
      cell["lambda_max"] = num(c.lambda_max);
      cell["min_balance"] = num(c.min_balance);
      cell["lp_objective"] = num(c.lp_objective);
      cell["rounding_iterations"] = c.rounding_iterations;
      if (!c.aflp_status.empty()) {
        cell["aflp_status"] = c.aflp_status;
        cell["aflp_cost"] = c.aflp_cost ? num(*c.aflp_cost) : json(nullptr);
      }
      if (!c.oracle_status.empty()) {
        cell["oracle_status"] = c.oracle_status;
        cell["opt_vnll"] = c.opt_vnll ? num(*c.opt_vnll) : json(nullptr);
        cell["opt_fair"] = c.opt_fair ? num(*c.opt_fair) : json(nullptr);
      }
      json balance = json::object();
      json clusters = json::array();
      int total = 0;
      for (const auto& cl : c.clusters) {
        balance[std::to_string(cl.facility)] = cl.balance;
        clusters.push_back({{"facility", cl.facility}, {"size", cl.size}, {"balance", cl.balance},
                            {"group_count", cl.group_count}});
        total += cl.size;
      }
      std::vector<ClusterSummary> largest = c.clusters;
      std::stable_sort(largest.begin(), largest.end(),
                       [](const ClusterSummary& a, const ClusterSummary& b) { return a.size > b.size; });
      if (largest.size() > 3) largest.resize(3);
      json top = json::array();
      for (const auto& cl : largest) top.push_back({{"facility", cl.facility}, {"size", cl.size}, {"balance", cl.balance}});
      cell["per_cluster_balance"] = balance;
      cell["largest_clusters"] = top;
      cell["clusters"] = clusters;
      cell["total_clients"] = total;
    }
    json timings = json::object();
    for (const auto& [phase, ms] : c.timings_ms) timings[phase] = ms;
    cell["timings_ms"] = timings;
    cells.push_back(cell);
  }
  const auto& inst = report.dataset.instance;
  json doc = {{"config", to_json(report.config)},
              {"dataset",
               {{"rows_read", report.dataset.rows_read},
                {"rows_dropped", report.dataset.rows_dropped},
                {"n", inst.num_clients()},
                {"groups", report.dataset.group_names},
                {"max_groups_per_client", inst.max_groups_per_client()}}},
              {"failures", report.failures()},
              {"cells", cells}};
  return doc.dump(2) + "\n";
}

void write_reports(const ExperimentReport& report) {
  fs::path dir = ensure_output_dir(report.config);
  write_file(dir / "report.json", report_json(report));
  write_file(dir / "cells.csv", cells_csv(report));
  write_file(dir / "clusters.csv", clusters_csv(report));
  spdlog::info("wrote reports to {}", dir.string());
}

std::vector<LbCell> run_lower_bounded(const ExperimentConfig& config, int lower_bound, int jobs) {
  Dataset data = ingest(config);
  std::vector<LbCell> cells(config.k_values.size());
  run_pool(static_cast<int>(cells.size()), jobs, [&](int i) {
    LbCell& cell = cells[i];
    cell.k = config.k_values[i];
    cell.lower_bound = lower_bound;
    try {
      LbResult r = lb_clustering(data.instance, lower_bound, cell.k, config.solver_id, config.seed);
      cell.vanilla_cost = r.vanilla.cost;
      cell.cost = r.cost;
      cell.opened = static_cast<int>(r.assignment.opened().size());
      cell.subsets_evaluated = r.subsets_evaluated;
      ClusterCounts counts = cluster_counts(data.instance, r.assignment);
      cell.min_cluster = *std::min_element(counts.size.begin(), counts.size.end());
    } catch (const ConfigError&) {
      throw;
    } catch (const InfeasibleError& e) {
      cell.status = "infeasible";
      cell.error = e.what();
    } catch (const std::exception& e) {
      cell.status = "failed";
      cell.error = e.what();
    }
  });
  fs::path dir = ensure_output_dir(config);
  std::ostringstream csv;
  csv << "k,L,status,vanilla_cost,lb_cost,opened,min_cluster,subsets_evaluated\n";
  json arr = json::array();
  for (const auto& c : cells) {
    csv << c.k << ',' << c.lower_bound << ',' << c.status << ',' << fmt(c.vanilla_cost) << ',' << fmt(c.cost) << ','
        << c.opened << ',' << c.min_cluster << ',' << c.subsets_evaluated << '\n';
    json j = {{"k", c.k},           {"L", c.lower_bound},         {"status", c.status},
              {"vanilla_cost", num(c.vanilla_cost)}, {"lb_cost", num(c.cost)}, {"opened", c.opened},
              {"min_cluster", c.min_cluster}, {"subsets_evaluated", c.subsets_evaluated}};
    if (!c.error.empty()) j["error"] = c.error;
    arr.push_back(j);
  }
  write_file(dir / "lb.csv", csv.str());
  write_file(dir / "lb.json", json{{"config", to_json(config)}, {"cells", arr}}.dump(2) + "\n");
  return cells;
}

std::vector<OracleCell> run_oracle(const ExperimentConfig& config, double guard) {
  Dataset data = ingest(config);
  std::vector<OracleCell> out;
  for (int k : config.k_values) {
    ClusteringInstance inst = data.instance.with_k(std::min(k, data.instance.num_facilities()));
    // Refuse before doing any work when the dataset is not tiny.
    double states = fair_state_count(inst);
    if (states > guard) {
      throw GuardExceeded("oracle: " + fmt(states) + " states exceed the guard " + fmt(guard), states);
    }
    for (double delta : config.delta_values) {
      OracleCell cell;
      cell.k = k;
      cell.delta = delta;
      try {
        FairnessProfile profile =
            config.flags.vacuous ? FairnessProfile::vacuous(inst.num_groups()) : delta_to_profile(inst, delta);
        OracleResult o = brute_force_fair(inst, profile, guard);
        cell.opt_vnll = o.vnll->cost;
        FairClusteringResult fr = fair_clustering(inst, profile, config.solver_id, config.seed);
        cell.vanilla_cost = fr.report.vanilla_cost;
        cell.fair_cost = fr.report.fair_cost;
        if (o.fair) {
          cell.opt_fair = o.fair->cost;
          double rho = cell.opt_vnll > 0.0 ? cell.vanilla_cost / cell.opt_vnll : 1.0;
          cell.bound = (rho + 2.0) * o.fair->cost;
          cell.within_bound = cell.fair_cost <= cell.bound + 1e-6;
        } else {
          cell.status = "fair infeasible";
        }
      } catch (const InfeasibleError& e) {
        cell.status = "infeasible";
        cell.error = e.what();
      } catch (const std::exception& e) {
        cell.status = "failed";
        cell.error = e.what();
      }
      out.push_back(cell);
    }
  }
  fs::path dir = ensure_output_dir(config);
  std::ostringstream csv;
  csv << "k,delta,status,opt_vnll,opt_fair,vanilla_cost,fair_cost,bound,within_bound\n";
  for (const auto& c : out) {
    csv << c.k << ',' << fmt(c.delta) << ',' << c.status << ',' << fmt(c.opt_vnll) << ',' << fmt(c.opt_fair) << ','
        << fmt(c.vanilla_cost) << ',' << fmt(c.fair_cost) << ',' << fmt(c.bound) << ','
        << (c.within_bound ? "true" : "false") << '\n';
  }
  write_file(dir / "oracle.csv", csv.str());
  return out;
}

}  // namespace faircluster
