#include "hetsca/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "hetsca/errors.hpp"

namespace hetsca {

using nlohmann::json;

namespace {

const std::vector<std::string>& solver_fields() {
  static const std::vector<std::string> fields{"beta", "gamma", "tol", "inner_tol", "max_iters", "init"};
  return fields;
}

bool is_solver_field(const std::string& key) {
  const auto& f = solver_fields();
  return std::find(f.begin(), f.end(), key) != f.end();
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, e.what());
  }
}

template <class T>
T solver_value(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::ValidationError, "solver." + key + " has the wrong type", key);
  }
}

void set_solver_field(SolverOverrides& s, const std::string& key, const json& value) {
  if (key == "beta") {
    s.beta = solver_value<double>(value, key);
    if (!(*s.beta >= 0.0)) throw Error(Errc::ValidationError, "beta must be >= 0", key);
  } else if (key == "gamma") {
    s.gamma = solver_value<double>(value, key);
    if (!(*s.gamma >= 0.0)) throw Error(Errc::ValidationError, "gamma must be >= 0", key);
  } else if (key == "tol") {
    s.tol = solver_value<double>(value, key);
    if (!(*s.tol > 0.0)) throw Error(Errc::ValidationError, "tol must be > 0", key);
  } else if (key == "inner_tol") {
    s.inner_tol = solver_value<double>(value, key);
    if (!(*s.inner_tol > 0.0)) throw Error(Errc::ValidationError, "inner_tol must be > 0", key);
  } else if (key == "max_iters") {
    s.max_iters = solver_value<int>(value, key);
    if (*s.max_iters < 1) throw Error(Errc::ValidationError, "max_iters must be >= 1", key);
  } else if (key == "init") {
    s.init = parse_init_policy(solver_value<std::string>(value, key));
  } else {
    throw Error(Errc::ValidationError, "unknown solver key '" + key + "'", key);
  }
}

SolverOverrides solver_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::ValidationError, "solver must be an object", "solver");
  SolverOverrides s;
  for (const auto& [key, value] : j.items()) set_solver_field(s, key, value);
  return s;
}

// Sweep values are JSON literals; anything that does not parse is a string.
std::string as_json_literal(const std::string& raw) { return json::accept(raw) ? raw : json(raw).dump(); }

std::string join_ints(const std::vector<int>& v) {
  if (std::all_of(v.begin(), v.end(), [&](int x) { return x == v.front(); })) return std::to_string(v.front());
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ";" : "") + std::to_string(v[i]);
  return out;
}

std::string num(double x) { return fmt::format("{}", x); }

std::string algo_slug(Algorithm a) { return a == Algorithm::Sca ? "sca" : "insca"; }

void check_zf_dimensions(const NetworkConfig& cfg) {
  if (cfg.scenario != Scenario::IbcZf) return;
  for (int k = 0; k < cfg.num_cells; ++k) {
    if (cfg.users_per_cell[k] * cfg.rx_antennas > cfg.tx_antennas * cfg.bs_per_cell[k]) {
      throw Error(Errc::InfeasibleZF, fmt::format("cell {}: I_k * N exceeds the transmit dimension", k));
    }
  }
}

}  // namespace

SolverOverrides parse_solver_overrides(std::string_view json_text) { return solver_from_json(parse_json(json_text)); }

PlanConfig parse_plan_config(std::string_view json_text) {
  json j = parse_json(json_text);
  PlanConfig plan;
  if (j.is_object() && j.contains("solver")) {
    plan.solver = solver_from_json(j.at("solver"));
    j.erase("solver");
  }
  plan.network = parse_config(j.dump());
  return plan;
}

PlanConfig load_plan_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_plan_config(buf.str());
}

SweepAxis parse_sweep(std::string_view spec) {
  const auto eq = spec.find('=');
  if (eq == std::string_view::npos || eq == 0 || eq + 1 >= spec.size()) {
    throw Error(Errc::ValidationError, "sweep must look like field=v1,v2,...", "sweep");
  }
  SweepAxis axis;
  axis.field = std::string(spec.substr(0, eq));
  std::string rest(spec.substr(eq + 1));
  std::stringstream ss(rest);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw Error(Errc::ValidationError, "empty sweep value", axis.field);
    axis.values.push_back(item);
  }
  return axis;
}

std::vector<std::uint64_t> parse_seeds(std::string_view spec, std::uint64_t base_seed) {
  std::vector<std::uint64_t> seeds;
  const std::string s(spec);
  try {
    if (s.find(',') == std::string::npos) {
      const auto n = std::stoll(s);
      if (n < 1) throw Error(Errc::ValidationError, "need at least one seed", "seeds");
      for (long long i = 0; i < n; ++i) seeds.push_back(base_seed + static_cast<std::uint64_t>(i));
      return seeds;
    }
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) seeds.push_back(std::stoull(item));
  } catch (const std::logic_error&) {
    throw Error(Errc::ValidationError, "seeds must be a count or a comma-separated list", "seeds");
  }
  if (seeds.empty()) throw Error(Errc::ValidationError, "need at least one seed", "seeds");
  return seeds;
}

std::vector<GridPoint> expand_grid(const ExperimentPlan& plan) {
  validate(plan.base);
  std::vector<GridPoint> points{{0, plan.base, plan.solver, ""}};
  for (const auto& axis : plan.sweeps) {
    if (axis.values.empty()) throw Error(Errc::ValidationError, "sweep has no values", axis.field);
    std::vector<GridPoint> next;
    for (const auto& p : points) {
      for (const auto& raw : axis.values) {
        GridPoint q = p;
        const std::string literal = as_json_literal(raw);
        if (is_solver_field(axis.field)) {
          set_solver_field(q.solver, axis.field, parse_json(literal));
        } else {
          q.config = with_field(q.config, axis.field, literal);
        }
        q.label += (q.label.empty() ? "" : ";") + axis.field + "=" + raw;
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    points[i].index = i;
    if (points[i].label.empty()) points[i].label = "base";
    check_zf_dimensions(points[i].config);
  }
  return points;
}

RunSettings settings_for(const SolverOverrides& solver, Algorithm algorithm) {
  RunSettings s;
  s.algorithm = algorithm;
  if (solver.beta) s.beta = {*solver.beta};
  s.gamma = solver.gamma;
  if (solver.tol) s.tol = *solver.tol;
  if (solver.inner_tol) s.inner_tol = *solver.inner_tol;
  if (solver.max_iters) s.max_iters = *solver.max_iters;
  if (solver.init) s.init = *solver.init;
  return s;
}

RunRecord execute_run(const GridPoint& point, std::uint64_t seed, Algorithm algorithm, int restarts) {
  RunRecord rec;
  rec.point = point.index;
  rec.seed = seed;
  rec.algorithm = algorithm;
  rec.config = point.config;
  rec.config.rng_seed = seed;
  rec.trace_file = fmt::format("traces/p{:03}_s{}_{}.csv", point.index, seed, algo_slug(algorithm));
  try {
    const ChannelSet ch = generate_instance(rec.config);
    for (int r = 0; r < std::max(restarts, 1); ++r) {
      RunSettings settings = settings_for(point.solver, algorithm);
      settings.init_seed = seed + static_cast<std::uint64_t>(r) * 0x9E3779B97F4A7C15ULL;
      if (r > 0) settings.init = InitPolicy::ScaledRandom;
      SolveReport report = run(ch, settings);
      if (!rec.report || report.objective > rec.report->objective) rec.report = std::move(report);
    }
  } catch (const Error& e) {
    rec.report.reset();
    rec.error = e.what();
  }
  return rec;
}

void write_trace(const std::filesystem::path& path, const std::vector<TraceRow>& rows, bool timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << kTraceHeader << '\n';
  for (const auto& r : rows) {
    out << r.iter << ',' << num(r.objective) << ',' << num(r.surrogate) << ',' << num(r.step) << ','
        << num(timing ? r.wall_ms : 0.0) << ',' << num(r.kkt_residual) << '\n';
  }
}

void write_summary(const std::filesystem::path& path, const std::vector<RunRecord>& records, bool timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << kSummaryHeader << '\n';
  for (const auto& rec : records) {
    if (!rec.report) continue;
    const auto& c = rec.config;
    const auto& r = *rec.report;
    out << to_string(c.scenario) << ',' << to_string(rec.algorithm) << ',' << c.num_cells << ','
        << join_ints(c.bs_per_cell) << ',' << join_ints(c.users_per_cell) << ',' << c.tx_antennas << ','
        << c.rx_antennas << ',' << join_ints(c.streams) << ',' << rec.seed << ',' << num(r.beta.front()) << ','
        << num(r.gamma) << ',' << num(r.sum_rate() / std::numbers::ln2) << ',' << r.iterations << ','
        << num(timing ? r.wall_ms : 0.0) << ',' << num(r.mean_cluster_size()) << '\n';
  }
}

Aggregate mean_and_std_error(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  const double n = static_cast<double>(values.size());
  for (double x : values) a.mean += x;
  a.mean /= n;
  if (values.size() < 2) return a;
  double ss = 0.0;
  for (double x : values) ss += (x - a.mean) * (x - a.mean);
  a.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return a;
}

void write_aggregate(const std::filesystem::path& path, const std::vector<GridPoint>& points,
                     const std::vector<RunRecord>& records, bool timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << "point,label,scenario,algorithm,K,Q,I,M,N,d,runs,mean_sumrate_bits,se_sumrate_bits,mean_iters,se_iters,"
         "mean_wall_ms,se_wall_ms,mean_cluster_size,se_cluster_size\n";
  std::map<std::pair<std::size_t, int>, std::vector<const RunRecord*>> groups;
  for (const auto& rec : records) {
    if (rec.report) groups[{rec.point, static_cast<int>(rec.algorithm)}].push_back(&rec);
  }
  for (const auto& [key, group] : groups) {
    const auto& point = points.at(key.first);
    const auto& c = point.config;
    std::vector<double> rate, iters, wall, cluster;
    for (const auto* rec : group) {
      rate.push_back(rec->report->sum_rate() / std::numbers::ln2);
      iters.push_back(rec->report->iterations);
      wall.push_back(timing ? rec->report->wall_ms : 0.0);
      cluster.push_back(rec->report->mean_cluster_size());
    }
    const auto a_rate = mean_and_std_error(rate);
    const auto a_iter = mean_and_std_error(iters);
    const auto a_wall = mean_and_std_error(wall);
    const auto a_cluster = mean_and_std_error(cluster);
    out << point.index << ",\"" << point.label << "\"," << to_string(c.scenario) << ','
        << to_string(static_cast<Algorithm>(key.second)) << ',' << c.num_cells << ',' << join_ints(c.bs_per_cell)
        << ',' << join_ints(c.users_per_cell) << ',' << c.tx_antennas << ',' << c.rx_antennas << ','
        << join_ints(c.streams) << ',' << group.size() << ',' << num(a_rate.mean) << ',' << num(a_rate.std_error)
        << ',' << num(a_iter.mean) << ',' << num(a_iter.std_error) << ',' << num(a_wall.mean) << ','
        << num(a_wall.std_error) << ',' << num(a_cluster.mean) << ',' << num(a_cluster.std_error) << '\n';
  }
}

int run_experiment(const ExperimentPlan& plan, std::ostream& log) {
  std::vector<GridPoint> points;
  try {
    if (plan.seeds.empty()) throw Error(Errc::ValidationError, "need at least one seed", "seeds");
    if (plan.algorithms.empty()) throw Error(Errc::ValidationError, "need at least one algorithm", "algo");
    if (plan.restarts < 1) throw Error(Errc::ValidationError, "restarts must be >= 1", "restarts");
    points = expand_grid(plan);
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  struct Job {
    const GridPoint* point;
    std::uint64_t seed;
    Algorithm algorithm;
  };
  std::vector<Job> jobs;
  for (const auto& p : points)
    for (auto seed : plan.seeds)
      for (auto algo : plan.algorithms) jobs.push_back({&p, seed, algo});

  std::error_code ec;
  std::filesystem::create_directories(plan.out_dir / "traces", ec);
  if (ec) {
    log << "error: cannot create " << (plan.out_dir / "traces").string() << ": " << ec.message() << '\n';
    return kExitSolverFailure;
  }

  std::vector<RunRecord> records(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& job = jobs[i];
      records[i] = execute_run(*job.point, job.seed, job.algorithm, plan.restarts);
      auto& rec = records[i];
      if (rec.report) {
        try {
          write_trace(plan.out_dir / rec.trace_file, rec.report->trace, plan.timing);
        } catch (const Error& e) {
          rec.error = e.what();
          rec.report.reset();
        }
      }
      if (!rec.error.empty()) {
        std::lock_guard lock(log_mutex);
        log << fmt::format("run failed: point {} seed {} {}: {}\n", rec.point, rec.seed, to_string(rec.algorithm),
                           rec.error);
      }
    }
  };
  const int workers = std::clamp(plan.jobs, 1, static_cast<int>(std::max<std::size_t>(jobs.size(), 1)));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }

  try {
    write_summary(plan.out_dir / "summary.csv", records, plan.timing);
    write_aggregate(plan.out_dir / "aggregate.csv", points, records, plan.timing);
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitSolverFailure;
  }
  const bool failed = std::any_of(records.begin(), records.end(), [](const RunRecord& r) { return !r.report; });
  return failed ? kExitSolverFailure : kExitOk;
}

}  // namespace hetsca
