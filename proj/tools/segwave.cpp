// segwave command-line front end: optimization, evaluation, sweeps and
// exports for composite segmented dual-rail waveguide gates.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "segwave/errors.hpp"
#include "segwave/log.hpp"
#include "segwave/metrics.hpp"
#include "segwave/optimizer.hpp"
#include "segwave/rng.hpp"
#include "segwave/serialization.hpp"
#include "segwave/thread_pool.hpp"
#include "segwave/version.hpp"

namespace fs = std::filesystem;
using namespace segwave;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  int jobs = std::max(1u, std::thread::hardware_concurrency());
  bool paper_scale = false;
  double calibration_factor = 1.0;
};

json load_config(const CommonOptions& opt) {
  if (opt.config_path.empty()) return json::object();
  std::ifstream in(opt.config_path);
  if (!in) throw ConfigError("cannot open config '" + opt.config_path + "'");
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config '" + opt.config_path + "': " + e.what());
  }
}

std::uint64_t root_seed(const json& config, const CommonOptions& opt) {
  if (opt.seed) return *opt.seed;
  return config.value("seed", std::uint64_t{0});
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericError("cannot write '" + path.string() + "'");
  out << content;
}

// One manifest per output directory, append-only; timestamps live here and
// nowhere else, so data files stay byte-identical across reruns.
void append_manifest(const CommonOptions& opt, const std::string& command,
                     std::uint64_t seed, double duration_s) {
  json entry{{"command", command},
             {"config", opt.config_path},
             {"seed", seed},
             {"out_dir", opt.out_dir},
             {"tool_version", kVersion},
             {"jobs", opt.jobs},
             {"duration_s", duration_s}};
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  entry["timestamp_utc"] = buf;
  fs::create_directories(opt.out_dir);
  std::ofstream out(fs::path(opt.out_dir) / "manifest.jsonl", std::ios::app);
  out << entry.dump() << "\n";
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

OptimizeConfig build_optimize_config(const json& config,
                                     const CommonOptions& opt) {
  OptimizeConfig cfg = optimize_config_from_json(config);
  cfg.seed = root_seed(config, opt);
  if (opt.paper_scale) {
    cfg.epochs = 5000;
    cfg.batch_size = 1024;
  }
  return cfg;
}

std::array<complexd, 2> parse_state(const std::string& spec) {
  const double s = 1.0 / std::sqrt(2.0);
  if (spec == "0") return {complexd{1.0, 0.0}, complexd{0.0, 0.0}};
  if (spec == "1") return {complexd{0.0, 0.0}, complexd{1.0, 0.0}};
  if (spec == "+") return {complexd{s, 0.0}, complexd{s, 0.0}};
  if (spec == "-") return {complexd{s, 0.0}, complexd{-s, 0.0}};
  if (spec == "+y" || spec == "+i") return {complexd{s, 0.0}, complexd{0.0, s}};
  if (spec == "-y" || spec == "-i") return {complexd{s, 0.0}, complexd{0.0, -s}};
  std::istringstream in(spec);
  double v[4];
  char comma = ',';
  if (!(in >> v[0] >> comma >> v[1] >> comma >> v[2] >> comma >> v[3])) {
    throw ConfigError("state '" + spec +
                      "' not recognized (use 0,1,+,-,+y,-y or re,im,re,im)");
  }
  std::array<complexd, 2> psi{complexd{v[0], v[1]}, complexd{v[2], v[3]}};
  const double norm = std::norm(psi[0]) + std::norm(psi[1]);
  if (std::abs(norm - 1.0) > 1e-9) {
    throw ConfigError("state '" + spec + "' is not normalized");
  }
  return psi;
}

OptimizedDesign run_single_optimization(const OptimizeConfig& cfg,
                                        const CouplingMap& map, int jobs,
                                        bool* feasible) {
  try {
    auto r = optimize(cfg, map, jobs);
    if (feasible != nullptr) *feasible = true;
    return r;
  } catch (AllRestartsInfeasibleError& e) {
    if (feasible == nullptr) throw;
    *feasible = false;
    return std::move(e.best_candidate);
  }
}

// ---------------- optimize ----------------

int cmd_optimize(const CommonOptions& opt) {
  Stopwatch timer;
  const json config = load_config(opt);
  auto [map, material] = map_from_json(config);
  OptimizeConfig cfg = build_optimize_config(config, opt);

  log::info("optimize: gate " + cfg.gate.label() + ", N=" +
            std::to_string(cfg.n_segments) + ", " +
            std::to_string(cfg.restarts) + " restarts");
  const auto result = optimize(cfg, *map, opt.jobs);

  EvaluationReport report = result.report;
  if (opt.calibration_factor != 1.0) {
    PowerLossOptions loss_opt;
    loss_opt.calibration_factor = opt.calibration_factor;
    report.power = design_power_loss(result.design, *map, loss_opt);
  }

  const ResultLabels labels{cfg.gate.label(), material,
                            to_string(cfg.regularizer_mode)};
  OptimizedDesign labeled = result;
  labeled.report = report;
  const fs::path out(opt.out_dir);
  write_file(out / "design.json", design_to_json(result.design).dump(2) + "\n");
  write_file(out / "report.json", report_to_json(report).dump(2) + "\n");
  write_file(out / "trace.csv", cost_trace_csv(result.trace));

  // Post-hoc manufacturing quantization, re-evaluated with the same noise
  // stream so the fidelity degradation is attributable to rounding alone.
  const Design quantized = quantize(result.design, cfg.resolution_nm);
  NoiseSpec eval_noise = cfg.noise;
  eval_noise.seed = derive_seed(cfg.seed, "final-eval");
  PowerLossOptions loss_opt;
  loss_opt.calibration_factor = opt.calibration_factor;
  const auto q_report = evaluate_design(quantized, *map, eval_noise,
                                        cfg.gate.unitary(), cfg.n_eval_samples,
                                        loss_opt);
  const auto q_verdict = feasibility_filter(quantized, cfg);
  json result_json = optimized_to_json(labeled, labels);
  result_json["quantized"] = {
      {"resolution_nm", cfg.resolution_nm},
      {"design", design_to_json(quantized)},
      {"report", report_to_json(q_report)},
      {"feasible", q_verdict.feasible},
      {"feasibility_reasons", q_verdict.reasons},
      {"fidelity_degradation", report.fidelity.mean - q_report.fidelity.mean}};
  write_file(out / "result.json", result_json.dump(2) + "\n");
  write_file(out / "design_quantized.json",
             design_to_json(quantized).dump(2) + "\n");
  append_manifest(opt, "optimize", cfg.seed, timer.seconds());
  std::printf("optimize: mean_F=%.6f std_F=%.6f loss=%.6g (restart %d)\n",
              report.fidelity.mean, report.fidelity.std_dev,
              report.power.total_loss, result.restart_index);
  return 0;
}

// ---------------- evaluate ----------------

int cmd_evaluate(const CommonOptions& opt, const std::string& design_path) {
  Stopwatch timer;
  const json config = load_config(opt);
  auto [map, material] = map_from_json(config);
  const Design design = load_design(design_path);
  const GateSpec gate = gate_from_json(config);
  NoiseSpec noise = noise_from_json(config);
  noise.seed = derive_seed(root_seed(config, opt), "evaluate");
  const int n_samples =
      config.value("evaluate", json::object()).value("n_samples", 10000);

  PowerLossOptions loss_opt;
  loss_opt.calibration_factor = opt.calibration_factor;
  const auto report = evaluate_design(design, *map, noise, gate.unitary(),
                                      n_samples, loss_opt);
  write_file(fs::path(opt.out_dir) / "report.json",
             report_to_json(report).dump(2) + "\n");
  append_manifest(opt, "evaluate", root_seed(config, opt), timer.seconds());
  std::printf("evaluate: mean_F=%.6f std_F=%.6f loss=%.6g sigma%%=%.3f\n",
              report.fidelity.mean, report.fidelity.std_dev,
              report.power.total_loss, report.sigma_percent);
  return 0;
}

// ---------------- sweep-n ----------------

struct EnsembleStats {
  int members = 0;
  double mean_f = 0.0;
  double std_f = 0.0;
  double stderr_f = 0.0;
  double power_loss = 0.0;
};

EnsembleStats aggregate(const std::vector<const OptimizedDesign*>& runs) {
  EnsembleStats s;
  s.members = static_cast<int>(runs.size());
  if (runs.empty()) return s;
  double mc_se_sq = 0.0;
  for (const auto* r : runs) {
    s.mean_f += r->report.fidelity.mean;
    s.std_f += r->report.fidelity.std_dev;
    s.power_loss += r->report.power.total_loss;
    mc_se_sq += r->report.fidelity.std_error * r->report.fidelity.std_error;
  }
  const double k = static_cast<double>(s.members);
  s.mean_f /= k;
  s.std_f /= k;
  s.power_loss /= k;
  mc_se_sq /= k;
  double var_between = 0.0;
  for (const auto* r : runs) {
    const double d = r->report.fidelity.mean - s.mean_f;
    var_between += d * d;
  }
  var_between /= k;
  s.stderr_f = std::sqrt(std::max(var_between, mc_se_sq) / k);
  return s;
}

int cmd_sweep_n(const CommonOptions& opt) {
  Stopwatch timer;
  const json config = load_config(opt);
  auto [map, material] = map_from_json(config);
  const OptimizeConfig base = build_optimize_config(config, opt);

  const json sweep = config.value("sweep", json::object());
  const std::vector<int> grid =
      sweep.value("n_grid", std::vector<int>{1, 3, 5, 7, 10, 20, 50, 100});
  if (grid.empty()) throw ConfigError("field 'sweep.n_grid' is empty");
  const int runs_per_n = sweep.value("restarts", 20);

  struct Cell {
    int n = 0;
    std::vector<OptimizedDesign> runs;
    std::vector<bool> feasible;
  };
  std::vector<Cell> cells(grid.size());
  struct Task {
    int cell;
    int run;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    cells[c].n = grid[c];
    cells[c].runs.resize(runs_per_n);
    cells[c].feasible.assign(runs_per_n, false);
    for (int r = 0; r < runs_per_n; ++r) tasks.push_back({static_cast<int>(c), r});
  }

  parallel_for(opt.jobs, static_cast<int>(tasks.size()), [&](int t) {
    const auto [c, r] = tasks[t];
    OptimizeConfig cfg = base;
    cfg.n_segments = grid[c];
    cfg.restarts = 1;
    cfg.seed = derive_seed(base.seed, "sweep-n",
                           static_cast<std::uint64_t>(grid[c]) * 1000 + r);
    bool ok = false;
    // Each run is one ensemble member; infeasible members are kept on disk
    // but dropped from the aggregate, mirroring the feasibility filter.
    cells[c].runs[r] = run_single_optimization(cfg, *map, 1, &ok);
    cells[c].feasible[r] = ok;
  });

  std::ostringstream csv;
  csv << "n,members,mean_f,std_f,stderr_f,power_loss\n";
  std::vector<ScalingPoint> points;
  const fs::path out(opt.out_dir);
  const GateSpec gate = base.gate;
  for (auto& cell : cells) {
    std::vector<const OptimizedDesign*> members;
    for (int r = 0; r < runs_per_n; ++r) {
      const ResultLabels labels{gate.label(), material,
                                to_string(base.regularizer_mode)};
      write_file(out / "designs" /
                     ("n" + std::to_string(cell.n) + "_r" + std::to_string(r) +
                      ".json"),
                 optimized_to_json(cell.runs[r], labels).dump(2) + "\n");
      if (cell.feasible[r]) members.push_back(&cell.runs[r]);
    }
    if (members.empty()) {
      throw NumericError("sweep-n: no feasible member at N=" +
                         std::to_string(cell.n));
    }
    if (static_cast<int>(members.size()) < runs_per_n) {
      log::warn("sweep-n: dropped " +
                std::to_string(runs_per_n - members.size()) +
                " infeasible member(s) at N=" + std::to_string(cell.n));
    }
    const auto stats = aggregate(members);
    csv << cell.n << ',' << stats.members << ',' << csv_num(stats.mean_f)
        << ',' << csv_num(stats.std_f) << ',' << csv_num(stats.stderr_f) << ','
        << csv_num(stats.power_loss) << '\n';
    points.push_back({cell.n, stats.mean_f, stats.std_f});
  }

  write_file(out / "sweep_n.csv", csv.str());
  if (points.size() >= 3) {
    const auto fit = fit_scaling_laws(points);
    json fit_json{{"a", fit.a}, {"a_residuals", fit.a_residuals}};
    if (fit.b) {
      fit_json["b"] = *fit.b;
      fit_json["b_residuals"] = fit.b_residuals;
    }
    write_file(out / "scaling_fit.json", fit_json.dump(2) + "\n");
  }
  append_manifest(opt, "sweep-n", base.seed, timer.seconds());
  std::printf("sweep-n: %zu grid points, %d runs each -> %s\n", grid.size(),
              runs_per_n, (out / "sweep_n.csv").c_str());
  return 0;
}

// ---------------- sweep-sigma / sweep-mu ----------------

std::vector<std::string> design_paths_from_config(const json& config) {
  const json sweep = config.value("sweep", json::object());
  if (!sweep.contains("designs")) {
    throw ConfigError("missing required field 'sweep.designs'");
  }
  const auto paths = sweep.at("designs").get<std::vector<std::string>>();
  if (paths.empty()) throw ConfigError("field 'sweep.designs' is empty");
  return paths;
}

int cmd_sweep_sigma(const CommonOptions& opt) {
  Stopwatch timer;
  const json config = load_config(opt);
  auto [map, material] = map_from_json(config);
  const GateSpec gate = gate_from_json(config);
  const auto paths = design_paths_from_config(config);
  const json sweep = config.value("sweep", json::object());
  std::vector<double> grid = sweep.value(
      "sigma_percent_grid",
      std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  if (grid.empty()) throw ConfigError("field 'sweep.sigma_percent_grid' is empty");
  const int n_samples =
      config.value("evaluate", json::object()).value("n_samples", 10000);
  const std::uint64_t seed = root_seed(config, opt);

  std::ostringstream csv;
  csv << "design,n,sigma_percent,sigma_nm,mean_f,std_f,stderr_f\n";
  for (const auto& path : paths) {
    const Design design = load_design(path);
    const double w_mean = design.mean_width_nm();
    for (std::size_t g = 0; g < grid.size(); ++g) {
      NoiseSpec noise;
      noise.sigma_nm = grid[g] * w_mean / 100.0;
      noise.mode = NoiseMode::fully_correlated;
      // Common random numbers across the grid: the same normal draws are
      // scaled by each sigma, so curves differ by the effect, not MC noise.
      noise.seed = derive_seed(seed, "sweep-sigma@" + path);
      const auto stats =
          fidelity_statistics(design, *map, noise, gate.unitary(), n_samples);
      csv << fs::path(path).filename().string() << ',' << design.size() << ','
          << csv_num(grid[g]) << ',' << csv_num(noise.sigma_nm) << ','
          << csv_num(stats.mean) << ',' << csv_num(stats.std_dev) << ','
          << csv_num(stats.std_error) << '\n';
    }
  }
  write_file(fs::path(opt.out_dir) / "sweep_sigma.csv", csv.str());
  append_manifest(opt, "sweep-sigma", seed, timer.seconds());
  return 0;
}

int cmd_sweep_mu(const CommonOptions& opt) {
  Stopwatch timer;
  const json config = load_config(opt);
  auto [map, material] = map_from_json(config);
  const GateSpec gate = gate_from_json(config);
  const auto paths = design_paths_from_config(config);
  const json sweep = config.value("sweep", json::object());
  std::vector<double> grid = sweep.value(
      "mu_grid", std::vector<double>{0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0});
  if (grid.empty()) throw ConfigError("field 'sweep.mu_grid' is empty");
  const double sigma_nm = noise_from_json(config).sigma_nm;
  const int n_samples =
      config.value("evaluate", json::object()).value("n_samples", 10000);
  const std::uint64_t seed = root_seed(config, opt);

  std::ostringstream csv;
  csv << "design,n,mu,mean_f,std_f,stderr_f\n";
  for (const auto& path : paths) {
    const Design design = load_design(path);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      NoiseSpec noise;
      noise.sigma_nm = sigma_nm;
      noise.mode = NoiseMode::correlation;
      noise.mu = grid[g];
      // Common random numbers across the mu grid (see sweep-sigma).
      noise.seed = derive_seed(seed, "sweep-mu@" + path);
      const auto stats =
          fidelity_statistics(design, *map, noise, gate.unitary(), n_samples);
      csv << fs::path(path).filename().string() << ',' << design.size() << ','
          << csv_num(grid[g]) << ',' << csv_num(stats.mean) << ','
          << csv_num(stats.std_dev) << ',' << csv_num(stats.std_error) << '\n';
    }
  }
  write_file(fs::path(opt.out_dir) / "sweep_mu.csv", csv.str());
  append_manifest(opt, "sweep-mu", seed, timer.seconds());
  return 0;
}

// ---------------- table ----------------

struct TableRow {
  std::string gate;
  std::string material;
  std::string method;
  double mean_f = 0.0;
  double std_f = 0.0;
  double length_um = 0.0;
  int n = 0;
  double power_loss_pct = 0.0;
};

std::string format_table_csv(std::vector<TableRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const TableRow& a, const TableRow& b) {
    return std::tie(a.gate, a.material, a.method, a.n) <
           std::tie(b.gate, b.material, b.method, b.n);
  });
  std::ostringstream out;
  out << "gate,material,method,mean_f,std_f,length_um,n,power_loss_pct\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.4f,%.4f,%.6g,%d,%.4f\n",
                  r.gate.c_str(), r.material.c_str(), r.method.c_str(),
                  r.mean_f, r.std_f, r.length_um, r.n, r.power_loss_pct);
    out << buf;
  }
  return out.str();
}

std::string format_table_text(std::vector<TableRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const TableRow& a, const TableRow& b) {
    return std::tie(a.gate, a.material, a.method, a.n) <
           std::tie(b.gate, b.material, b.method, b.n);
  });
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-6s %-4s %-10s %-8s %-8s %-9s %-4s %s\n",
                "Gate", "Mat", "Method", "E[F]", "STD[F]", "Length", "N",
                "PL [%]");
  out << buf;
  for (const auto& r : rows) {
    char len[32];
    std::snprintf(len, sizeof(len), "%.6gum", r.length_um);
    std::snprintf(buf, sizeof(buf), "%-6s %-4s %-10s %-8.4f %-8.4f %-9s %-4d %.4f\n",
                  r.gate.c_str(), r.material.c_str(), r.method.c_str(),
                  r.mean_f, r.std_f, len, r.n, r.power_loss_pct);
    out << buf;
  }
  return out.str();
}

std::vector<TableRow> import_rows_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open table CSV '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty table CSV '" + path + "'");
  if (line.size() && line.back() == '\r') line.pop_back();
  if (line != "gate,material,method,mean_f,std_f,length_um,n,power_loss_pct") {
    throw ConfigError("table CSV '" + path + "' has an unexpected header");
  }
  std::vector<TableRow> rows;
  while (std::getline(in, line)) {
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 8) {
      throw ConfigError("table CSV row with " + std::to_string(fields.size()) +
                        " fields (expected 8): " + line);
    }
    TableRow r;
    r.gate = fields[0];
    r.material = fields[1];
    r.method = fields[2];
    r.mean_f = std::stod(fields[3]);
    r.std_f = std::stod(fields[4]);
    r.length_um = std::stod(fields[5]);
    r.n = std::stoi(fields[6]);
    r.power_loss_pct = std::stod(fields[7]);
    rows.push_back(r);
  }
  return rows;
}

int cmd_table(const CommonOptions& opt, const std::string& designs_dir,
              const std::string& import_csv) {
  Stopwatch timer;
  std::vector<TableRow> rows;
  if (!import_csv.empty()) {
    const auto imported = import_rows_csv(import_csv);
    rows.insert(rows.end(), imported.begin(), imported.end());
  }
  if (!designs_dir.empty()) {
    if (!fs::is_directory(designs_dir)) {
      throw ConfigError("designs directory '" + designs_dir + "' not found");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(designs_dir)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      try {
        std::ifstream in(file);
        json j;
        in >> j;
        TableRow r;
        r.gate = j.at("gate").get<std::string>();
        r.material = j.at("material").get<std::string>();
        r.method = j.at("method").get<std::string>();
        const auto report = report_from_json(j.at("report"));
        const auto design = design_from_json(j.at("design"));
        r.mean_f = report.fidelity.mean;
        r.std_f = report.fidelity.std_dev;
        r.length_um = design.total_length_um();
        r.n = design.size();
        r.power_loss_pct = 100.0 * report.power.total_loss;
        rows.push_back(r);
      } catch (const std::exception& e) {
        log::warn("table: skipping '" + file.string() + "': " + e.what());
      }
    }
  }
  const fs::path out(opt.out_dir);
  write_file(out / "table.csv", format_table_csv(rows));
  write_file(out / "table.txt", format_table_text(rows));
  append_manifest(opt, "table", 0, timer.seconds());
  std::printf("table: %zu rows -> %s\n", rows.size(), (out / "table.csv").c_str());
  return 0;
}

// ---------------- trajectory ----------------

int cmd_trajectory(const CommonOptions& opt, const std::string& design_path,
                   const std::string& state_spec, int substeps) {
  Stopwatch timer;
  const json config = load_config(opt);
  auto [map, material] = map_from_json(config);
  const Design design = load_design(design_path);
  if (substeps < 32) {
    throw ConfigError("trajectory needs at least 32 substeps per segment");
  }
  const auto psi0 = parse_state(state_spec);
  const auto coeffs = nominal_coefficients(design, *map);
  const auto traj = propagate_state(design, coeffs, psi0, substeps);
  write_file(fs::path(opt.out_dir) / "trajectory.csv", trajectory_csv(traj));
  append_manifest(opt, "trajectory", root_seed(config, opt), timer.seconds());
  std::printf("trajectory: %zu points -> %s\n", traj.size(),
              (fs::path(opt.out_dir) / "trajectory.csv").c_str());
  return 0;
}

// ---------------- gen-surrogate-table ----------------

int cmd_gen_surrogate_table(const CommonOptions& opt) {
  Stopwatch timer;
  const json config = load_config(opt);
  auto [map, material] = map_from_json(config);
  const json grid = config.value("table_grid", json::object());
  const double lo = grid.value("w_min_nm", 500.0);
  const double hi = grid.value("w_max_nm", 850.0);
  const double step = grid.value("step_nm", 5.0);
  const auto table = tabulate_map(*map, lo, hi, step);
  write_file(fs::path(opt.out_dir) / "coupling_table.csv",
             coupling_table_csv(table));
  append_manifest(opt, "gen-surrogate-table", 0, timer.seconds());
  std::printf("gen-surrogate-table: %zu x %zu nodes -> %s\n",
              table.w0_grid_nm.size(), table.w1_grid_nm.size(),
              (fs::path(opt.out_dir) / "coupling_table.csv").c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"segwave: composite segmented waveguide gate design"};
  app.require_subcommand(1);

  CommonOptions opt;
  std::string design_path, state_spec = "0", designs_dir, import_csv;
  int substeps = 64;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opt.config_path, "Run configuration JSON");
    cmd->add_option("--out", opt.out_dir, "Output directory");
    cmd->add_option("--seed", opt.seed, "Root seed (overrides config)");
    cmd->add_option("--jobs", opt.jobs, "Worker threads for restarts/sweeps");
    cmd->add_flag("--paper-scale", opt.paper_scale,
                  "Use the publication budgets (5000 epochs, batch 1024)");
    cmd->add_option("--calibration-factor", opt.calibration_factor,
                    "Reflection calibration factor (1.0 = raw Fresnel)");
  };

  auto* optimize_cmd = app.add_subcommand("optimize", "Optimize a gate design");
  add_common(optimize_cmd);
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate a design file");
  add_common(evaluate_cmd);
  evaluate_cmd->add_option("--design", design_path, "Design JSON")->required();
  auto* sweep_n_cmd = app.add_subcommand("sweep-n", "Fidelity/loss vs segment count");
  add_common(sweep_n_cmd);
  auto* sweep_mu_cmd = app.add_subcommand("sweep-mu", "Fidelity vs correlation strength");
  add_common(sweep_mu_cmd);
  auto* sweep_sigma_cmd = app.add_subcommand("sweep-sigma", "Fidelity vs noise width");
  add_common(sweep_sigma_cmd);
  auto* table_cmd = app.add_subcommand("table", "Design table export/import");
  add_common(table_cmd);
  table_cmd->add_option("--designs", designs_dir, "Directory of result JSON files");
  table_cmd->add_option("--import", import_csv, "Merge rows from an existing table CSV");
  auto* trajectory_cmd = app.add_subcommand("trajectory", "Bloch trajectory CSV export");
  add_common(trajectory_cmd);
  trajectory_cmd->add_option("--design", design_path, "Design JSON")->required();
  trajectory_cmd->add_option("--state", state_spec,
                             "Initial state (0,1,+,-,+y,-y or re,im,re,im)");
  trajectory_cmd->add_option("--substeps", substeps, "Substeps per segment (>= 32)");
  auto* gen_table_cmd =
      app.add_subcommand("gen-surrogate-table", "Export a map as a table CSV");
  add_common(gen_table_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (optimize_cmd->parsed()) return cmd_optimize(opt);
    if (evaluate_cmd->parsed()) return cmd_evaluate(opt, design_path);
    if (sweep_n_cmd->parsed()) return cmd_sweep_n(opt);
    if (sweep_mu_cmd->parsed()) return cmd_sweep_mu(opt);
    if (sweep_sigma_cmd->parsed()) return cmd_sweep_sigma(opt);
    if (table_cmd->parsed()) {
      if (designs_dir.empty() && import_csv.empty()) {
        throw ConfigError("table needs --designs and/or --import");
      }
      return cmd_table(opt, designs_dir, import_csv);
    }
    if (trajectory_cmd->parsed()) {
      return cmd_trajectory(opt, design_path, state_spec, substeps);
    }
    if (gen_table_cmd->parsed()) return cmd_gen_surrogate_table(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const AllRestartsInfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& reason : e.best_candidate.verdict.reasons) {
      std::cerr << "  best candidate: " << reason << "\n";
    }
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
