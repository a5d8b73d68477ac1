#pragma once

#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "segwave/cmt.hpp"
#include "segwave/coupling_map.hpp"
#include "segwave/design.hpp"
#include "segwave/errors.hpp"
#include "segwave/metrics.hpp"
#include "segwave/noise.hpp"
#include "segwave/optimizer.hpp"

namespace segwave {

using json = nlohmann::json;

// -------- small json helpers with field-name diagnostics --------

namespace detail {

template <typename T>
T require_field(const json& j, const std::string& field) {
  if (!j.contains(field)) {
    throw ConfigError("missing required field '" + field + "'");
  }
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + field + "' has the wrong type");
  }
}

template <typename T>
T field_or(const json& j, const std::string& field, T fallback) {
  if (!j.contains(field)) return fallback;
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + field + "' has the wrong type");
  }
}

inline std::string format_double(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace detail

// Compact general format used in data CSVs; fixed precision keeps reruns
// byte-identical.
inline std::string csv_num(double v) { return detail::format_double(v, "%.9g"); }

// -------- Design <-> JSON --------

inline json design_to_json(const Design& d) {
  json segments = json::array();
  for (const auto& s : d.segments) {
    segments.push_back(
        {{"w0_nm", s.width0_nm}, {"w1_nm", s.width1_nm}, {"dz_um", s.length_um}});
  }
  return json{{"gap_um", d.gap_um},
              {"height_nm", d.height_nm},
              {"etch_nm", d.etch_nm},
              {"wavelength_um", d.wavelength_um},
              {"segments", segments}};
}

inline Design design_from_json(const json& j) {
  Design d;
  d.gap_um = detail::require_field<double>(j, "gap_um");
  d.height_nm = detail::require_field<double>(j, "height_nm");
  d.etch_nm = detail::require_field<double>(j, "etch_nm");
  d.wavelength_um = detail::require_field<double>(j, "wavelength_um");
  const json segs = detail::require_field<json>(j, "segments");
  if (!segs.is_array() || segs.empty()) {
    throw ConfigError("field 'segments' must be a non-empty array");
  }
  for (const auto& s : segs) {
    d.segments.push_back({detail::require_field<double>(s, "w0_nm"),
                          detail::require_field<double>(s, "w1_nm"),
                          detail::require_field<double>(s, "dz_um")});
  }
  d.validate();
  return d;
}

inline Design load_design(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open design file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed design file '" + path + "': " + e.what());
  }
  return design_from_json(j);
}

// -------- EvaluationReport <-> JSON --------

inline json report_to_json(const EvaluationReport& r) {
  return json{{"mean_F", r.fidelity.mean},
              {"std_F", r.fidelity.std_dev},
              {"stderr_F", r.fidelity.std_error},
              {"n_samples", r.fidelity.n_samples},
              {"clamp_rate", r.fidelity.clamp_rate},
              {"power_loss", r.power.total_loss},
              {"per_transition_T", r.power.transmissions},
              {"calibration_factor", r.power.calibration_factor},
              {"adiabaticity_A", r.adiabaticity_per_um},
              {"sigma_percent", r.sigma_percent}};
}

inline EvaluationReport report_from_json(const json& j) {
  EvaluationReport r;
  r.fidelity.mean = detail::require_field<double>(j, "mean_F");
  r.fidelity.std_dev = detail::require_field<double>(j, "std_F");
  r.fidelity.std_error = detail::require_field<double>(j, "stderr_F");
  r.fidelity.n_samples = detail::require_field<long>(j, "n_samples");
  r.fidelity.clamp_rate = detail::field_or<double>(j, "clamp_rate", 0.0);
  r.power.total_loss = detail::require_field<double>(j, "power_loss");
  r.power.transmissions =
      detail::field_or<std::vector<double>>(j, "per_transition_T", {});
  r.power.calibration_factor =
      detail::field_or<double>(j, "calibration_factor", 1.0);
  r.power.total_transmission = 1.0 - r.power.total_loss;
  r.adiabaticity_per_um = detail::require_field<double>(j, "adiabaticity_A");
  r.sigma_percent = detail::require_field<double>(j, "sigma_percent");
  return r;
}

// -------- OptimizedDesign result <-> JSON --------

// A result file bundles the design with its evaluation and the labels the
// table command needs (gate, material, optimization method).
struct ResultLabels {
  std::string gate;
  std::string material;
  std::string method;
};

inline json optimized_to_json(const OptimizedDesign& od,
                              const ResultLabels& labels) {
  return json{{"gate", labels.gate},
              {"material", labels.material},
              {"method", labels.method},
              {"design", design_to_json(od.design)},
              {"report", report_to_json(od.report)},
              {"feasible", od.verdict.feasible},
              {"feasibility_reasons", od.verdict.reasons},
              {"validation_cost_initial", od.validation_cost_initial},
              {"validation_cost_final", od.validation_cost_final},
              {"restart_index", od.restart_index}};
}

// -------- map construction from config --------

inline SurrogateParams surrogate_params_from_json(const json& j) {
  SurrogateParams p;
  p.n_core = detail::field_or<double>(j, "n_core", p.n_core);
  p.n_clad = detail::field_or<double>(j, "n_clad", p.n_clad);
  p.w_cut_nm = detail::field_or<double>(j, "w_cut_nm", p.w_cut_nm);
  p.w_sat_nm = detail::field_or<double>(j, "w_sat_nm", p.w_sat_nm);
  p.kappa0_per_um = detail::field_or<double>(j, "kappa0_per_um", p.kappa0_per_um);
  p.gamma_per_um = detail::field_or<double>(j, "gamma_per_um", p.gamma_per_um);
  p.gap_um = detail::field_or<double>(j, "gap_um", p.gap_um);
  p.wavelength_um = detail::field_or<double>(j, "wavelength_um", p.wavelength_um);
  p.w_min_nm = detail::field_or<double>(j, "w_min_nm", p.w_min_nm);
  p.w_max_nm = detail::field_or<double>(j, "w_max_nm", p.w_max_nm);
  return p;
}

struct MapConfig {
  std::unique_ptr<CouplingMap> map;
  std::string material_label;  // "Li", "Si" or "custom"
};

// "map": {"material": "linbo3"|"si"} or {"surrogate": {...}} or
// {"table": "path.csv"}.
inline MapConfig map_from_json(const json& config) {
  MapConfig out;
  if (!config.contains("map")) {
    out.map = std::make_unique<SurrogateMap>(default_linbo3_params());
    out.material_label = "Li";
    return out;
  }
  const json& m = config.at("map");
  if (m.contains("material")) {
    const auto mat = m.at("material").get<std::string>();
    if (mat == "linbo3" || mat == "LiNbO3" || mat == "li") {
      out.map = std::make_unique<SurrogateMap>(default_linbo3_params());
      out.material_label = "Li";
    } else if (mat == "si" || mat == "silicon") {
      out.map = std::make_unique<SurrogateMap>(default_silicon_params());
      out.material_label = "Si";
    } else {
      throw ConfigError("unknown material '" + mat + "' (use linbo3 or si)");
    }
    return out;
  }
  if (m.contains("surrogate")) {
    out.map = std::make_unique<SurrogateMap>(
        surrogate_params_from_json(m.at("surrogate")));
    out.material_label = detail::field_or<std::string>(m, "label", "custom");
    return out;
  }
  if (m.contains("table")) {
    out.map = std::make_unique<TableMap>(
        load_table(m.at("table").get<std::string>()));
    out.material_label = detail::field_or<std::string>(m, "label", "table");
    return out;
  }
  throw ConfigError("field 'map' needs one of: material, surrogate, table");
}

// -------- gate / noise / optimize config --------

inline GateSpec gate_from_json(const json& config) {
  GateSpec g;
  const json gate = detail::require_field<json>(config, "gate");
  if (gate.is_string()) {
    g.name = gate.get<std::string>();
    ideal_gate(g.name);  // validate the name now
    return g;
  }
  if (gate.contains("name")) {
    g.name = gate.at("name").get<std::string>();
    ideal_gate(g.name);
    return g;
  }
  if (gate.contains("axis")) {
    const auto axis = gate.at("axis").get<std::vector<double>>();
    if (axis.size() != 3) throw ConfigError("field 'gate.axis' needs 3 entries");
    g.axis = {axis[0], axis[1], axis[2]};
    g.angle_rad = detail::require_field<double>(gate, "angle_rad");
    return g;
  }
  throw ConfigError("field 'gate' needs a name or an axis/angle_rad pair");
}

inline NoiseSpec noise_from_json(const json& config) {
  const json n = detail::require_field<json>(config, "noise");
  NoiseSpec spec;
  spec.sigma_nm = detail::require_field<double>(n, "sigma_nm");
  const auto mode =
      detail::field_or<std::string>(n, "mode", "fully_correlated");
  if (mode == "fully_correlated") {
    spec.mode = NoiseMode::fully_correlated;
  } else if (mode == "correlation") {
    spec.mode = NoiseMode::correlation;
    spec.mu = detail::require_field<double>(n, "mu");
  } else {
    throw ConfigError("field 'noise.mode' must be fully_correlated or correlation");
  }
  spec.validate();
  return spec;
}

inline OptimizeConfig optimize_config_from_json(const json& config) {
  OptimizeConfig cfg;
  cfg.gate = gate_from_json(config);
  cfg.n_segments = detail::require_field<int>(config, "n_segments");
  cfg.noise = noise_from_json(config);
  cfg.seed = detail::field_or<std::uint64_t>(config, "seed", 0);

  const json opt = detail::field_or<json>(config, "optimize", json::object());
  cfg.regularizer_mode = regularizer_mode_from_string(
      detail::field_or<std::string>(opt, "regularizer_mode", "baseline"));
  cfg.lambda_w = detail::field_or<double>(opt, "lambda_w", cfg.lambda_w);
  cfg.lambda_r = detail::field_or<double>(opt, "lambda_r", cfg.lambda_r);
  cfg.lambda_a = detail::field_or<double>(opt, "lambda_a", cfg.lambda_a);
  cfg.batch_size = detail::field_or<int>(opt, "batch_size", cfg.batch_size);
  cfg.epochs = detail::field_or<int>(opt, "epochs", cfg.epochs);
  cfg.initial_lr = detail::field_or<double>(opt, "initial_lr", cfg.initial_lr);
  cfg.restarts = detail::field_or<int>(opt, "restarts", cfg.restarts);
  cfg.w_min_nm = detail::field_or<double>(opt, "w_min_nm", cfg.w_min_nm);
  cfg.w_max_nm = detail::field_or<double>(opt, "w_max_nm", cfg.w_max_nm);
  if (opt.contains("l_init_um")) {
    const auto range = opt.at("l_init_um").get<std::vector<double>>();
    if (range.size() != 2) throw ConfigError("field 'optimize.l_init_um' needs [min, max]");
    cfg.l_init_min_um = range[0];
    cfg.l_init_max_um = range[1];
  }
  cfg.resolution_nm = detail::field_or<double>(opt, "resolution_nm", cfg.resolution_nm);
  cfg.min_segment_length_um =
      detail::field_or<double>(opt, "min_segment_length_um", cfg.min_segment_length_um);
  cfg.validation_factor =
      detail::field_or<int>(opt, "validation_factor", cfg.validation_factor);

  const json ev = detail::field_or<json>(config, "evaluate", json::object());
  cfg.n_eval_samples = detail::field_or<int>(ev, "n_samples", cfg.n_eval_samples);

  const json geo = detail::field_or<json>(config, "geometry", json::object());
  cfg.gap_um = detail::field_or<double>(geo, "gap_um", cfg.gap_um);
  cfg.height_nm = detail::field_or<double>(geo, "height_nm", cfg.height_nm);
  cfg.etch_nm = detail::field_or<double>(geo, "etch_nm", cfg.etch_nm);
  cfg.wavelength_um = detail::field_or<double>(geo, "wavelength_um", cfg.wavelength_um);

  cfg.validate();
  return cfg;
}

// -------- CSV exports --------

inline std::string trajectory_csv(const BlochTrajectory& traj) {
  std::ostringstream out;
  out << "z_um,bx,by,bz\n";
  for (const auto& p : traj) {
    out << csv_num(p.z_um) << ',' << csv_num(p.bx) << ',' << csv_num(p.by)
        << ',' << csv_num(p.bz) << '\n';
  }
  return out.str();
}

inline std::string cost_trace_csv(const std::vector<CostTracePoint>& trace) {
  std::ostringstream out;
  out << "epoch,lr,total,fidelity_loss,range_penalty,regularizer\n";
  for (const auto& p : trace) {
    out << p.epoch << ',' << csv_num(p.lr) << ',' << csv_num(p.total) << ','
        << csv_num(p.fidelity_loss) << ',' << csv_num(p.range_penalty) << ','
        << csv_num(p.regularizer) << '\n';
  }
  return out.str();
}

inline std::string coupling_table_csv(const CouplingTable& t) {
  std::ostringstream out;
  out << "w0_nm,w1_nm,kappa_per_um,delta_per_um,neff0,neff1\n";
  for (std::size_t i0 = 0; i0 < t.w0_grid_nm.size(); ++i0) {
    for (std::size_t i1 = 0; i1 < t.w1_grid_nm.size(); ++i1) {
      const auto& c = t.at(i0, i1);
      out << csv_num(t.w0_grid_nm[i0]) << ',' << csv_num(t.w1_grid_nm[i1])
          << ',' << detail::format_double(c.kappa_per_um, "%.17g") << ','
          << detail::format_double(c.delta_per_um, "%.17g") << ','
          << detail::format_double(c.n_eff0, "%.17g") << ','
          << detail::format_double(c.n_eff1, "%.17g") << '\n';
    }
  }
  return out.str();
}

}  // namespace segwave
