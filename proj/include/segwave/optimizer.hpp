#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "segwave/cmt.hpp"
#include "segwave/coupling_map.hpp"
#include "segwave/design.hpp"
#include "segwave/errors.hpp"
#include "segwave/log.hpp"
#include "segwave/metrics.hpp"
#include "segwave/noise.hpp"
#include "segwave/rng.hpp"
#include "segwave/thread_pool.hpp"
#include "segwave/unitary.hpp"

namespace segwave {

// Target gate: a named gate or an axis-angle rotation.
struct GateSpec {
  std::string name;  // empty -> axis-angle
  std::array<double, 3> axis{0.0, 0.0, 1.0};
  double angle_rad = 0.0;

  Unitary2 unitary() const {
    return name.empty() ? axis_angle_gate(axis, angle_rad) : ideal_gate(name);
  }
  std::string label() const { return name.empty() ? "axis-angle" : name; }
};

enum class RegularizerMode { baseline, fresnel, adiabatic };

inline const char* to_string(RegularizerMode m) {
  switch (m) {
    case RegularizerMode::baseline: return "baseline";
    case RegularizerMode::fresnel: return "fresnel";
    case RegularizerMode::adiabatic: return "adiabatic";
  }
  return "baseline";
}

inline RegularizerMode regularizer_mode_from_string(const std::string& s) {
  if (s == "baseline") return RegularizerMode::baseline;
  if (s == "fresnel") return RegularizerMode::fresnel;
  if (s == "adiabatic") return RegularizerMode::adiabatic;
  throw std::invalid_argument("unknown regularizer mode '" + s + "'");
}

struct OptimizeConfig {
  GateSpec gate;
  int n_segments = 1;
  NoiseSpec noise;
  RegularizerMode regularizer_mode = RegularizerMode::baseline;
  double lambda_w = 1e-4;  // width-range hinge weight, per nm^2
  double lambda_r = 200.0; // Fresnel reflection weight
  double lambda_a = 40.0;  // adiabaticity weight, um
  int batch_size = 256;
  int epochs = 500;
  double initial_lr = 0.1;  // cosine-annealed to 0
  int restarts = 20;
  double w_min_nm = 500.0;
  double w_max_nm = 850.0;
  double l_init_min_um = 25.0;
  double l_init_max_um = 100.0;
  double resolution_nm = 20.0;
  double min_segment_length_um = 1.0;
  int n_eval_samples = 10000;
  int validation_factor = 10;  // validation batch = factor * batch_size
  std::uint64_t seed = 0;
  // Geometry stamped onto constructed designs.
  double gap_um = 1.0;
  double height_nm = 220.0;
  double etch_nm = 150.0;
  double wavelength_um = 1.55;

  void validate() const {
    if (n_segments < 1) throw std::invalid_argument("config: N must be >= 1");
    if (!(w_min_nm < w_max_nm)) {
      throw std::invalid_argument("config: need w_min < w_max");
    }
    if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
    if (restarts < 1) throw std::invalid_argument("config: restarts must be >= 1");
    if (!(initial_lr > 0.0)) throw std::invalid_argument("config: initial_lr must be > 0");
    if (!(l_init_min_um > 0.0) || !(l_init_max_um >= l_init_min_um)) {
      throw std::invalid_argument("config: invalid initial length range");
    }
    if (n_eval_samples < 2) {
      throw std::invalid_argument("config: n_eval_samples must be >= 2");
    }
    noise.validate();
  }
};

// lambda_w * sum over both waveguides of
//   max(W - W_max, 0)^2 + max(W_min - W, 0)^2   (quadratic hinge)
inline double range_penalty(const Design& design, double w_min_nm,
                            double w_max_nm, double lambda_w) {
  double sum = 0.0;
  for (const auto& s : design.segments) {
    for (double w : {s.width0_nm, s.width1_nm}) {
      const double over = std::max(w - w_max_nm, 0.0);
      const double under = std::max(w_min_nm - w, 0.0);
      sum += over * over + under * under;
    }
  }
  return lambda_w * sum;
}

struct CostBreakdown {
  double total = 0.0;
  double fidelity_loss = 0.0;   // 1 - E[F] over the batch
  double range_penalty = 0.0;   // lambda_w hinge
  double regularizer = 0.0;     // lambda_r R or lambda_a A, 0 for baseline
  double mean_fidelity = 0.0;
};

namespace detail {

// Clamped mean-index Fresnel reflection used as the differentiable
// regularizer proxy. Reporting uses metrics::design_power_loss, which
// defaults to the power-weighted policy.
inline double proxy_reflection(const Design& design, const CouplingMap& map) {
  const int n = design.size();
  if (n < 2) return 0.0;
  std::vector<double> mean_index(n);
  for (int i = 0; i < n; ++i) {
    const auto c = map.lookup(map.clamp_width(design.segments[i].width0_nm),
                              map.clamp_width(design.segments[i].width1_nm));
    mean_index[i] = 0.5 * (c.n_eff0 + c.n_eff1);
  }
  double pt = 1.0;
  for (int k = 0; k + 1 < n; ++k) {
    pt *= fresnel_transmission(mean_index[k], mean_index[k + 1]);
  }
  return 1.0 - pt;
}

// d(proxy_reflection)/d{w0_i, w1_i}; widths clamped outside the map domain
// contribute zero gradient.
inline void proxy_reflection_grad(const Design& design, const CouplingMap& map,
                                  std::span<double> grad_w0,
                                  std::span<double> grad_w1) {
  const int n = design.size();
  std::fill(grad_w0.begin(), grad_w0.end(), 0.0);
  std::fill(grad_w1.begin(), grad_w1.end(), 0.0);
  if (n < 2) return;

  std::vector<double> m(n), dm_dw0(n), dm_dw1(n);
  for (int i = 0; i < n; ++i) {
    const double w0 = design.segments[i].width0_nm;
    const double w1 = design.segments[i].width1_nm;
    const double w0c = map.clamp_width(w0);
    const double w1c = map.clamp_width(w1);
    const auto g = map.lookup_gradients(w0c, w1c);
    m[i] = 0.5 * (g.value.n_eff0 + g.value.n_eff1);
    dm_dw0[i] = (w0c == w0) ? 0.5 * g.dneff0_dw0 : 0.0;
    dm_dw1[i] = (w1c == w1) ? 0.5 * g.dneff1_dw1 : 0.0;
  }

  std::vector<double> t(n - 1);
  double pt = 1.0;
  for (int k = 0; k + 1 < n; ++k) {
    t[k] = fresnel_transmission(m[k], m[k + 1]);
    pt *= t[k];
  }
  // dR/dT_k = -P_t / T_k; dT_k/dq = -2q
  for (int k = 0; k + 1 < n; ++k) {
    const double s = m[k] + m[k + 1];
    const double q = (m[k] - m[k + 1]) / s;
    const double dq_dmk = 2.0 * m[k + 1] / (s * s);
    const double dq_dmk1 = -2.0 * m[k] / (s * s);
    const double dR_dq = (pt / t[k]) * 2.0 * q;  // -dP_t/dq, P_t = prod T
    grad_w0[k] += dR_dq * dq_dmk * dm_dw0[k];
    grad_w1[k] += dR_dq * dq_dmk * dm_dw1[k];
    grad_w0[k + 1] += dR_dq * dq_dmk1 * dm_dw0[k + 1];
    grad_w1[k + 1] += dR_dq * dq_dmk1 * dm_dw1[k + 1];
  }
}

// Adiabaticity metric with its subgradient (taken at the maximizing pair).
struct AdiabaticityGrad {
  double value = 0.0;
  int pair = -1;       // transition index i (between i and i+1)
  int waveguide = -1;  // 0 or 1
  double d_wa = 0.0, d_wb = 0.0;   // d/dW_i, d/dW_{i+1}
  double d_za = 0.0, d_zb = 0.0;   // d/dz_i, d/dz_{i+1}
};

inline AdiabaticityGrad adiabaticity_with_grad(const Design& design) {
  AdiabaticityGrad out{};
  const int n = design.size();
  if (n < 2) return out;
  for (int i = 0; i + 1 < n; ++i) {
    const double zbar =
        0.5 * (design.segments[i].length_um + design.segments[i + 1].length_um);
    for (int wg = 0; wg < 2; ++wg) {
      const double wa = (wg == 0) ? design.segments[i].width0_nm
                                  : design.segments[i].width1_nm;
      const double wb = (wg == 0) ? design.segments[i + 1].width0_nm
                                  : design.segments[i + 1].width1_nm;
      const double wbar = 0.5 * (wa + wb);
      const double v = std::abs(wb - wa) / (wbar * zbar);
      if (v > out.value) {
        out.value = v;
        out.pair = i;
        out.waveguide = wg;
        const double sign = (wb >= wa) ? 1.0 : -1.0;
        out.d_wb = sign / (wbar * zbar) - 0.5 * v / wbar;
        out.d_wa = -sign / (wbar * zbar) - 0.5 * v / wbar;
        out.d_za = -0.5 * v / zbar;
        out.d_zb = -0.5 * v / zbar;
      }
    }
  }
  return out;
}

}  // namespace detail

// Composite cost over a fixed batch of width-error samples (common random
// numbers): L = (1 - E[F]) + L_range + {lambda_r R | lambda_a A | 0}.
inline CostBreakdown total_cost(const Design& design, const OptimizeConfig& cfg,
                                const CouplingMap& map,
                                const SampleMatrix& batch) {
  CostBreakdown out;
  const auto stats =
      fidelity_over_samples(design, map, cfg.gate.unitary(), batch);
  out.mean_fidelity = stats.mean;
  out.fidelity_loss = 1.0 - stats.mean;
  out.range_penalty = range_penalty(design, cfg.w_min_nm, cfg.w_max_nm, cfg.lambda_w);
  switch (cfg.regularizer_mode) {
    case RegularizerMode::baseline:
      break;
    case RegularizerMode::fresnel:
      out.regularizer = cfg.lambda_r * detail::proxy_reflection(design, map);
      break;
    case RegularizerMode::adiabatic:
      out.regularizer = cfg.lambda_a * adiabaticity_metric(design);
      break;
  }
  out.total = out.fidelity_loss + out.range_penalty + out.regularizer;
  return out;
}

// Gradient of total_cost with respect to {w0_i, w1_i, z_i} (z in um),
// laid out as [w0_0..w0_{N-1}, w1_0..w1_{N-1}, z_0..z_{N-1}].
//
// Surrogate maps: analytic chain rule through the 2x2 segment product via
// prefix/suffix partial products. Table maps: central finite differences
// on the full cost (0.5 nm width step, 0.01 um length step).
inline std::vector<double> cost_gradient(const Design& design,
                                         const OptimizeConfig& cfg,
                                         const CouplingMap& map,
                                         const SampleMatrix& batch) {
  const int n = design.size();
  if (batch.n_segments != n) {
    throw std::invalid_argument("cost_gradient: batch does not match design");
  }
  std::vector<double> grad(3 * n, 0.0);

  if (!map.has_analytic_gradient()) {
    const double h_w = 0.5;    // nm
    const double h_z = 0.01;   // um
    Design probe = design;
    auto cost_at = [&](const Design& d) { return total_cost(d, cfg, map, batch).total; };
    for (int i = 0; i < n; ++i) {
      for (int p = 0; p < 3; ++p) {
        double* field = (p == 0)   ? &probe.segments[i].width0_nm
                        : (p == 1) ? &probe.segments[i].width1_nm
                                   : &probe.segments[i].length_um;
        const double h = (p == 2) ? h_z : h_w;
        const double saved = *field;
        *field = saved + h;
        const double up = cost_at(probe);
        *field = saved - h;
        const double dn = cost_at(probe);
        *field = saved;
        grad[p * n + i] = (up - dn) / (2.0 * h);
      }
    }
    return grad;
  }

  const Unitary2 gate = cfg.gate.unitary();
  const Unitary2 m_dag = gate.dagger();

  // Reused per-sample workspaces.
  std::vector<SegmentUnitaryDerivs> seg(n);
  std::vector<CoefficientGradients> cg(n);
  std::vector<bool> w0_clamped(n), w1_clamped(n);
  std::vector<Unitary2> prefix(n + 1), suffix(n + 1);

  auto tr_prod = [](const Unitary2& a, const Unitary2& b) {
    return a.u00 * b.u00 + a.u01 * b.u10 + a.u10 * b.u01 + a.u11 * b.u11;
  };

  const double inv_batch = 1.0 / static_cast<double>(batch.n_samples);
  for (int s = 0; s < batch.n_samples; ++s) {
    for (int i = 0; i < n; ++i) {
      const double d = batch.at(s, i);
      const double w0 = design.segments[i].width0_nm + d;
      const double w1 = design.segments[i].width1_nm + d;
      const double w0c = map.clamp_width(w0);
      const double w1c = map.clamp_width(w1);
      w0_clamped[i] = (w0c != w0);
      w1_clamped[i] = (w1c != w1);
      cg[i] = map.lookup_gradients(w0c, w1c);
      seg[i] = segment_unitary_with_derivs(cg[i].value.kappa_per_um,
                                           cg[i].value.delta_per_um,
                                           design.segments[i].length_um);
    }
    prefix[0] = Unitary2::identity();
    for (int i = 0; i < n; ++i) prefix[i + 1] = seg[i].u * prefix[i];
    suffix[n] = Unitary2::identity();
    for (int i = n - 1; i >= 0; --i) suffix[i] = suffix[i + 1] * seg[i].u;
    // suffix[i] = U_{n-1} ... U_i; the factor to the left of dU_i is
    // suffix[i+1], the factor to the right is prefix[i].

    const complexd t = tr_prod(m_dag, prefix[n]);
    const double abs_t = std::abs(t);
    if (abs_t < 1e-30) continue;  // |Tr| kink; subgradient 0
    const complexd phase = std::conj(t) / abs_t;

    for (int i = 0; i < n; ++i) {
      // K_i = P_{i-1} M^dagger S_{i+1}; dT/dx = Tr(K_i dU_i/dx)
      const Unitary2 k = prefix[i] * m_dag * suffix[i + 1];
      auto df = [&](const Unitary2& du) {
        return 0.5 * (phase * tr_prod(k, du)).real();
      };
      const double df_dkappa = df(seg[i].du_dkappa);
      const double df_ddelta = df(seg[i].du_ddelta);
      const double df_dz = df(seg[i].du_dz);
      // L_F = 1 - mean F  ->  d/dx = -mean dF/dx
      if (!w0_clamped[i]) {
        grad[i] -= inv_batch * (df_dkappa * cg[i].dkappa_dw0 +
                                df_ddelta * cg[i].ddelta_dw0);
      }
      if (!w1_clamped[i]) {
        grad[n + i] -= inv_batch * (df_dkappa * cg[i].dkappa_dw1 +
                                    df_ddelta * cg[i].ddelta_dw1);
      }
      grad[2 * n + i] -= inv_batch * df_dz;
    }
  }

  // Width-range hinge.
  for (int i = 0; i < n; ++i) {
    for (int wg = 0; wg < 2; ++wg) {
      const double w = (wg == 0) ? design.segments[i].width0_nm
                                 : design.segments[i].width1_nm;
      const double over = std::max(w - cfg.w_max_nm, 0.0);
      const double under = std::max(cfg.w_min_nm - w, 0.0);
      grad[wg * n + i] += cfg.lambda_w * (2.0 * over - 2.0 * under);
    }
  }

  switch (cfg.regularizer_mode) {
    case RegularizerMode::baseline:
      break;
    case RegularizerMode::fresnel: {
      std::vector<double> gw0(n), gw1(n);
      detail::proxy_reflection_grad(design, map, gw0, gw1);
      for (int i = 0; i < n; ++i) {
        grad[i] += cfg.lambda_r * gw0[i];
        grad[n + i] += cfg.lambda_r * gw1[i];
      }
      break;
    }
    case RegularizerMode::adiabatic: {
      const auto a = detail::adiabaticity_with_grad(design);
      if (a.pair >= 0) {
        const int col = a.waveguide * n;
        grad[col + a.pair] += cfg.lambda_a * a.d_wa;
        grad[col + a.pair + 1] += cfg.lambda_a * a.d_wb;
        grad[2 * n + a.pair] += cfg.lambda_a * a.d_za;
        grad[2 * n + a.pair + 1] += cfg.lambda_a * a.d_zb;
      }
      break;
    }
  }
  return grad;
}

struct FeasibilityVerdict {
  bool feasible = true;
  std::vector<std::string> reasons;
};

// Rejects segment lengths below the minimum, widths outside the allowed
// range, and segment counts outside [1, 200].
inline FeasibilityVerdict feasibility_filter(const Design& design,
                                             const OptimizeConfig& cfg) {
  FeasibilityVerdict v;
  const int n = design.size();
  if (n < 1 || n > 200) {
    v.reasons.push_back("segment count " + std::to_string(n) +
                        " outside [1, 200]");
  }
  for (int i = 0; i < n; ++i) {
    if (design.segments[i].length_um < cfg.min_segment_length_um) {
      v.reasons.push_back("segment " + std::to_string(i) + " length " +
                          std::to_string(design.segments[i].length_um) +
                          " um below minimum " +
                          std::to_string(cfg.min_segment_length_um) + " um");
    }
    for (double w : {design.segments[i].width0_nm, design.segments[i].width1_nm}) {
      if (w < cfg.w_min_nm || w > cfg.w_max_nm) {
        v.reasons.push_back("segment " + std::to_string(i) + " width " +
                            std::to_string(w) + " nm outside [" +
                            std::to_string(cfg.w_min_nm) + ", " +
                            std::to_string(cfg.w_max_nm) + "] nm");
      }
    }
  }
  v.feasible = v.reasons.empty();
  return v;
}

// Widths rounded to the nearest multiple of the manufacturing resolution
// (ties round up); lengths untouched. Callers re-evaluate the result.
inline Design quantize(const Design& design, double resolution_nm) {
  if (!(resolution_nm > 0.0)) {
    throw std::invalid_argument("quantize: resolution must be > 0");
  }
  Design q = design;
  for (auto& s : q.segments) {
    s.width0_nm = std::floor(s.width0_nm / resolution_nm + 0.5) * resolution_nm;
    s.width1_nm = std::floor(s.width1_nm / resolution_nm + 0.5) * resolution_nm;
  }
  return q;
}

struct CostTracePoint {
  int epoch = 0;
  double lr = 0.0;
  double total = 0.0;
  double fidelity_loss = 0.0;
  double range_penalty = 0.0;
  double regularizer = 0.0;
};

struct OptimizedDesign {
  Design design;
  EvaluationReport report;
  FeasibilityVerdict verdict;
  std::vector<CostTracePoint> trace;
  double validation_cost_initial = 0.0;
  double validation_cost_final = 0.0;
  int restart_index = 0;
};

// Thrown when every restart fails the feasibility filter; carries the best
// infeasible candidate for diagnosis.
class AllRestartsInfeasibleError : public NumericError {
 public:
  explicit AllRestartsInfeasibleError(OptimizedDesign best)
      : NumericError("optimize: all restarts produced infeasible designs"),
        best_candidate(std::move(best)) {}
  OptimizedDesign best_candidate;
};

namespace detail {

struct RestartResult {
  Design design;
  FeasibilityVerdict verdict;
  std::vector<CostTracePoint> trace;
  double val_initial = 0.0;
  double val_final = 0.0;
};

inline Design design_from_params(const OptimizeConfig& cfg,
                                 std::span<const double> theta) {
  const int n = cfg.n_segments;
  Design d;
  d.gap_um = cfg.gap_um;
  d.height_nm = cfg.height_nm;
  d.etch_nm = cfg.etch_nm;
  d.wavelength_um = cfg.wavelength_um;
  d.segments.resize(n);
  for (int i = 0; i < n; ++i) {
    d.segments[i].width0_nm = theta[i];
    d.segments[i].width1_nm = theta[n + i];
    d.segments[i].length_um = std::exp(theta[2 * n + i]);
  }
  return d;
}

inline RestartResult run_restart(const OptimizeConfig& cfg,
                                 const CouplingMap& map,
                                 const WidthErrorSampler& sampler,
                                 const SampleMatrix& validation_batch,
                                 int restart) {
  const int n = cfg.n_segments;
  const int dim = 3 * n;

  // Widths uniform over the allowed range; total length uniform over the
  // initial range, split evenly. Lengths are optimized in log-space so
  // they stay positive without projection.
  Rng rng(derive_seed(cfg.seed, "init", static_cast<std::uint64_t>(restart)));
  std::vector<double> theta(dim);
  for (int i = 0; i < n; ++i) {
    theta[i] = rng.uniform(cfg.w_min_nm, cfg.w_max_nm);
    theta[n + i] = rng.uniform(cfg.w_min_nm, cfg.w_max_nm);
  }
  const double total_len = rng.uniform(cfg.l_init_min_um, cfg.l_init_max_um);
  for (int i = 0; i < n; ++i) {
    theta[2 * n + i] = std::log(total_len / static_cast<double>(n));
  }

  RestartResult out;
  out.val_initial =
      total_cost(design_from_params(cfg, theta), cfg, map, validation_batch).total;

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<double> m(dim, 0.0), v(dim, 0.0);
  out.trace.reserve(cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr =
        cfg.initial_lr * 0.5 *
        (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) /
                        static_cast<double>(cfg.epochs)));
    const std::uint64_t batch_seed = derive_seed(
        cfg.seed, "batch",
        (static_cast<std::uint64_t>(restart) << 32) |
            static_cast<std::uint64_t>(epoch));
    const SampleMatrix batch = sampler.sample(batch_seed, cfg.batch_size);

    const Design d = design_from_params(cfg, theta);
    const CostBreakdown cost = total_cost(d, cfg, map, batch);
    std::vector<double> grad = cost_gradient(d, cfg, map, batch);
    // Chain rule into log-length coordinates.
    for (int i = 0; i < n; ++i) {
      grad[2 * n + i] *= d.segments[i].length_um;
    }

    const double t = static_cast<double>(epoch + 1);
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (int j = 0; j < dim; ++j) {
      m[j] = beta1 * m[j] + (1.0 - beta1) * grad[j];
      v[j] = beta2 * v[j] + (1.0 - beta2) * grad[j] * grad[j];
      theta[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps);
    }
    out.trace.push_back({epoch, lr, cost.total, cost.fidelity_loss,
                         cost.range_penalty, cost.regularizer});
  }

  // Project widths onto the allowed box. The map lookup already clamps, so
  // a width resting marginally outside the range is physically identical
  // to the boundary design; projection removes the soft-hinge residue.
  for (int j = 0; j < 2 * n; ++j) {
    theta[j] = std::clamp(theta[j], cfg.w_min_nm, cfg.w_max_nm);
  }

  out.design = design_from_params(cfg, theta);
  out.val_final = total_cost(out.design, cfg, map, validation_batch).total;
  out.verdict = feasibility_filter(out.design, cfg);
  return out;
}

}  // namespace detail

// Runs `restarts` independent Adam optimizations (cosine-annealed step
// size, fresh noise batch per epoch) and returns the feasible restart with
// the lowest cost on a shared validation batch 10x the training batch.
// Deterministic for a given config and seed, regardless of `jobs`.
inline OptimizedDesign optimize(const OptimizeConfig& cfg,
                                const CouplingMap& map, int jobs = 1) {
  cfg.validate();
  const WidthErrorSampler sampler(cfg.noise, cfg.n_segments);
  const SampleMatrix validation_batch =
      sampler.sample(derive_seed(cfg.seed, "validation"),
                     cfg.validation_factor * cfg.batch_size);

  std::vector<detail::RestartResult> results(cfg.restarts);
  parallel_for(jobs, cfg.restarts, [&](int r) {
    results[r] = detail::run_restart(cfg, map, sampler, validation_batch, r);
  });

  int best = -1, best_any = 0;
  for (int r = 0; r < cfg.restarts; ++r) {
    if (results[r].val_final < results[best_any].val_final) best_any = r;
    if (!results[r].verdict.feasible) continue;
    if (best < 0 || results[r].val_final < results[best].val_final) best = r;
  }

  auto finish = [&](int r) {
    OptimizedDesign out;
    out.design = std::move(results[r].design);
    out.verdict = std::move(results[r].verdict);
    out.trace = std::move(results[r].trace);
    out.validation_cost_initial = results[r].val_initial;
    out.validation_cost_final = results[r].val_final;
    out.restart_index = r;
    NoiseSpec eval_noise = cfg.noise;
    eval_noise.seed = derive_seed(cfg.seed, "final-eval");
    out.report = evaluate_design(out.design, map, eval_noise,
                                 cfg.gate.unitary(), cfg.n_eval_samples);
    return out;
  };

  if (best < 0) {
    log::error("optimize: no feasible restart out of " +
               std::to_string(cfg.restarts));
    throw AllRestartsInfeasibleError(finish(best_any));
  }
  return finish(best);
}

}  // namespace segwave
