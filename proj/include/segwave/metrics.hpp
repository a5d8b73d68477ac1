#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "segwave/cmt.hpp"
#include "segwave/coupling_map.hpp"
#include "segwave/design.hpp"
#include "segwave/log.hpp"
#include "segwave/noise.hpp"
#include "segwave/unitary.hpp"

namespace segwave {

// F = (1/2) |Tr(U_ideal^dagger U)|, invariant under a global phase of
// either argument. Both inputs must be unitary to 1e-9.
inline double gate_fidelity(const Unitary2& u_ideal, const Unitary2& u) {
  if (u_ideal.unitarity_error() > 1e-9 || u.unitarity_error() > 1e-9) {
    throw std::invalid_argument("gate_fidelity: input is not unitary");
  }
  const double f = 0.5 * std::abs((u_ideal.dagger() * u).trace());
  return std::clamp(f, 0.0, 1.0);
}

// Coefficients of each segment after applying per-segment width errors.
// Noisy widths are clamped to the map domain; *clamp_count (if given) is
// incremented once per clamped width value.
inline std::vector<SegmentCoefficients> realized_coefficients(
    const Design& design, const CouplingMap& map, std::span<const double> errors,
    long* clamp_count = nullptr) {
  if (!errors.empty() && static_cast<int>(errors.size()) != design.size()) {
    throw std::invalid_argument(
        "realized_coefficients: error count does not match segment count");
  }
  std::vector<SegmentCoefficients> coeffs;
  coeffs.reserve(design.segments.size());
  for (int i = 0; i < design.size(); ++i) {
    const double d = errors.empty() ? 0.0 : errors[i];
    // The width error hits both waveguides of the segment identically.
    double w0 = design.segments[i].width0_nm + d;
    double w1 = design.segments[i].width1_nm + d;
    const double w0c = map.clamp_width(w0);
    const double w1c = map.clamp_width(w1);
    if (clamp_count != nullptr) {
      if (w0c != w0) ++*clamp_count;
      if (w1c != w1) ++*clamp_count;
    }
    coeffs.push_back(map.lookup(w0c, w1c));
  }
  return coeffs;
}

inline std::vector<SegmentCoefficients> nominal_coefficients(
    const Design& design, const CouplingMap& map) {
  return realized_coefficients(design, map, {});
}

struct FidelityStats {
  double mean = 0.0;
  double std_dev = 0.0;   // population form sqrt(E[F^2] - E[F]^2)
  double std_error = 0.0; // std_dev / sqrt(n)
  long n_samples = 0;
  double clamp_rate = 0.0;  // clamped width values / total width values
};

// Mean/std of the gate fidelity over an explicit matrix of width-error
// samples. Shared by the Monte-Carlo estimator and by oracle tests that
// supply their own sample sets.
inline FidelityStats fidelity_over_samples(const Design& design,
                                           const CouplingMap& map,
                                           const Unitary2& gate,
                                           const SampleMatrix& samples) {
  design.validate();
  if (samples.n_segments != design.size()) {
    throw std::invalid_argument(
        "fidelity_over_samples: sample width does not match segment count");
  }
  if (samples.n_samples < 1) {
    throw std::invalid_argument("fidelity_over_samples: empty sample matrix");
  }
  // Welford accumulation: sigma[F] is the population form
  // sqrt(E[F^2] - E[F]^2) and must be exactly zero for constant samples.
  double mean = 0.0, m2 = 0.0;
  long clamped = 0;
  for (int s = 0; s < samples.n_samples; ++s) {
    const auto coeffs =
        realized_coefficients(design, map, samples.row(s), &clamped);
    const double f = gate_fidelity(gate, composite_unitary(design, coeffs));
    const double delta = f - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (f - mean);
  }
  const double n = static_cast<double>(samples.n_samples);
  FidelityStats st;
  st.mean = mean;
  st.std_dev = std::sqrt(std::max(0.0, m2 / n));
  st.std_error = st.std_dev / std::sqrt(n);
  st.n_samples = samples.n_samples;
  st.clamp_rate = static_cast<double>(clamped) / (2.0 * n * design.size());
  return st;
}

// Monte-Carlo estimate of E[F] and sigma[F] under the noise model;
// deterministic per spec.seed.
inline FidelityStats fidelity_statistics(const Design& design,
                                         const CouplingMap& map,
                                         const NoiseSpec& noise,
                                         const Unitary2& gate, int n_samples) {
  if (n_samples < 2) {
    throw std::invalid_argument("fidelity_statistics: n_samples must be >= 2");
  }
  const auto samples = sample_width_errors(noise, design.size(), n_samples);
  return fidelity_over_samples(design, map, gate, samples);
}

// T = 1 - ((n1 - n2)/(n1 + n2))^2
inline double fresnel_transmission(double n1, double n2) {
  if (!(n1 > 0.0) || !(n2 > 0.0)) {
    throw std::invalid_argument("fresnel_transmission: indices must be > 0");
  }
  const double r = (n1 - n2) / (n1 + n2);
  return 1.0 - r * r;
}

enum class FresnelPolicy {
  // Per-waveguide transmissions weighted by the nominal power fraction
  // carried by each waveguide entering the transition (|0> launched).
  power_weighted,
  // Single transmission from the mean of the two waveguides' n_eff.
  mean_index,
};

struct PowerLossOptions {
  FresnelPolicy policy = FresnelPolicy::power_weighted;
  // Multiplies each per-transition reflection before the product; 1.0 is
  // the raw Fresnel estimate. Reported, never folded into optimization.
  double calibration_factor = 1.0;
};

struct PowerLossReport {
  std::vector<double> transmissions;  // T_k, one per transition
  double total_transmission = 1.0;    // P_t = prod T_k
  double total_loss = 0.0;            // 1 - P_t
  double calibration_factor = 1.0;
};

// Back-scattering power loss of the design from per-transition Fresnel
// coefficients at nominal widths. A single segment has no transition and
// reports zero loss.
inline PowerLossReport design_power_loss(const Design& design,
                                         const CouplingMap& map,
                                         const PowerLossOptions& options = {}) {
  design.validate();
  const auto coeffs = nominal_coefficients(design, map);
  PowerLossReport report;
  report.calibration_factor = options.calibration_factor;
  const int n = design.size();
  if (n == 1) return report;

  // Power fraction in waveguide 0 at the end of each segment.
  std::vector<double> p0;
  if (options.policy == FresnelPolicy::power_weighted) {
    p0.reserve(n);
    std::array<complexd, 2> psi{complexd{1.0, 0.0}, complexd{0.0, 0.0}};
    for (int i = 0; i < n; ++i) {
      psi = segment_unitary(coeffs[i], design.segments[i].length_um).apply(psi);
      p0.push_back(std::norm(psi[0]));
    }
  }

  report.transmissions.reserve(n - 1);
  double product = 1.0;
  for (int k = 0; k + 1 < n; ++k) {
    double t;
    if (options.policy == FresnelPolicy::power_weighted) {
      const double t0 = fresnel_transmission(coeffs[k].n_eff0, coeffs[k + 1].n_eff0);
      const double t1 = fresnel_transmission(coeffs[k].n_eff1, coeffs[k + 1].n_eff1);
      t = p0[k] * t0 + (1.0 - p0[k]) * t1;
    } else {
      const double na = 0.5 * (coeffs[k].n_eff0 + coeffs[k].n_eff1);
      const double nb = 0.5 * (coeffs[k + 1].n_eff0 + coeffs[k + 1].n_eff1);
      t = fresnel_transmission(na, nb);
    }
    if (options.calibration_factor != 1.0) {
      t = 1.0 - options.calibration_factor * (1.0 - t);
      t = std::clamp(t, 1e-12, 1.0);
    }
    report.transmissions.push_back(t);
    product *= t;
  }
  report.total_transmission = product;
  report.total_loss = 1.0 - product;
  return report;
}

// Large-N loss estimate for a uniform average per-transition reflection:
// 1 - (1 - r_avg)^(N-1). Asymptotically linear, ~ (N-1) r_avg.
inline double asymptotic_power_loss(double r_avg, int n) {
  if (r_avg < 0.0 || r_avg >= 1.0) {
    throw std::invalid_argument("asymptotic_power_loss: r_avg must be in [0, 1)");
  }
  if (n < 1) throw std::invalid_argument("asymptotic_power_loss: N must be >= 1");
  return 1.0 - std::pow(1.0 - r_avg, n - 1);
}

struct ScalingPoint {
  int n = 0;
  double mean_f = 0.0;
  double std_f = 0.0;
};

struct ScalingFit {
  double a = 0.0;            // E[F] ~ 1 - a/N
  std::optional<double> b;   // sigma[F] ~ N^-b; absent when degenerate
  std::vector<double> a_residuals;
  std::vector<double> b_residuals;
};

// Fits the large-N scaling laws: a by least squares of (1 - mean_F) on 1/N
// through the origin, b by log-log regression of std_F on N.
inline ScalingFit fit_scaling_laws(std::span<const ScalingPoint> points) {
  if (points.size() < 3) {
    throw std::invalid_argument("fit_scaling_laws: need at least 3 points");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].n < 1) {
      throw std::invalid_argument("fit_scaling_laws: N must be >= 1");
    }
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      if (points[i].n == points[j].n) {
        throw std::invalid_argument("fit_scaling_laws: N values must be distinct");
      }
    }
  }

  ScalingFit fit;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& p : points) {
    const double x = 1.0 / static_cast<double>(p.n);
    const double y = 1.0 - p.mean_f;
    sxy += x * y;
    sxx += x * x;
  }
  fit.a = sxy / sxx;
  fit.a_residuals.reserve(points.size());
  for (const auto& p : points) {
    fit.a_residuals.push_back((1.0 - p.mean_f) - fit.a / p.n);
  }

  // b from ln(std) = c - b ln(N); points with std_f <= 0 carry no
  // information on the exponent and are skipped.
  std::vector<std::pair<double, double>> logs;
  for (const auto& p : points) {
    if (p.std_f > 0.0) {
      logs.emplace_back(std::log(static_cast<double>(p.n)), std::log(p.std_f));
    }
  }
  if (logs.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : logs) {
      mx += x;
      my += y;
    }
    mx /= logs.size();
    my /= logs.size();
    double num = 0.0, den = 0.0;
    for (const auto& [x, y] : logs) {
      num += (x - mx) * (y - my);
      den += (x - mx) * (x - mx);
    }
    if (den > 0.0) {
      const double slope = num / den;
      fit.b = -slope;
      const double intercept = my - slope * mx;
      for (const auto& [x, y] : logs) {
        fit.b_residuals.push_back(y - (intercept + slope * x));
      }
    }
  }
  return fit;
}

// Maximal normalized width change rate between adjacent segments, taken
// over both waveguides: |W_{i+1} - W_i| / (mean width * mean length).
// Widths in nm, lengths in um, result in 1/um. Zero for N = 1.
inline double adiabaticity_metric(const Design& design) {
  design.validate();
  const int n = design.size();
  if (n < 2) return 0.0;
  double worst = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    const double zbar =
        0.5 * (design.segments[i].length_um + design.segments[i + 1].length_um);
    for (int wg = 0; wg < 2; ++wg) {
      const double wa = (wg == 0) ? design.segments[i].width0_nm
                                  : design.segments[i].width1_nm;
      const double wb = (wg == 0) ? design.segments[i + 1].width0_nm
                                  : design.segments[i + 1].width1_nm;
      const double wbar = 0.5 * (wa + wb);
      worst = std::max(worst, std::abs(wb - wa) / (wbar * zbar));
    }
  }
  return worst;
}

struct EvaluationReport {
  FidelityStats fidelity;
  PowerLossReport power;
  double adiabaticity_per_um = 0.0;
  double sigma_percent = 0.0;
};

inline EvaluationReport evaluate_design(const Design& design,
                                        const CouplingMap& map,
                                        const NoiseSpec& noise,
                                        const Unitary2& gate, int n_samples,
                                        const PowerLossOptions& loss_options = {}) {
  EvaluationReport report;
  report.fidelity = fidelity_statistics(design, map, noise, gate, n_samples);
  report.power = design_power_loss(design, map, loss_options);
  report.adiabaticity_per_um = adiabaticity_metric(design);
  report.sigma_percent = sigma_percent(design, noise.sigma_nm);
  if (report.fidelity.clamp_rate > 0.0) {
    log::info("evaluation clamped " +
              std::to_string(100.0 * report.fidelity.clamp_rate) +
              "% of noisy width values to the map domain");
  }
  return report;
}

}  // namespace segwave
