#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "segwave/design.hpp"
#include "segwave/unitary.hpp"

namespace segwave {

// Physical coefficients of one segment: coupling kappa and mode mismatch
// delta (both 1/um), and the effective index of each waveguide.
struct SegmentCoefficients {
  double kappa_per_um = 0.0;
  double delta_per_um = 0.0;
  double n_eff0 = 0.0;
  double n_eff1 = 0.0;
};

namespace detail {

// sin(w z)/w and (w z cos(w z) - sin(w z))/w^3, with series branches near
// w z = 0 where the direct forms cancel.
struct TrigKernels {
  double coswz;   // cos(w z)
  double sinc_z;  // sin(w z)/w  -> z as w -> 0
  double e3;      // (w z cos - sin)/w^3 -> -z^3/3 as w -> 0
};

inline TrigKernels trig_kernels(double w, double z) {
  const double phi = w * z;
  TrigKernels k{};
  k.coswz = std::cos(phi);
  if (std::abs(phi) < 1e-2) {
    const double p2 = phi * phi;
    k.sinc_z = z * (1.0 - p2 / 6.0 + p2 * p2 / 120.0);
    k.e3 = z * z * z * (-1.0 / 3.0 + p2 / 30.0);
  } else {
    k.sinc_z = std::sin(phi) / w;
    k.e3 = (phi * k.coswz - std::sin(phi)) / (w * w * w);
  }
  return k;
}

}  // namespace detail

// Propagator of a constant-coefficient segment of length z:
//   U = cos(Wg z) I - i (kappa/Wg) sin(Wg z) X + i (delta/Wg) sin(Wg z) Z,
// with Wg = sqrt(kappa^2 + delta^2). kappa is real and non-negative. The
// Wg -> 0 limit is the identity and is handled without division.
inline Unitary2 segment_unitary(double kappa_per_um, double delta_per_um,
                                double z_um) {
  if (z_um < 0.0) {
    throw std::invalid_argument("segment_unitary: negative length");
  }
  const double wg = std::hypot(kappa_per_um, delta_per_um);
  const auto k = detail::trig_kernels(wg, z_um);
  // c I - i g (kappa X - delta Z), g = sin(Wg z)/Wg
  const double c = k.coswz;
  const double g = k.sinc_z;
  return {{c, delta_per_um * g},
          {0.0, -kappa_per_um * g},
          {0.0, -kappa_per_um * g},
          {c, -delta_per_um * g}};
}

inline Unitary2 segment_unitary(const SegmentCoefficients& coeffs,
                                double z_um) {
  return segment_unitary(coeffs.kappa_per_um, coeffs.delta_per_um, z_um);
}

// Propagator together with its partial derivatives in (kappa, delta, z).
// Used by the analytic cost gradient.
struct SegmentUnitaryDerivs {
  Unitary2 u;
  Unitary2 du_dkappa;
  Unitary2 du_ddelta;
  Unitary2 du_dz;
};

inline SegmentUnitaryDerivs segment_unitary_with_derivs(double kappa,
                                                        double delta,
                                                        double z) {
  const double wg = std::hypot(kappa, delta);
  const auto k = detail::trig_kernels(wg, z);
  const double c = k.coswz;
  const double g = k.sinc_z;

  SegmentUnitaryDerivs d{};
  d.u = {{c, delta * g}, {0.0, -kappa * g}, {0.0, -kappa * g}, {c, -delta * g}};

  // dU/dkappa = -kappa z g I - i kappa e3 (kappa X - delta Z) - i g X
  {
    const double dc = -kappa * z * g;
    const double dg = kappa * k.e3;
    d.du_dkappa = {{dc, delta * dg},
                   {0.0, -(kappa * dg + g)},
                   {0.0, -(kappa * dg + g)},
                   {dc, -delta * dg}};
  }
  // dU/ddelta = -delta z g I - i delta e3 (kappa X - delta Z) + i g Z
  {
    const double dc = -delta * z * g;
    const double dg = delta * k.e3;
    d.du_ddelta = {{dc, delta * dg + g},
                   {0.0, -kappa * dg},
                   {0.0, -kappa * dg},
                   {dc, -(delta * dg + g)}};
  }
  // dU/dz = -i (kappa X - delta Z) U
  {
    const complexd i{0.0, 1.0};
    const Unitary2& u = d.u;
    d.du_dz = {i * delta * u.u00 - i * kappa * u.u10,
               i * delta * u.u01 - i * kappa * u.u11,
               -i * kappa * u.u00 - i * delta * u.u10,
               -i * kappa * u.u01 - i * delta * u.u11};
  }
  return d;
}

// z-ordered product over the design's segments: segment 0 acts first on a
// column state, so the result is U_{N-1} ... U_1 U_0.
inline Unitary2 composite_unitary(const Design& design,
                                  std::span<const SegmentCoefficients> coeffs) {
  if (static_cast<int>(coeffs.size()) != design.size()) {
    throw std::invalid_argument(
        "composite_unitary: coefficient count does not match segment count");
  }
  Unitary2 u = Unitary2::identity();
  for (int i = 0; i < design.size(); ++i) {
    u = segment_unitary(coeffs[i], design.segments[i].length_um) * u;
  }
  return u;
}

struct TrajectoryPoint {
  double z_um = 0.0;
  double bx = 0.0;
  double by = 0.0;
  double bz = 0.0;
};

using BlochTrajectory = std::vector<TrajectoryPoint>;

// Bloch-sphere trajectory of a pure state through the design, sampled at
// substep boundaries (N*substeps + 1 points including z = 0). Coefficients
// are the nominal, noise-free values resolved by the caller.
inline BlochTrajectory propagate_state(
    const Design& design, std::span<const SegmentCoefficients> coeffs,
    const std::array<complexd, 2>& initial_state, int substeps_per_segment) {
  if (static_cast<int>(coeffs.size()) != design.size()) {
    throw std::invalid_argument(
        "propagate_state: coefficient count does not match segment count");
  }
  if (substeps_per_segment < 1) {
    throw std::invalid_argument("propagate_state: substeps must be >= 1");
  }
  const double norm =
      std::norm(initial_state[0]) + std::norm(initial_state[1]);
  if (std::abs(norm - 1.0) > 1e-9) {
    throw std::invalid_argument("propagate_state: state is not normalized");
  }

  BlochTrajectory traj;
  traj.reserve(static_cast<std::size_t>(design.size()) * substeps_per_segment +
               1);
  auto push = [&traj](double z, const std::array<complexd, 2>& psi) {
    const auto b = bloch_vector(psi);
    traj.push_back({z, b[0], b[1], b[2]});
  };

  std::array<complexd, 2> psi = initial_state;
  double z0 = 0.0;
  push(z0, psi);
  for (int i = 0; i < design.size(); ++i) {
    const double dz = design.segments[i].length_um;
    // Substep states are computed from the segment entry state so each
    // sampled point is exact, not accumulated.
    for (int s = 1; s <= substeps_per_segment; ++s) {
      const double zloc = dz * static_cast<double>(s) /
                          static_cast<double>(substeps_per_segment);
      const auto u = segment_unitary(coeffs[i], zloc);
      push(z0 + zloc, u.apply(psi));
    }
    psi = segment_unitary(coeffs[i], dz).apply(psi);
    z0 += dz;
  }
  return traj;
}

}  // namespace segwave
