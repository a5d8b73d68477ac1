// Independent numerical oracles used by the tests. These must not share
// code paths with the library routines they check.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "segwave/cmt.hpp"
#include "segwave/design.hpp"
#include "segwave/unitary.hpp"

namespace oracles {

using segwave::complexd;
using segwave::Unitary2;

// Fine-step RK4 integration of the two-mode equation
//   i dE/dz = [[-delta, kappa], [kappa, delta]] E
// with piecewise-constant coefficients, evolving both basis columns.
inline Unitary2 integrate_design(
    const segwave::Design& design,
    std::span<const segwave::SegmentCoefficients> coeffs,
    double step_um = 1e-3) {
  std::array<complexd, 4> m{1.0, 0.0, 0.0, 1.0};  // row-major
  auto rhs = [](const std::array<complexd, 4>& x, double kappa, double delta) {
    const complexd i{0.0, 1.0};
    // -i H x with H = [[-delta, kappa], [kappa, delta]]
    std::array<complexd, 4> r;
    r[0] = -i * (-delta * x[0] + kappa * x[2]);
    r[1] = -i * (-delta * x[1] + kappa * x[3]);
    r[2] = -i * (kappa * x[0] + delta * x[2]);
    r[3] = -i * (kappa * x[1] + delta * x[3]);
    return r;
  };
  for (int seg = 0; seg < design.size(); ++seg) {
    const double kappa = coeffs[seg].kappa_per_um;
    const double delta = coeffs[seg].delta_per_um;
    const double len = design.segments[seg].length_um;
    const int nsteps = std::max(1, static_cast<int>(std::ceil(len / step_um)));
    const double h = len / nsteps;
    for (int s = 0; s < nsteps; ++s) {
      const auto k1 = rhs(m, kappa, delta);
      std::array<complexd, 4> t;
      for (int j = 0; j < 4; ++j) t[j] = m[j] + 0.5 * h * k1[j];
      const auto k2 = rhs(t, kappa, delta);
      for (int j = 0; j < 4; ++j) t[j] = m[j] + 0.5 * h * k2[j];
      const auto k3 = rhs(t, kappa, delta);
      for (int j = 0; j < 4; ++j) t[j] = m[j] + h * k3[j];
      const auto k4 = rhs(t, kappa, delta);
      for (int j = 0; j < 4; ++j) {
        m[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      }
    }
  }
  return {m[0], m[1], m[2], m[3]};
}

// 41-point Gauss-Hermite rule (weight exp(-x^2)). For g ~ N(0, sigma):
//   E[f(g)] ~ (1/sqrt(pi)) sum_i w_i f(sqrt(2) sigma x_i)
inline constexpr int kGaussHermiteN = 41;

inline constexpr std::array<double, kGaussHermiteN> kGaussHermiteNodes = {
    -8.21300089559827917e+00, -7.52894546453962032e+00, -6.96035840063674893e+00,
    -6.45098459717475325e+00, -5.97936500416513361e+00, -5.53444134061344606e+00,
    -5.10956962653313340e+00, -4.70035689630411557e+00, -4.30369876715464983e+00,
    -3.91728985483778214e+00, -3.53934993736371162e+00, -3.16845945394198569e+00,
    -2.80345496148431828e+00, -2.44335955312341113e+00, -2.08733468191872440e+00,
    -1.73464560882202923e+00, -1.38463578916003249e+00, -1.03670725292420607e+00,
    -6.90305052330208113e-01, -3.44904463015432761e-01, 0.00000000000000000e+00,
    3.44904463015432761e-01, 6.90305052330208113e-01, 1.03670725292420607e+00,
    1.38463578916003249e+00, 1.73464560882202923e+00, 2.08733468191872440e+00,
    2.44335955312341113e+00, 2.80345496148431828e+00, 3.16845945394198569e+00,
    3.53934993736371162e+00, 3.91728985483778214e+00, 4.30369876715464983e+00,
    4.70035689630411557e+00, 5.10956962653313340e+00, 5.53444134061344606e+00,
    5.97936500416513361e+00, 6.45098459717475325e+00, 6.96035840063674893e+00,
    7.52894546453962032e+00, 8.21300089559827917e+00};

inline constexpr std::array<double, kGaussHermiteN> kGaussHermiteWeights = {
    4.00195966466624143e-30, 1.47265372865221660e-25, 4.86873793601320841e-22,
    4.12340853753195494e-19, 1.35698752958617519e-16, 2.16298724717487320e-14,
    1.91038336468088158e-12, 1.02267989277823571e-10, 3.53568164838071996e-09,
    8.27265841874968540e-08, 1.35737814048704799e-06, 1.60559657366771117e-05,
    1.39930256596741573e-04, 9.14234256328712259e-04, 4.54039298730326505e-03,
    1.73308813621168706e-02, 5.12898723970946907e-02, 1.18484391246844054e-01,
    2.14730864490084244e-01, 3.06367816937851256e-01, 3.44822083616389830e-01,
    3.06367816937851256e-01, 2.14730864490084244e-01, 1.18484391246844054e-01,
    5.12898723970946907e-02, 1.73308813621168706e-02, 4.54039298730326505e-03,
    9.14234256328712259e-04, 1.39930256596741573e-04, 1.60559657366771117e-05,
    1.35737814048704799e-06, 8.27265841874968540e-08, 3.53568164838071996e-09,
    1.02267989277823571e-10, 1.91038336468088158e-12, 2.16298724717487320e-14,
    1.35698752958617519e-16, 4.12340853753195494e-19, 4.86873793601320841e-22,
    1.47265372865221660e-25, 4.00195966466624143e-30};

template <typename F>
double gauss_hermite_mean(double sigma, F&& f) {
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::acos(-1.0));
  double sum = 0.0;
  for (int i = 0; i < kGaussHermiteN; ++i) {
    sum += kGaussHermiteWeights[i] *
           f(std::sqrt(2.0) * sigma * kGaussHermiteNodes[i]);
  }
  return inv_sqrt_pi * sum;
}

}  // namespace oracles
