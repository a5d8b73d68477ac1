#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "segwave/design.hpp"
#include "segwave/errors.hpp"
#include "segwave/log.hpp"
#include "segwave/rng.hpp"

namespace segwave {

enum class NoiseMode {
  // One width error per sample shared by all segments (rank-1, exact).
  fully_correlated,
  // Inter-segment correlation rho_kl(mu); mu = 0 is strong correlation
  // (off-diagonals 0.5), mu -> inf is independent.
  correlation,
};

struct NoiseSpec {
  double sigma_nm = 0.0;
  NoiseMode mode = NoiseMode::fully_correlated;
  double mu = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (sigma_nm < 0.0) {
      throw std::invalid_argument("noise: sigma must be >= 0");
    }
    if (mode == NoiseMode::correlation && mu < 0.0) {
      throw std::invalid_argument("noise: mu must be >= 0");
    }
  }
};

// rho_kk = 1, rho_kl = 1 / ((|k-l| + 1/2)^(2 mu) + 1) for k != l.
inline Eigen::MatrixXd correlation_matrix(int n, double mu) {
  if (n < 1) throw std::invalid_argument("correlation_matrix: n must be >= 1");
  Eigen::MatrixXd rho(n, n);
  for (int k = 0; k < n; ++k) {
    rho(k, k) = 1.0;
    for (int l = k + 1; l < n; ++l) {
      const double d = static_cast<double>(l - k);
      const double v = 1.0 / (std::pow(d + 0.5, 2.0 * mu) + 1.0);
      rho(k, l) = v;
      rho(l, k) = v;
    }
  }
  return rho;
}

struct PsdRepairResult {
  Eigen::MatrixXd matrix;  // repaired correlation, unit diagonal
  double min_eigenvalue = 0.0;
  bool clipped = false;
};

// The correlation model is not guaranteed PSD for every (N, mu). Repair by
// clipping negative eigenvalues at zero and renormalizing the diagonal back
// to one; warn when anything below -1e-10 had to be clipped.
inline PsdRepairResult repair_correlation(const Eigen::MatrixXd& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rho);
  if (es.info() != Eigen::Success) {
    throw NumericError("correlation matrix eigendecomposition failed");
  }
  PsdRepairResult r{};
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  if (r.min_eigenvalue >= 0.0) {
    r.matrix = rho;
    return r;
  }
  r.clipped = true;
  if (r.min_eigenvalue < -1e-10) {
    log::warn("correlation matrix has eigenvalue " +
              std::to_string(r.min_eigenvalue) + "; clipping to PSD");
  }
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd fixed =
      es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  Eigen::VectorXd d = fixed.diagonal();
  for (int i = 0; i < d.size(); ++i) {
    if (!(d(i) > 0.0)) {
      throw NumericError(
          "correlation matrix not repairable to PSD within tolerance");
    }
    d(i) = 1.0 / std::sqrt(d(i));
  }
  r.matrix = d.asDiagonal() * fixed * d.asDiagonal();
  return r;
}

// Row-major matrix of width-error samples; one row per Monte-Carlo sample,
// one column per segment.
struct SampleMatrix {
  int n_samples = 0;
  int n_segments = 0;
  std::vector<double> data;

  double at(int sample, int segment) const {
    return data[static_cast<std::size_t>(sample) * n_segments + segment];
  }
  std::span<const double> row(int sample) const {
    return {data.data() + static_cast<std::size_t>(sample) * n_segments,
            static_cast<std::size_t>(n_segments)};
  }
};

// Correlated width-error generator. The sampling transform (for the
// correlation mode, a Cholesky factor of the PSD-repaired matrix) is built
// once at construction; each fill consumes n_segments standard normals in
// the correlation mode and one in the fully correlated mode.
class WidthErrorSampler {
 public:
  WidthErrorSampler(const NoiseSpec& spec, int n_segments)
      : spec_(spec), n_(n_segments) {
    spec_.validate();
    if (n_ < 1) {
      throw std::invalid_argument("width error sampler: N must be >= 1");
    }
    if (spec_.mode == NoiseMode::correlation) {
      auto repaired = repair_correlation(correlation_matrix(n_, spec_.mu));
      Eigen::MatrixXd m = repaired.matrix;
      Eigen::LLT<Eigen::MatrixXd> llt;
      double jitter = 0.0;
      for (int attempt = 0; attempt < 4; ++attempt) {
        llt.compute(m + jitter * Eigen::MatrixXd::Identity(n_, n_));
        if (llt.info() == Eigen::Success) break;
        jitter = (jitter == 0.0) ? 1e-12 : jitter * 100.0;
      }
      if (llt.info() != Eigen::Success) {
        throw NumericError(
            "correlation matrix not repairable to PSD within tolerance");
      }
      transform_ = llt.matrixL();
    }
  }

  int n_segments() const { return n_; }

  void fill(Rng& rng, std::span<double> out) const {
    if (spec_.mode == NoiseMode::fully_correlated) {
      const double d = spec_.sigma_nm * rng.normal();
      for (int i = 0; i < n_; ++i) out[i] = d;
      return;
    }
    Eigen::VectorXd g(n_);
    for (int i = 0; i < n_; ++i) g(i) = rng.normal();
    const Eigen::VectorXd corr = transform_ * g;
    for (int i = 0; i < n_; ++i) out[i] = spec_.sigma_nm * corr(i);
  }

  SampleMatrix sample(std::uint64_t seed, int n_samples) const {
    if (n_samples < 1) {
      throw std::invalid_argument("width error sampler: n_samples must be >= 1");
    }
    SampleMatrix m;
    m.n_samples = n_samples;
    m.n_segments = n_;
    m.data.resize(static_cast<std::size_t>(n_samples) * n_);
    Rng rng(seed);
    for (int s = 0; s < n_samples; ++s) {
      fill(rng, {m.data.data() + static_cast<std::size_t>(s) * n_,
                 static_cast<std::size_t>(n_)});
    }
    return m;
  }

 private:
  NoiseSpec spec_;
  int n_;
  Eigen::MatrixXd transform_;
};

// Reproducible given (spec.seed, spec, N).
inline SampleMatrix sample_width_errors(const NoiseSpec& spec, int n_segments,
                                        int n_samples) {
  return WidthErrorSampler(spec, n_segments).sample(spec.seed, n_samples);
}

// sigma_% = 100 sigma / W_mean
inline double sigma_percent(const Design& design, double sigma_nm) {
  design.validate();
  return 100.0 * sigma_nm / design.mean_width_nm();
}

}  // namespace segwave
