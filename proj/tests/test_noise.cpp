#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "segwave/noise.hpp"

using namespace segwave;
using Catch::Approx;

TEST_CASE("correlation matrix entries") {
  SECTION("diagonal is one, mu = 0 gives 0.5 off-diagonal") {
    const auto rho = correlation_matrix(6, 0.0);
    for (int k = 0; k < 6; ++k) {
      REQUIRE(rho(k, k) == 1.0);
      for (int l = 0; l < 6; ++l) {
        if (l != k) REQUIRE(rho(k, l) == 0.5);
      }
    }
  }
  SECTION("mu = 1 nearest neighbour is 1/3.25") {
    const auto rho = correlation_matrix(4, 1.0);
    REQUIRE(rho(0, 1) == Approx(1.0 / 3.25).epsilon(1e-15));
    REQUIRE(rho(0, 1) == Approx(0.3076923076923077).epsilon(1e-12));
    REQUIRE(rho(1, 0) == rho(0, 1));
  }
  SECTION("off-diagonals decrease in mu and vanish at large mu") {
    for (int dist : {1, 2, 5}) {
      double prev = 1.0;
      for (double mu : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        const auto rho = correlation_matrix(8, mu);
        const double v = rho(0, dist);
        REQUIRE(v < prev);
        prev = v;
      }
      REQUIRE(correlation_matrix(8, 40.0)(0, dist) < 1e-6);
    }
  }
}

TEST_CASE("PSD repair") {
  SECTION("PSD input passes through unchanged") {
    const auto rho = correlation_matrix(10, 1.0);
    const auto fixed = repair_correlation(rho);
    REQUIRE_FALSE(fixed.clipped);
    REQUIRE((fixed.matrix - rho).norm() == 0.0);
  }
  SECTION("indefinite matrix is clipped and renormalized") {
    Eigen::MatrixXd bad(3, 3);
    bad << 1.0, 0.9, 0.0,
           0.9, 1.0, 0.9,
           0.0, 0.9, 1.0;  // min eigenvalue 1 - 0.9 sqrt(2) < 0
    const auto fixed = repair_correlation(bad);
    REQUIRE(fixed.clipped);
    REQUIRE(fixed.min_eigenvalue < -1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fixed.matrix);
    REQUIRE(es.eigenvalues().minCoeff() > -1e-12);
    for (int i = 0; i < 3; ++i) {
      REQUIRE(fixed.matrix(i, i) == Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("width error sampling") {
  SECTION("zero sigma gives all-zero samples") {
    NoiseSpec spec;
    spec.sigma_nm = 0.0;
    spec.seed = 3;
    const auto m = sample_width_errors(spec, 5, 100);
    for (double v : m.data) REQUIRE(v == 0.0);
  }

  SECTION("fully correlated rows are constant") {
    NoiseSpec spec;
    spec.sigma_nm = 20.0;
    spec.seed = 11;
    const auto m = sample_width_errors(spec, 7, 200);
    for (int s = 0; s < m.n_samples; ++s) {
      for (int i = 1; i < m.n_segments; ++i) {
        REQUIRE(m.at(s, i) == m.at(s, 0));
      }
    }
  }

  SECTION("identical spec and seed reproduce identical samples") {
    NoiseSpec spec;
    spec.sigma_nm = 15.0;
    spec.mode = NoiseMode::correlation;
    spec.mu = 1.5;
    spec.seed = 42;
    const auto a = sample_width_errors(spec, 6, 500);
    const auto b = sample_width_errors(spec, 6, 500);
    REQUIRE(a.data == b.data);
    spec.seed = 43;
    const auto c = sample_width_errors(spec, 6, 500);
    REQUIRE(a.data != c.data);
  }

  SECTION("zero mean and marginal variance at 1e5 samples") {
    NoiseSpec spec;
    spec.sigma_nm = 30.0;
    spec.mode = NoiseMode::correlation;
    spec.mu = 1.0;
    spec.seed = 7;
    const int n = 5, samples = 100000;
    const auto m = sample_width_errors(spec, n, samples);
    for (int i = 0; i < n; ++i) {
      double sum = 0.0, sum_sq = 0.0;
      for (int s = 0; s < samples; ++s) {
        sum += m.at(s, i);
        sum_sq += m.at(s, i) * m.at(s, i);
      }
      const double mean = sum / samples;
      const double var = sum_sq / samples - mean * mean;
      // 4 standard errors of the mean
      REQUIRE(std::abs(mean) < 4.0 * spec.sigma_nm / std::sqrt(samples));
      REQUIRE(var == Approx(spec.sigma_nm * spec.sigma_nm).epsilon(0.05));
    }
  }

  SECTION("empirical correlation matches rho(mu = 0) within 0.02") {
    NoiseSpec spec;
    spec.sigma_nm = 1.0;
    spec.mode = NoiseMode::correlation;
    spec.mu = 0.0;
    spec.seed = 99;
    const int n = 10, samples = 100000;
    const auto m = sample_width_errors(spec, n, samples);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (int s = 0; s < samples; ++s) {
      for (int i = 0; i < n; ++i) mean(i) += m.at(s, i);
    }
    mean /= samples;
    for (int s = 0; s < samples; ++s) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          cov(i, j) += (m.at(s, i) - mean(i)) * (m.at(s, j) - mean(j));
        }
      }
    }
    cov /= samples;
    const auto rho = correlation_matrix(n, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double emp = cov(i, j) / std::sqrt(cov(i, i) * cov(j, j));
        REQUIRE(emp == Approx(rho(i, j)).margin(0.02));
      }
    }
  }

  SECTION("input validation") {
    NoiseSpec spec;
    spec.sigma_nm = -1.0;
    REQUIRE_THROWS_AS(sample_width_errors(spec, 3, 10), std::invalid_argument);
    spec.sigma_nm = 1.0;
    REQUIRE_THROWS_AS(sample_width_errors(spec, 0, 10), std::invalid_argument);
    REQUIRE_THROWS_AS(sample_width_errors(spec, 3, 0), std::invalid_argument);
  }
}

TEST_CASE("sigma_percent") {
  Design d;
  d.segments = {{600.0, 600.0, 10.0}};
  REQUIRE(sigma_percent(d, 30.0) == Approx(5.0).epsilon(1e-15));

  Design mixed;
  mixed.segments = {{500.0, 500.0, 10.0}, {700.0, 700.0, 10.0}};
  // W_mean = (500 + 500 + 700 + 700) / 4 = 600
  REQUIRE(sigma_percent(mixed, 30.0) == Approx(5.0).epsilon(1e-15));

  Design w;
  w.segments = {{800.0, 640.0, 5.0}};
  REQUIRE(sigma_percent(w, 7.2) == Approx(100.0 * 7.2 / 720.0).epsilon(1e-15));
}
