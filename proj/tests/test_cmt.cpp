#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "segwave/cmt.hpp"
#include "segwave/rng.hpp"
#include "segwave/unitary.hpp"
#include "support/oracles.hpp"

using namespace segwave;
using Catch::Approx;

namespace {

Design plain_design(std::vector<double> lengths_um) {
  Design d;
  for (double len : lengths_um) d.segments.push_back({600.0, 600.0, len});
  return d;
}

}  // namespace

TEST_CASE("segment_unitary known values") {
  const double pi = std::numbers::pi;

  SECTION("kappa z = pi/2 with no mismatch gives -iX") {
    const auto u = segment_unitary(pi / 2.0, 0.0, 1.0);
    const Unitary2 expect = pauli_x() * complexd{0.0, -1.0};
    REQUIRE(u.max_entry_distance(expect) < 1e-12);
  }
  SECTION("zero length is the identity") {
    const auto u = segment_unitary(1.7, -2.3, 0.0);
    REQUIRE(u.max_entry_distance(Unitary2::identity()) < 1e-15);
  }
  SECTION("full period gives -I") {
    // Wg = 5, z = pi/5
    const auto u = segment_unitary(3.0, 4.0, pi / 5.0);
    const Unitary2 expect = Unitary2::identity() * complexd{-1.0, 0.0};
    REQUIRE(u.max_entry_distance(expect) < 1e-12);
  }
  SECTION("zero coupling and mismatch is the exact identity") {
    const auto u = segment_unitary(0.0, 0.0, 42.0);
    REQUIRE(u.max_entry_distance(Unitary2::identity()) == 0.0);
  }
  SECTION("negative length rejected") {
    REQUIRE_THROWS_AS(segment_unitary(1.0, 0.0, -1.0), std::invalid_argument);
  }
}

TEST_CASE("segment_unitary is unitary with unit determinant") {
  Rng rng(20240811);
  for (int trial = 0; trial < 1000; ++trial) {
    const double kappa = rng.uniform(0.0, 2.0);
    const double delta = rng.uniform(-2.0, 2.0);
    const double z = rng.uniform(0.0, 100.0);
    const auto u = segment_unitary(kappa, delta, z);
    REQUIRE(u.unitarity_error() < 1e-12);
    REQUIRE(std::abs(u.det() - 1.0) < 1e-12);
  }
}

TEST_CASE("segment_unitary continuity at vanishing coupling") {
  const double z = 10.0;
  double prev = 1.0;
  for (double eps : {1e-4, 1e-6, 1e-8}) {
    const auto u = segment_unitary(eps, 0.0, z);
    const double dist = u.max_entry_distance(Unitary2::identity());
    REQUIRE(dist < 2.0 * eps * z);
    REQUIRE(dist < prev);
    prev = dist;
  }
}

TEST_CASE("composite_unitary basics") {
  SECTION("single segment equals segment_unitary") {
    const auto d = plain_design({3.0});
    const std::vector<SegmentCoefficients> c{{0.4, 0.1, 2.0, 2.0}};
    REQUIRE(composite_unitary(d, c).max_entry_distance(
                segment_unitary(c[0], 3.0)) == 0.0);
  }
  SECTION("two quarter rotations compose to -iX") {
    const double kappa = std::numbers::pi / 4.0;
    const auto d = plain_design({1.0, 1.0});
    const std::vector<SegmentCoefficients> c{{kappa, 0.0, 2.0, 2.0},
                                             {kappa, 0.0, 2.0, 2.0}};
    const Unitary2 expect = pauli_x() * complexd{0.0, -1.0};
    REQUIRE(composite_unitary(d, c).max_entry_distance(expect) < 1e-12);
  }
  SECTION("coefficient count mismatch is rejected") {
    const auto d = plain_design({1.0, 1.0});
    const std::vector<SegmentCoefficients> c{{0.1, 0.0, 2.0, 2.0}};
    REQUIRE_THROWS_AS(composite_unitary(d, c), std::invalid_argument);
  }
}

TEST_CASE("composite splits compose") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform(0.0, 6.0));
    Design d;
    std::vector<SegmentCoefficients> c;
    for (int i = 0; i < n; ++i) {
      d.segments.push_back({600.0, 600.0, rng.uniform(0.5, 20.0)});
      c.push_back({rng.uniform(0.0, 0.5), rng.uniform(-0.5, 0.5), 2.0, 2.0});
    }
    const auto whole = composite_unitary(d, c);
    const int cut = 1 + static_cast<int>(rng.uniform(0.0, n - 1.0));
    Design head, tail;
    head.segments.assign(d.segments.begin(), d.segments.begin() + cut);
    tail.segments.assign(d.segments.begin() + cut, d.segments.end());
    const std::vector<SegmentCoefficients> ch(c.begin(), c.begin() + cut);
    const std::vector<SegmentCoefficients> ct(c.begin() + cut, c.end());
    const auto parts = composite_unitary(tail, ct) * composite_unitary(head, ch);
    REQUIRE(whole.max_entry_distance(parts) < 1e-12);
  }
}

TEST_CASE("composite matches fine-step integration of the two-mode equation") {
  Rng rng(123);
  for (int trial = 0; trial < 10; ++trial) {
    Design d;
    std::vector<SegmentCoefficients> c;
    for (int i = 0; i < 3; ++i) {
      d.segments.push_back({600.0, 600.0, rng.uniform(1.0, 30.0)});
      c.push_back({rng.uniform(0.0, 0.3), rng.uniform(-0.3, 0.3), 2.0, 2.0});
    }
    const auto exact = composite_unitary(d, c);
    const auto numeric = oracles::integrate_design(d, c, 1e-3);
    REQUIRE(exact.max_entry_distance(numeric) < 1e-6);
  }
}

TEST_CASE("ideal gates") {
  SECTION("named gates") {
    REQUIRE(ideal_gate("X").max_entry_distance(pauli_x()) == 0.0);
    const Unitary2 h = ideal_gate("H");
    const double s = 1.0 / std::sqrt(2.0);
    REQUIRE(std::abs(h.u00 - s) < 1e-15);
    REQUIRE(std::abs(h.u11 + s) < 1e-15);
    REQUIRE((h * h).max_entry_distance(Unitary2::identity()) < 1e-15);
    // sqrtX squares to X and has eigenvalues {1, i} (trace 1 + i).
    const Unitary2 sx = ideal_gate("sqrtX");
    REQUIRE((sx * sx).max_entry_distance(pauli_x()) < 1e-15);
    REQUIRE(std::abs(sx.trace() - complexd{1.0, 1.0}) < 1e-15);
  }
  SECTION("axis-angle: angle pi about z gives -iZ") {
    const auto u = axis_angle_gate({0.0, 0.0, 1.0}, std::numbers::pi);
    REQUIRE(u.max_entry_distance(pauli_z() * complexd{0.0, -1.0}) < 1e-15);
  }
  SECTION("unknown names and zero axes are rejected") {
    REQUIRE_THROWS_AS(ideal_gate("CNOT"), std::invalid_argument);
    REQUIRE_THROWS_AS(axis_angle_gate({0.0, 0.0, 0.0}, 1.0),
                      std::invalid_argument);
  }
}

TEST_CASE("propagate_state") {
  const std::array<complexd, 2> ket0{complexd{1.0, 0.0}, complexd{0.0, 0.0}};

  SECTION("identity design gives a constant trajectory") {
    const auto d = plain_design({5.0, 5.0});
    const std::vector<SegmentCoefficients> c{{0.0, 0.0, 2.0, 2.0},
                                             {0.0, 0.0, 2.0, 2.0}};
    const auto traj = propagate_state(d, c, ket0, 8);
    REQUIRE(traj.size() == 2 * 8 + 1);
    for (const auto& p : traj) {
      REQUIRE(p.bx == Approx(0.0).margin(1e-15));
      REQUIRE(p.by == Approx(0.0).margin(1e-15));
      REQUIRE(p.bz == Approx(1.0).margin(1e-15));
    }
  }

  SECTION("norm conservation and agreement with the composite product") {
    Rng rng(99);
    Design d;
    std::vector<SegmentCoefficients> c;
    for (int i = 0; i < 4; ++i) {
      d.segments.push_back({600.0, 600.0, rng.uniform(2.0, 20.0)});
      c.push_back({rng.uniform(0.0, 0.3), rng.uniform(-0.2, 0.2), 2.0, 2.0});
    }
    const auto traj = propagate_state(d, c, ket0, 16);
    REQUIRE(traj.size() == 4 * 16 + 1);
    for (const auto& p : traj) {
      const double norm =
          std::sqrt(p.bx * p.bx + p.by * p.by + p.bz * p.bz);
      REQUIRE(norm == Approx(1.0).margin(1e-9));
    }
    const auto psi = composite_unitary(d, c).apply(ket0);
    const auto b = bloch_vector(psi);
    REQUIRE(traj.back().bx == Approx(b[0]).margin(1e-9));
    REQUIRE(traj.back().by == Approx(b[1]).margin(1e-9));
    REQUIRE(traj.back().bz == Approx(b[2]).margin(1e-9));
    // z positions are cumulative.
    REQUIRE(traj.back().z_um == Approx(d.total_length_um()).margin(1e-12));
  }

  SECTION("unnormalized input is rejected") {
    const auto d = plain_design({5.0});
    const std::vector<SegmentCoefficients> c{{0.1, 0.0, 2.0, 2.0}};
    const std::array<complexd, 2> bad{complexd{0.5, 0.0}, complexd{0.0, 0.0}};
    REQUIRE_THROWS_AS(propagate_state(d, c, bad, 4), std::invalid_argument);
  }
}
