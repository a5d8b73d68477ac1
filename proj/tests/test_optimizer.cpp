#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "segwave/optimizer.hpp"
#include "segwave/serialization.hpp"

using namespace segwave;
using Catch::Approx;

namespace {

// Random interior design with headroom to the domain edges so FD probes
// and small noise never cross the clamp boundary.
Design random_design(Rng& rng, int n) {
  Design d;
  for (int i = 0; i < n; ++i) {
    d.segments.push_back({rng.uniform(560.0, 790.0), rng.uniform(560.0, 790.0),
                          rng.uniform(2.0, 30.0)});
  }
  return d;
}

OptimizeConfig gradient_check_config(RegularizerMode mode, int n,
                                     std::uint64_t seed) {
  OptimizeConfig cfg;
  cfg.gate.name = "X";
  cfg.n_segments = n;
  cfg.noise.sigma_nm = 2.0;
  cfg.noise.seed = seed;
  cfg.regularizer_mode = mode;
  cfg.lambda_w = 1e-4;
  cfg.lambda_r = 1.0;
  cfg.lambda_a = 10.0;
  cfg.seed = seed;
  return cfg;
}

double rel_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace

TEST_CASE("range penalty") {
  OptimizeConfig cfg;
  Design inside;
  inside.segments = {{600.0, 700.0, 10.0}, {500.0, 850.0, 5.0}};
  REQUIRE(range_penalty(inside, 500.0, 850.0, 1.0) == 0.0);

  SECTION("quadratic hinge value") {
    Design out;
    out.segments = {{860.0, 700.0, 10.0}};
    REQUIRE(range_penalty(out, 500.0, 850.0, 1.0) == Approx(100.0).epsilon(1e-15));
    Design under;
    under.segments = {{490.0, 700.0, 10.0}};
    REQUIRE(range_penalty(under, 500.0, 850.0, 2.0) == Approx(200.0).epsilon(1e-15));
  }

  SECTION("continuous with zero slope at the boundary") {
    Design d;
    d.segments = {{850.0, 700.0, 10.0}};
    const double at = range_penalty(d, 500.0, 850.0, 1.0);
    REQUIRE(at == 0.0);
    d.segments[0].width0_nm = 850.0 + 1e-6;
    REQUIRE(range_penalty(d, 500.0, 850.0, 1.0) == Approx(0.0).margin(1e-11));
  }
}

TEST_CASE("total cost composition") {
  const auto map = default_linbo3_map();

  SECTION("zero weights reduce to the fidelity loss") {
    auto cfg = gradient_check_config(RegularizerMode::fresnel, 2, 5);
    cfg.lambda_w = 0.0;
    cfg.lambda_r = 0.0;
    Rng rng(2);
    const auto d = random_design(rng, 2);
    const auto batch = sample_width_errors(cfg.noise, 2, 64);
    const auto cost = total_cost(d, cfg, map, batch);
    REQUIRE(cost.total == Approx(cost.fidelity_loss).margin(1e-15));
    REQUIRE(cost.range_penalty == 0.0);
    REQUIRE(cost.regularizer == 0.0);
  }

  SECTION("perfect noise-free design has zero cost") {
    auto cfg = gradient_check_config(RegularizerMode::baseline, 1, 5);
    cfg.noise.sigma_nm = 0.0;
    cfg.lambda_w = 0.0;
    Design d;
    const double kappa = map.lookup(675.0, 675.0).kappa_per_um;
    d.segments = {{675.0, 675.0, std::numbers::pi / (2.0 * kappa)}};
    const auto batch = sample_width_errors(cfg.noise, 1, 8);
    const auto cost = total_cost(d, cfg, map, batch);
    REQUIRE(cost.total == Approx(0.0).margin(1e-12));
  }

  SECTION("fresnel regularizer vanishes for identical widths") {
    auto cfg = gradient_check_config(RegularizerMode::fresnel, 3, 5);
    Design d;
    d.segments = {{650.0, 700.0, 10.0}, {650.0, 700.0, 10.0},
                  {650.0, 700.0, 10.0}};
    const auto batch = sample_width_errors(cfg.noise, 3, 16);
    REQUIRE(total_cost(d, cfg, map, batch).regularizer == Approx(0.0).margin(1e-15));
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  const auto map = default_linbo3_map();
  int cases = 0;
  std::uint64_t seed = 1000;
  while (cases < 6) {
    const auto mode = static_cast<RegularizerMode>(cases % 3);
    Rng rng(seed);
    const int n = 2 + static_cast<int>(rng.uniform(0.0, 9.0));
    const auto cfg = gradient_check_config(mode, n, seed);
    const Design d = random_design(rng, n);
    const double nominal = gate_fidelity(
        cfg.gate.unitary(),
        composite_unitary(d, nominal_coefficients(d, map)));
    ++seed;
    if (nominal < 0.1) continue;  // keep |Tr| away from the kink
    ++cases;

    const auto batch = sample_width_errors(cfg.noise, n, 32);
    const auto grad = cost_gradient(d, cfg, map, batch);

    double gmax = 0.0;
    for (double g : grad) gmax = std::max(gmax, std::abs(g));
    const double floor = 1e-6 * gmax;

    Design probe = d;
    for (int i = 0; i < n; ++i) {
      for (int p = 0; p < 3; ++p) {
        double* field = (p == 0)   ? &probe.segments[i].width0_nm
                        : (p == 1) ? &probe.segments[i].width1_nm
                                   : &probe.segments[i].length_um;
        const double scale = (p == 2) ? 10.0 : 600.0;
        const double h = 1e-4 * scale;
        const double saved = *field;
        *field = saved + h;
        const double up = total_cost(probe, cfg, map, batch).total;
        *field = saved - h;
        const double dn = total_cost(probe, cfg, map, batch).total;
        *field = saved;
        const double fd = (up - dn) / (2.0 * h);
        REQUIRE(rel_error(grad[p * n + i], fd, floor) < 1e-5);
      }
    }
  }
}

TEST_CASE("gradient of an idle segment length is zero") {
  // kappa = delta = 0 through a table with all-zero coefficients.
  CouplingTable t;
  t.w0_grid_nm = {500.0, 850.0};
  t.w1_grid_nm = {500.0, 850.0};
  t.nodes.assign(4, SegmentCoefficients{0.0, 0.0, 2.0, 2.0});
  const TableMap map(t);

  auto cfg = gradient_check_config(RegularizerMode::baseline, 1, 3);
  cfg.gate.name = "I";
  Design d;
  d.segments = {{600.0, 600.0, 10.0}};
  const auto batch = sample_width_errors(cfg.noise, 1, 8);
  const auto grad = cost_gradient(d, cfg, map, batch);
  REQUIRE(grad[2] == Approx(0.0).margin(1e-12));
}

TEST_CASE("feasibility filter") {
  OptimizeConfig cfg;
  cfg.n_segments = 3;

  Design good;
  good.segments = {{500.0, 850.0, 1.0}, {600.0, 700.0, 5.0},
                   {620.0, 640.0, 2.0}};
  REQUIRE(feasibility_filter(good, cfg).feasible);

  SECTION("short segment is rejected with a min-length reason") {
    Design d = good;
    d.segments[2].length_um = 0.5;
    const auto v = feasibility_filter(d, cfg);
    REQUIRE_FALSE(v.feasible);
    REQUIRE(v.reasons.size() == 1);
    REQUIRE_THAT(v.reasons[0], Catch::Matchers::ContainsSubstring("below minimum"));
  }

  SECTION("width outside the range is rejected") {
    Design d = good;
    d.segments[0].width1_nm = 851.0;
    const auto v = feasibility_filter(d, cfg);
    REQUIRE_FALSE(v.feasible);
    REQUIRE_THAT(v.reasons[0], Catch::Matchers::ContainsSubstring("outside"));
  }

  SECTION("segment count cap") {
    Design d;
    for (int i = 0; i < 201; ++i) d.segments.push_back({600.0, 600.0, 2.0});
    const auto v = feasibility_filter(d, cfg);
    REQUIRE_FALSE(v.feasible);
  }
}

TEST_CASE("quantize") {
  Design d;
  d.segments = {{613.0, 600.0, 10.0}, {610.0, 607.3, 4.5}};
  const auto q = quantize(d, 20.0);
  REQUIRE(q.segments[0].width0_nm == 620.0);  // nearest
  REQUIRE(q.segments[0].width1_nm == 600.0);  // exact multiple unchanged
  REQUIRE(q.segments[1].width0_nm == 620.0);  // tie rounds up
  REQUIRE(q.segments[1].width1_nm == 600.0);
  REQUIRE(q.segments[0].length_um == 10.0);   // lengths untouched
  REQUIRE(q.segments[1].length_um == 4.5);
  REQUIRE_THROWS_AS(quantize(d, 0.0), std::invalid_argument);
}

TEST_CASE("optimize: small deterministic run") {
  const auto map = default_linbo3_map();
  OptimizeConfig cfg;
  cfg.gate.name = "X";
  cfg.n_segments = 1;
  cfg.noise.sigma_nm = 0.0;
  cfg.batch_size = 4;
  cfg.epochs = 200;
  cfg.restarts = 4;
  cfg.n_eval_samples = 100;
  cfg.seed = 7;

  const auto result = optimize(cfg, map);
  REQUIRE(result.verdict.feasible);
  REQUIRE(result.trace.size() == 200);

  SECTION("validation cost does not increase over training") {
    REQUIRE(result.validation_cost_final <= result.validation_cost_initial);
  }

  SECTION("reaches a high-fidelity single-segment X design") {
    REQUIRE(result.report.fidelity.mean > 0.999);
  }

  SECTION("bitwise deterministic, independent of the job count") {
    const auto again = optimize(cfg, map, 2);
    REQUIRE(design_to_json(result.design).dump() ==
            design_to_json(again.design).dump());
    REQUIRE(report_to_json(result.report).dump() ==
            report_to_json(again.report).dump());
  }

  SECTION("accepted designs satisfy the filter by construction") {
    const auto v = feasibility_filter(result.design, cfg);
    REQUIRE(v.feasible);
  }
}

TEST_CASE("optimize: all restarts infeasible raises with the best candidate") {
  const auto map = default_linbo3_map();
  OptimizeConfig cfg;
  cfg.gate.name = "X";
  cfg.n_segments = 2;
  cfg.noise.sigma_nm = 0.0;
  cfg.batch_size = 2;
  cfg.epochs = 2;
  cfg.restarts = 2;
  cfg.n_eval_samples = 10;
  cfg.min_segment_length_um = 1e6;  // unattainable
  cfg.seed = 9;

  try {
    optimize(cfg, map);
    FAIL("expected AllRestartsInfeasibleError");
  } catch (const AllRestartsInfeasibleError& e) {
    REQUIRE_FALSE(e.best_candidate.verdict.feasible);
    REQUIRE_FALSE(e.best_candidate.verdict.reasons.empty());
    REQUIRE(e.best_candidate.design.size() == 2);
  }
}
