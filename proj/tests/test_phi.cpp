// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "mechlab/density.hpp"
#include "mechlab/errors.hpp"
#include "mechlab/phi.hpp"

using mechlab::BaseDensity;
using mechlab::Density;
using mechlab::Orientation;
using mechlab::PhiEvaluator;
using mechlab::PhiMode;
using mechlab::Verdict;

namespace {

std::array<double, 2> interior_dmv_point(double a, std::mt19937& rng,
                                         double margin) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    const double v1 = unit(rng);
    const double v2 = unit(rng) * a;
    if (v2 > margin && v1 < 1.0 - margin && v2 < a * v1 - margin) {
      return {v1, v2};
    }
  }
}

void check_closed_form_vs_quadrature(const Density& d, unsigned seed,
                                     double margin = 0.02) {
  REQUIRE(d.closed_form_phi());
  const PhiEvaluator closed(d, PhiMode::ClosedForm);
  const PhiEvaluator quadrature(d, PhiMode::Quadrature);
  std::mt19937 rng(seed);
  for (int k = 0; k < 200; ++k) {
    const auto [v1, v2] = interior_dmv_point(d.domain().a, rng, margin);
    CAPTURE(v1);
    CAPTURE(v2);
    CHECK(std::abs(closed(v1, v2) - quadrature(v1, v2)) < 1e-7);
  }
}

/// Steeply decreasing-in-v1 tabulated density on the unit DMV triangle:
/// f ~ e^(-6 v1), so 3f + v.grad f = f(3 - 6 v1) < 0 for v1 > 1/2.
Density steep_grid_density() {
  const int n = 81;
  // Continuous-density normalizer: int over the triangle of e^(-6 v1) is
  // (1 - 7 e^-6)/36; the interpolant's own mass differs by O(h^2), which
  // Density::grid absorbs by renormalizing.
  const double z = (1.0 - 7.0 * std::exp(-6.0)) / 36.0;
  std::vector<double> values(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double v1 = i / (n - 1.0);
      values[j * n + i] = std::exp(-6.0 * v1) / z;
    }
  }
  return Density::grid(mechlab::Domain{Orientation::DMV, 1.0}, n, n,
                       std::move(values));
}

/// Base density with elasticity -4x, dipping below the -3/2 bound of the
/// ordered-model SC-H condition: h(x) ~ e^(-4x).
BaseDensity steep_base_density() {
  const double norm = 4.0 / (1.0 - std::exp(-4.0));
  return BaseDensity::custom(
      [norm](double x) { return norm * std::exp(-4.0 * x); },
      [](double x) { return (1.0 - std::exp(-4.0 * x)) / (1.0 - std::exp(-4.0)); },
      [norm](double x) { return -4.0 * norm * std::exp(-4.0 * x); });
}

}  // namespace

// ---------------------------------------------------------------------------
// Point values and closed forms
// ---------------------------------------------------------------------------

TEST_CASE("phi of the uniform triangle") {
  const PhiEvaluator ev(Density::uniform_triangle(Orientation::DMV, 1.0));
  CHECK(ev.mode() == PhiMode::ClosedForm);
  CHECK(mechlab::phi(ev, 2.0 / 3.0, 0.1) == doctest::Approx(0.0));
  CHECK(mechlab::phi(ev, 1.0, 0.4) == doctest::Approx(2.0));
}

TEST_CASE("phi of ordered-decreasing with uniform g") {
  const PhiEvaluator ev(
      Density::ordered_decreasing(BaseDensity::uniform_power(1.0), 1.0));
  CHECK(ev(0.5, 0.2) == doctest::Approx(-1.0));
}

TEST_CASE("phi at v1 = 1 equals the edge density") {
  const auto d =
      Density::ordered_decreasing(BaseDensity::truncated_exponential(1.0), 0.5);
  const PhiEvaluator quadrature(d, PhiMode::Quadrature);
  // The integral term is empty at v1 = 1.
  CHECK(quadrature(1.0, 0.3) == doctest::Approx(d.f(1.0, 0.3)).epsilon(1e-10));
}

TEST_CASE("closed forms agree with nested quadrature") {
  check_closed_form_vs_quadrature(
      Density::uniform_triangle(Orientation::DMV, 0.5), 31);
  check_closed_form_vs_quadrature(
      Density::ordered_decreasing(BaseDensity::truncated_exponential(1.0), 1.0),
      32);
  check_closed_form_vs_quadrature(
      Density::conditional_decreasing(BaseDensity::uniform_power(2.0),
                                      BaseDensity::truncated_exponential(1.0)),
      33, 0.05);
  check_closed_form_vs_quadrature(
      Density::scale_invariant(BaseDensity::truncated_exponential(1.5)), 34,
      0.05);
}

TEST_CASE("scale-invariant phi does not depend on v2") {
  const auto d =
      Density::scale_invariant(BaseDensity::truncated_exponential(1.0));
  const PhiEvaluator quadrature(d, PhiMode::Quadrature);
  for (const double v1 : {0.3, 0.6, 0.9}) {
    const double ref = quadrature(v1, 0.05);
    for (const double v2 : {0.15, 0.25}) {
      CHECK(std::abs(quadrature(v1, v2) - ref) < 1e-8);
    }
  }
  // Along the diagonal, phi is increasing for an increasing g.
  const PhiEvaluator closed(d);
  double prev = closed(0.05, 0.04);
  for (int i = 2; i <= 19; ++i) {
    const double y = i / 20.0;
    const double cur = closed(y, y - 0.01);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("phi evaluation rejects the IMV orientation") {
  const PhiEvaluator ev(Density::example3_imv());
  CHECK_THROWS_AS((void)ev(0.5, 0.7), mechlab::WrongOrientationError);
  CHECK_THROWS_AS((void)mechlab::check_scv(ev, 51),
                  mechlab::WrongOrientationError);
  CHECK_THROWS_AS((void)mechlab::check_scd(ev, 51),
                  mechlab::WrongOrientationError);
  CHECK_THROWS_AS((void)mechlab::check_sc(ev, 51),
                  mechlab::WrongOrientationError);
}

// ---------------------------------------------------------------------------
// Single-crossing scans
// ---------------------------------------------------------------------------

TEST_CASE("single crossing holds for the uniform triangle") {
  const PhiEvaluator ev(Density::uniform_triangle(Orientation::DMV, 1.0));
  const auto report = mechlab::check_sc(ev);
  CHECK(report.sch == Verdict::Holds);
  CHECK(report.scv == Verdict::Holds);
  CHECK(report.scd == Verdict::Holds);
  CHECK(report.witnesses.empty());
  CHECK(report.grid_resolution == 401);
  CHECK(report.tolerance == doctest::Approx(1e-10));
}

TEST_CASE("SC-H holds for the IMV example density") {
  // 3f + v.grad f = (12/11)(6 - 5 v1^2) > 0 on the whole triangle.
  const PhiEvaluator ev(Density::example3_imv());
  const auto r = mechlab::check_sch(ev);
  CHECK(r.verdict == Verdict::Holds);
  CHECK(r.worst == 0.0);
}

TEST_CASE("a steeply decreasing tabulated density fails SC-H with witnesses") {
  const auto d = steep_grid_density();
  const PhiEvaluator ev(d);
  CHECK(ev.mode() == PhiMode::Quadrature);

  const auto fails = mechlab::check_sch(ev, 101, 0.01);
  CHECK(fails.verdict == Verdict::Fails);
  // Worst violation of 3f + v.grad f ~ max (6v1-3) f(v1) ~ 0.67.
  CHECK(fails.worst > 0.3);
  REQUIRE(!fails.witnesses.empty());
  for (const auto& w : fails.witnesses) {
    CHECK(w.condition == "sch");
    CHECK(!w.points.empty());
    CHECK(w.points.size() == w.values.size());
    // Witnesses must point at actual violations: v1 beyond the sign flip.
    CHECK(w.points.front()[0] > 0.5 - 1e-9);
  }

  // With a coarse tolerance the same violations fall inside the 10x band.
  const auto inconclusive = mechlab::check_sch(ev, 101, 0.1);
  CHECK(inconclusive.verdict == Verdict::Inconclusive);
}

// ---------------------------------------------------------------------------
// Ordered and conditional model bridges
// ---------------------------------------------------------------------------

TEST_CASE("ordered virtual utilities for uniform g") {
  const auto g = BaseDensity::uniform_power(1.0);
  // W = 3 v1 - 2: zero at 2/3, and W(1, v2) = 1.
  CHECK(mechlab::ordered_w(2.0 / 3.0, 0.3, g, 1.0) == doctest::Approx(0.0));
  CHECK(mechlab::ordered_w(0.5, 0.2, g, 1.0) == doctest::Approx(-0.5));
  CHECK(mechlab::ordered_w(1.0, 0.8, g, 1.0) == doctest::Approx(1.0));
  // W_min = (3 v2 - 1)/2: zero at 1/3.
  CHECK(mechlab::ordered_wmin(1.0 / 3.0, g, 1.0) == doctest::Approx(0.0));
  CHECK(mechlab::ordered_wmin(0.0, g, 1.0) == doctest::Approx(-0.5));
  CHECK(mechlab::ordered_wmin(1.0, g, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("ordered-model conditions hold for the built-in bases") {
  for (const double a : {0.5, 1.0}) {
    const auto power = mechlab::check_ordered_conditions(
        BaseDensity::uniform_power(2.0), a);
    CHECK(power.sch == Verdict::Holds);
    CHECK(power.scv == Verdict::Holds);
    CHECK(power.scd == Verdict::Holds);
    const auto exponential = mechlab::check_ordered_conditions(
        BaseDensity::truncated_exponential(1.0), a);
    CHECK(exponential.sch == Verdict::Holds);
    CHECK(exponential.scv == Verdict::Holds);
    CHECK(exponential.scd == Verdict::Holds);
  }
}

TEST_CASE("ordered-model conditions agree with the joint-density scan") {
  std::vector<BaseDensity> gs;
  gs.push_back(BaseDensity::uniform_power(2.0));
  gs.push_back(BaseDensity::truncated_exponential(1.0));
  gs.push_back(steep_base_density());
  for (const auto& g : gs) {
    for (const double a : {0.5, 1.0}) {
      const auto model = mechlab::check_ordered_conditions(g, a);
      const PhiEvaluator ev(Density::ordered_decreasing(g, a));
      const auto joint = mechlab::check_sc(ev, 401);
      CAPTURE(a);
      CHECK(model.sch == joint.sch);
      CHECK(model.scv == joint.scv);
      CHECK(model.scd == joint.scd);
    }
  }
}

TEST_CASE("the steep base density fails the ordered SC-H bound") {
  const auto report =
      mechlab::check_ordered_conditions(steep_base_density(), 1.0);
  CHECK(report.sch == Verdict::Fails);
  bool found_sch_witness = false;
  for (const auto& w : report.witnesses) {
    found_sch_witness = found_sch_witness || w.condition == "sch";
  }
  CHECK(found_sch_witness);
}

TEST_CASE("conditional-model conditions hold for uniform bases") {
  const auto report = mechlab::check_conditional_conditions(
      BaseDensity::uniform_power(1.0), BaseDensity::uniform_power(1.0));
  CHECK(report.sch == Verdict::Holds);
  CHECK(report.scv == Verdict::Holds);
  CHECK(report.scd == Verdict::Holds);

  const PhiEvaluator ev(Density::conditional_decreasing(
      BaseDensity::uniform_power(1.0), BaseDensity::uniform_power(1.0)));
  const auto joint = mechlab::check_sc(ev, 401);
  CHECK(joint.sch == Verdict::Holds);
  CHECK(joint.scv == Verdict::Holds);
  CHECK(joint.scd == Verdict::Holds);
}

// ---------------------------------------------------------------------------
// Conditional share cdf
// ---------------------------------------------------------------------------

TEST_CASE("conditional share cdf on the IMV example density") {
  const auto d = Density::example3_imv();
  // Closed form (96 - w^2) / (8 (24 - w^2)) at c = 1/2.
  for (const double w : {0.25, 0.5, 1.0}) {
    const double expect = (96.0 - w * w) / (8.0 * (24.0 - w * w));
    CHECK(mechlab::conditional_share_cdf(d, 0.5, w) ==
          doctest::Approx(expect).epsilon(1e-6));
  }
  CHECK(mechlab::conditional_share_cdf(d, 1.0, 0.7) == doctest::Approx(1.0));
}

TEST_CASE("conditional share cdf on the uniform triangle") {
  const auto d = Density::uniform_triangle(Orientation::DMV, 1.0);
  CHECK(mechlab::conditional_share_cdf(d, 2.0 / 3.0, 0.5) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(mechlab::conditional_share_cdf(d, 1.0, 0.5) == doctest::Approx(1.0));
}

TEST_CASE("conditional share cdf input validation") {
  const auto d = Density::uniform_triangle(Orientation::DMV, 1.0);
  CHECK_THROWS_AS((void)mechlab::conditional_share_cdf(d, 1.5, 0.5),
                  mechlab::InvalidInputError);
  CHECK_THROWS_AS((void)mechlab::conditional_share_cdf(d, -0.1, 0.5),
                  mechlab::InvalidInputError);
  CHECK_THROWS_AS((void)mechlab::conditional_share_cdf(d, 0.5, 2.5),
                  mechlab::InvalidInputError);
  CHECK_THROWS_AS((void)mechlab::conditional_share_cdf(d, 0.5, 0.0),
                  mechlab::ZeroDensitySliceError);
}
