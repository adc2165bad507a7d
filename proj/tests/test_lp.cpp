// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "mechlab/density.hpp"
#include "mechlab/errors.hpp"
#include "mechlab/lp.hpp"

using mechlab::build_lp;
using mechlab::build_lp_on_grid;
using mechlab::Density;
using mechlab::deterministic_gap;
using mechlab::Domain;
using mechlab::LPOptions;
using mechlab::make_type_grid;
using mechlab::monotonicity_check;
using mechlab::Orientation;
using mechlab::solve_lp;
using mechlab::TypeGrid;

namespace {

Density uniform1() { return Density::uniform_triangle(Orientation::DMV, 1.0); }

TypeGrid tiny_grid(std::vector<std::array<double, 2>> nodes,
                   std::vector<double> weights) {
  TypeGrid g;
  g.domain = Domain{Orientation::DMV, 1.0};
  g.n = static_cast<int>(nodes.size());
  g.nodes = std::move(nodes);
  g.weights = std::move(weights);
  return g;
}

}  // namespace

// ---------------------------------------------------------------------------
// Type grids
// ---------------------------------------------------------------------------

TEST_CASE("type grid keeps the triangle lattice and unit mass") {
  const auto grid = make_type_grid(uniform1(), 3);
  REQUIRE(grid.nodes.size() == 6);  // j <= i on a 3x3 lattice
  double mass = 0.0;
  for (const double w : grid.weights) {
    CHECK(w >= 0.0);
    mass += w;
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
  for (const auto& node : grid.nodes) {
    CHECK(node[1] <= node[0] + 1e-12);  // DMV: v2 <= a v1
  }

  // The same counting holds for a flatter triangle.
  const auto flat =
      make_type_grid(Density::uniform_triangle(Orientation::DMV, 0.5), 3);
  REQUIRE(flat.nodes.size() == 6);
  for (const auto& node : flat.nodes) {
    CHECK(node[1] <= 0.5 * node[0] + 1e-12);
  }
}

TEST_CASE("IMV type grids sit above the diagonal") {
  const auto grid = make_type_grid(Density::example3_imv(), 4);
  REQUIRE(grid.nodes.size() == 10);
  double mass = 0.0;
  for (const double w : grid.weights) mass += w;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
  for (const auto& node : grid.nodes) {
    CHECK(node[0] <= node[1] + 1e-12);  // IMV: v1 <= a v2, a = 1
  }
}

TEST_CASE("type grid rejects resolutions outside [2, 25]") {
  CHECK_THROWS_AS((void)make_type_grid(uniform1(), 1),
                  mechlab::GridTooLargeError);
  CHECK_THROWS_AS((void)make_type_grid(uniform1(), 26),
                  mechlab::GridTooLargeError);
}

TEST_CASE("LP instance counts match the abstract program") {
  const auto inst = build_lp(uniform1(), 3);
  CHECK(inst.node_count() == 6);
  CHECK(inst.ic_count() == 30);  // m (m - 1) ordered pairs
  CHECK(inst.ir_count() == 6);
  CHECK(inst.bound_count() == 18);
  CHECK(inst.num_vars == 18);  // free q1, q2, u at every node
  REQUIRE(inst.row_start.size() == static_cast<size_t>(inst.num_rows) + 1);
  CHECK(inst.col_index.size() == inst.coeff.size());
  CHECK(inst.b.size() == static_cast<size_t>(inst.num_rows));
  CHECK(inst.c.size() == static_cast<size_t>(inst.num_vars));
  for (size_t k = 0; k < inst.node_count(); ++k) {
    CHECK(inst.col_q1[k] >= 0);
    CHECK(inst.col_q2[k] >= 0);
    CHECK(inst.col_u[k] >= 0);
  }
}

// ---------------------------------------------------------------------------
// Tiny hand-solved programs
// ---------------------------------------------------------------------------

TEST_CASE("a single type pays its full surplus") {
  const auto inst = build_lp_on_grid(tiny_grid({{0.7, 0.3}}, {1.0}));
  const auto sol = solve_lp(inst);
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE(sol.q1.size() == 1);
  CHECK(sol.q1[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sol.q2[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sol.t[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sol.max_violation <= 1e-7);
}

TEST_CASE("the two-type screening program tops out at 1") {
  // Types (0.5, 0.5) and (1, 1) with equal mass: selling to both at total 1
  // and selling only to the top at total 2 both earn exactly 1.
  const auto inst =
      build_lp_on_grid(tiny_grid({{0.5, 0.5}, {1.0, 1.0}}, {0.5, 0.5}));
  const auto sol = solve_lp(inst);
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("contradictory q1 pins are reported as infeasible") {
  // Shutting out the top type while giving the bottom type the first unit
  // contradicts incentive compatibility.
  LPOptions opts;
  opts.fixed_q1 = std::vector<double>{1.0, 0.0};
  const auto inst =
      build_lp_on_grid(tiny_grid({{0.5, 0.5}, {1.0, 1.0}}, {0.5, 0.5}), opts);
  CHECK_THROWS_AS((void)solve_lp(inst), mechlab::SolverFailureError);
}

// ---------------------------------------------------------------------------
// Full-size programs
// ---------------------------------------------------------------------------

TEST_CASE("the n = 12 LP lands near the continuum optimum") {
  const auto gap = deterministic_gap(uniform1(), 12);
  CHECK(std::abs(gap.lp_value - 0.549196) <= 0.02);
  CHECK(gap.gap >= -1e-7);
  CHECK(gap.best_det_on_grid <= gap.lp_value + 1e-7);
  CHECK(gap.best_prices.p1 >= 0.0);
  CHECK(gap.best_prices.p2 >= 0.0);
  // The discrete price search should also be near the continuum optimum.
  CHECK(gap.best_prices.p1 == doctest::Approx(2.0 / 3.0).epsilon(0.1));
}

TEST_CASE("rounding q1 to {0,1} and re-solving is revenue-neutral") {
  const auto inst = build_lp(uniform1(), 12);
  const auto sol = solve_lp(inst);

  LPOptions opts;
  std::vector<double> rounded(sol.q1.size());
  for (size_t k = 0; k < sol.q1.size(); ++k) {
    rounded[k] = sol.q1[k] >= 0.5 ? 1.0 : 0.0;
  }
  opts.fixed_q1 = std::move(rounded);
  const auto pinned = build_lp(uniform1(), 12, opts);
  for (size_t k = 0; k < pinned.node_count(); ++k) {
    CHECK(pinned.col_q1[k] < 0);  // fixed columns are eliminated
  }
  const auto resolved = solve_lp(pinned);
  CHECK(resolved.objective >= sol.objective - 1e-6);
}

TEST_CASE("forcing q1 = q2 is free on the example IMV density") {
  const Density d = Density::example3_imv();
  const auto free_sol = solve_lp(build_lp(d, 8));
  LPOptions opts;
  opts.force_equal_q = true;
  const auto merged_sol = solve_lp(build_lp(d, 8, opts));
  for (size_t k = 0; k < merged_sol.q1.size(); ++k) {
    CHECK(merged_sol.q1[k] == merged_sol.q2[k]);
  }
  CHECK(std::abs(free_sol.objective - merged_sol.objective) <= 1e-7);
}

TEST_CASE("the LP value is monotone along the tilted family") {
  const std::vector<double> thetas = {0.0, 0.5, 1.0};
  const auto rows = monotonicity_check(uniform1(), thetas, 8);
  REQUIRE(rows.size() == 3);
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].theta == doctest::Approx(thetas[i]).epsilon(1e-15));
  }
  CHECK(rows[1].lp_value >= rows[0].lp_value - 1e-7);
  CHECK(rows[2].lp_value >= rows[1].lp_value - 1e-7);

  // The whole pipeline is deterministic: a second run is bit-identical.
  const auto again = monotonicity_check(uniform1(), thetas, 8);
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].lp_value == again[i].lp_value);
  }
}

// ---------------------------------------------------------------------------
// Exports
// ---------------------------------------------------------------------------

TEST_CASE("text export is deterministic and self-consistent") {
  const auto first = build_lp(uniform1(), 3);
  const auto second = build_lp(uniform1(), 3);
  const std::string text1 = mechlab::export_lp_text(first);
  const std::string text2 = mechlab::export_lp_text(second);
  CHECK(!text1.empty());
  CHECK(text1 == text2);
}

TEST_CASE("solution CSV lists every node with its allocation and transfer") {
  const auto inst = build_lp(uniform1(), 3);
  const auto sol = solve_lp(inst);
  const std::string csv = mechlab::solution_csv(inst.grid, sol);

  std::istringstream in(csv);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "v1,v2,q1,q2,t");
  size_t rows = 0;
  while (std::getline(in, line)) {
    REQUIRE(!line.empty());
    std::istringstream cells(line);
    std::string cell;
    std::vector<double> parsed;
    while (std::getline(cells, cell, ',')) {
      parsed.push_back(std::stod(cell));
    }
    REQUIRE(parsed.size() == 5);
    CHECK(parsed[0] == doctest::Approx(inst.grid.nodes[rows][0]).epsilon(1e-12));
    CHECK(parsed[1] == doctest::Approx(inst.grid.nodes[rows][1]).epsilon(1e-12));
    ++rows;
  }
  CHECK(rows == inst.node_count());
}
