// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mechlab/density.hpp"
#include "mechlab/mechanism.hpp"

namespace mechlab {

/// Discretized type space: the n x n lattice of the bounding box restricted
/// to the triangle, with the probability mass of each node integrated from
/// the density over its grid cell (Voronoi rectangle clipped to the
/// triangle) and normalized to sum one. Nodes are enumerated row-major
/// (outer loop v2, inner loop v1) for determinism.
struct TypeGrid {
  Domain domain;
  int n{0};
  std::vector<std::array<double, 2>> nodes;
  std::vector<double> weights;
};

/// Build the grid for 2 <= n <= 25 (GridTooLargeError beyond the cap; the
/// LP below has ~3 m variables and m^2 rows for m ~ n^2/2 nodes).
TypeGrid make_type_grid(const Density& density, int n);

/// Optional restrictions of the mechanism class.
struct LPOptions {
  /// Fix q1 at each node to the given value (e.g. rounded to {0,1}) and
  /// optimize only q2 and the transfers.
  std::optional<std::vector<double>> fixed_q1;
  /// Force q1 = q2 at every node by merging the two columns.
  bool force_equal_q{false};
};

/// The exact LP over all IC and IR random mechanisms on the grid:
///   maximize  sum_v w(v) t(v)
///   s.t.      u(v) >= u(v') + (v - v') . q(v')   for all ordered pairs
///             u(v) >= 0,  0 <= q2(v) <= q1(v) <= 1.
/// Stored in standard form (maximize c.x + c0, A x <= b, x >= 0) with
/// variables (q1, q2, u = v.q - t) per node; the IR rows are the u >= 0
/// variable bounds.
struct LPInstance {
  TypeGrid grid;
  LPOptions options;
  int num_vars{0};
  int num_rows{0};
  /// Rows A x <= b in compressed sparse form (an IC row has at most four
  /// nonzeros); row r owns entries [row_start[r], row_start[r+1]).
  std::vector<int> row_start;
  std::vector<int> col_index;
  std::vector<double> coeff;
  std::vector<double> b;
  std::vector<double> c;
  double c0{0.0};
  /// Column of each node's variable, -1 when fixed or merged away.
  std::vector<int> col_q1, col_q2, col_u;

  size_t node_count() const { return grid.nodes.size(); }
  /// Constraint counts of the abstract instance: m(m-1) IC rows, m IR rows,
  /// 3m variable-bound rows.
  size_t ic_count() const { return node_count() * (node_count() - 1); }
  size_t ir_count() const { return node_count(); }
  size_t bound_count() const { return 3 * node_count(); }
};

LPInstance build_lp_on_grid(TypeGrid grid, const LPOptions& options = {});
LPInstance build_lp(const Density& density, int n,
                    const LPOptions& options = {});

enum class LPStatus { Optimal };

/// Primal solution, re-checked against every constraint independently of
/// the solver path.
struct LPSolution {
  LPStatus status{LPStatus::Optimal};
  double objective{0.0};
  std::vector<double> q1, q2, t;  // per node, in grid order
  double max_violation{0.0};
};

/// Dense dictionary simplex with deterministic anti-cycling pivoting
/// (largest-coefficient rule, switching to Bland's rule permanently after a
/// run of degenerate pivots). Throws SolverFailureError on stall or
/// infeasibility instead of returning an approximation.
LPSolution solve_lp(const LPInstance& instance);

/// LP optimum vs. the best deterministic mechanism on the same grid.
struct GapResult {
  double lp_value{0.0};
  double best_det_on_grid{0.0};
  double gap{0.0};
  DeterministicMechanism best_prices;
};

/// best_det_on_grid maximizes the discrete expected revenue over candidate
/// prices at node coordinates and midpoints (including bundles p2 = 0),
/// with the seller-favorable best response and the grid's node weights.
/// gap = lp_value - best_det_on_grid stays >= -1e-7 because deterministic
/// mechanisms are feasible LP points.
GapResult deterministic_gap(const Density& density, int n);

/// LP optimum along the exponentially tilted family fosd_tilt(density, theta)
/// — nondecreasing in theta when the base density satisfies the
/// single-crossing conditions.
struct MonotonicityRow {
  double theta{0.0};
  double lp_value{0.0};
};

std::vector<MonotonicityRow> monotonicity_check(const Density& density,
                                                const std::vector<double>& thetas,
                                                int n = 12);

/// Plain-text export (objective, rows, bounds) for external cross-checks.
std::string export_lp_text(const LPInstance& instance);

/// CSV dump of a solution: v1,v2,q1,q2,t.
std::string solution_csv(const TypeGrid& grid, const LPSolution& solution);

}  // namespace mechlab
