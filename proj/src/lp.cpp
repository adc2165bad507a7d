// SPDX-License-Identifier: MIT
#include "mechlab/lp.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mechlab/errors.hpp"
#include "mechlab/kernels.hpp"
#include "mechlab/quadrature.hpp"

namespace mechlab {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kRatioTie = 1e-12;
constexpr double kFeasSlack = 1e-9;
constexpr int kBlandTrigger = 1000;
constexpr std::size_t kMaxPivots = 100000;

std::string fmt_num(double x) {
  std::array<char, 40> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

/// Dense dictionary (tableau) simplex in standard form:
///   maximize c.x   s.t.  A x <= b,  x >= 0.
/// Rows 0..m-1 hold the constraints, row m the objective, row m+1 the
/// phase-1 objective. Column n is the phase-1 auxiliary variable, column
/// n+1 the right-hand side, and column n+2 a second "perturbation"
/// right-hand side: it starts as a fixed generic positive pattern, is
/// carried through every pivot like the real rhs, and serves only to break
/// ratio-test ties (the two-level lexicographic rule, equivalent to
/// resolving degeneracy as if b were nudged by an infinitesimal generic
/// vector). The reported solution reads the real rhs, so the answer itself
/// is unperturbed.
///
/// Pivoting is deterministic: largest-coefficient entering rule with ties
/// broken by variable id; minimum-ratio leaving rule with ties broken first
/// by the perturbation column, then by variable id; and a permanent switch
/// to Bland's smallest-id entering rule after kBlandTrigger consecutive
/// degenerate pivots (proven anti-cycling backstop). A stall or an unbounded
/// ray raises SolverFailureError; the solver never returns an approximate
/// answer.
class DictSimplex {
 public:
  explicit DictSimplex(const LPInstance& inst)
      : m_(inst.num_rows),
        n_(inst.num_vars),
        width_(inst.num_vars + 3),
        rhs_(inst.num_vars + 1),
        pert_(inst.num_vars + 2),
        aux_id_(inst.num_vars + inst.num_rows),
        D_(static_cast<std::size_t>(inst.num_rows + 2) * (inst.num_vars + 3),
           0.0),
        basic_(inst.num_rows),
        nonbasic_(inst.num_vars + 1) {
    if (m_ < 1 || n_ < 1) {
      throw InvalidInputError("LP instance has no rows or no variables");
    }
    for (int i = 0; i < m_; ++i) {
      double* ri = row(i);
      for (int e = inst.row_start[i]; e < inst.row_start[i + 1]; ++e) {
        ri[inst.col_index[e]] = inst.coeff[e];
      }
      ri[n_] = -1.0;  // phase-1 auxiliary column
      // Tiny negative rhs values are feasibility noise at pivot scale.
      ri[rhs_] = (inst.b[i] < 0.0 && inst.b[i] > -kPivotTol) ? 0.0 : inst.b[i];
      // Generic positive pattern (golden-ratio low-discrepancy sequence).
      double frac = (i + 1) * 0.6180339887498949;
      frac -= std::floor(frac);
      ri[pert_] = 1.0 + frac;
      basic_[i] = n_ + i;
    }
    for (int j = 0; j < n_; ++j) {
      nonbasic_[j] = j;
      row(m_)[j] = -inst.c[j];
    }
    nonbasic_[n_] = aux_id_;
    row(m_ + 1)[n_] = 1.0;  // phase-1 objective: maximize w = -x_aux
  }

  struct Result {
    double value{0.0};
    std::vector<double> x;
    std::size_t pivots{0};
  };

  Result solve() {
    int worst = -1;
    for (int i = 0; i < m_; ++i) {
      if (row(i)[rhs_] < -kPivotTol &&
          (worst == -1 || row(i)[rhs_] < row(worst)[rhs_])) {
        worst = i;
      }
    }
    if (worst >= 0) {
      pivot(worst, n_);  // enter the auxiliary variable: all rhs become >= 0
      run(m_ + 1, "phase 1");
      const double w = row(m_ + 1)[rhs_];
      if (w < -1e-7) {
        throw SolverFailureError("LP infeasible: phase 1 optimum " +
                                 fmt_num(w));
      }
      drive_out_auxiliary();
    }
    run(m_, "phase 2");
    Result res;
    res.value = row(m_)[rhs_];
    res.x.assign(n_, 0.0);
    for (int i = 0; i < m_; ++i) {
      if (basic_[i] < n_) res.x[basic_[i]] = std::max(0.0, row(i)[rhs_]);
    }
    res.pivots = pivots_;
    if (std::getenv("MECHLAB_LP_DEBUG")) {
      std::fprintf(stderr, "[lp] rows=%d vars=%d pivots=%zu\n", m_, n_,
                   pivots_);
    }
    return res;
  }

 private:
  double* row(int i) { return D_.data() + static_cast<std::size_t>(i) * width_; }
  const double* row(int i) const {
    return D_.data() + static_cast<std::size_t>(i) * width_;
  }

  void pivot(int r, int s) {
    double* rr = row(r);
    const double inv = 1.0 / rr[s];
    for (int j = 0; j < width_; ++j) rr[j] *= inv;
    rr[s] = inv;  // column s now carries the leaving variable
    for (int i = 0; i < m_ + 2; ++i) {
      if (i == r) continue;
      double* ri = row(i);
      const double f = ri[s];
      if (f == 0.0) continue;
      ri[s] = 0.0;
      kernels::axpy(-f, rr, ri, static_cast<std::size_t>(width_));
    }
    std::swap(basic_[r], nonbasic_[s]);
    ++pivots_;
  }

  int choose_entering(int obj_row, bool bland) const {
    const double* obj = row(obj_row);
    int best = -1;
    for (int j = 0; j <= n_; ++j) {
      const int id = nonbasic_[j];
      if (id == aux_id_) continue;  // the auxiliary never re-enters
      const double d = obj[j];
      if (d >= -kPivotTol) continue;
      if (best == -1) {
        best = j;
      } else if (bland) {
        if (id < nonbasic_[best]) best = j;
      } else if (d < obj[best] || (d == obj[best] && id < nonbasic_[best])) {
        best = j;
      }
    }
    return best;
  }

  /// Two-pass (Harris-style) ratio test. Pass 1 finds the minimum ratio with
  /// a small feasibility slack; pass 2 picks, among the rows inside that
  /// slack, the one with the largest pivot element — tiny pivots are what
  /// destroy a dense tableau, so numerical quality outranks exact tie order.
  /// Remaining ties fall back to the perturbation column (lexicographic
  /// degeneracy resolution) and then the smallest basic id (determinism).
  int choose_leaving(int s) const {
    double rmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m_; ++i) {
      const double a = row(i)[s];
      if (a <= kPivotTol) continue;
      rmin = std::min(rmin, (row(i)[rhs_] + kFeasSlack) / a);
    }
    if (!(rmin < std::numeric_limits<double>::infinity())) return -1;

    int best = -1;
    double best_a = 0.0;
    double best_pert = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m_; ++i) {
      const double a = row(i)[s];
      if (a <= kPivotTol) continue;
      if (row(i)[rhs_] / a > rmin) continue;
      const double pert = row(i)[pert_] / a;
      bool take = false;
      if (best == -1 || a > best_a * (1.0 + kRatioTie)) {
        take = true;  // numerically better pivot element
      } else if (a >= best_a * (1.0 - kRatioTie)) {
        if (pert < best_pert - kRatioTie) {
          take = true;  // same-size pivots: lexicographic order
        } else if (pert <= best_pert + kRatioTie && basic_[i] < basic_[best]) {
          take = true;  // full tie: smallest variable id
        }
      }
      if (take) {
        best = i;
        best_a = std::max(a, best_a);
        best_pert = pert;
      }
    }
    return best;
  }

  void run(int obj_row, const char* phase) {
    int degenerate_run = 0;
    bool bland = false;
    double last = row(obj_row)[rhs_];
    double high = last;
    for (;;) {
      const int s = choose_entering(obj_row, bland);
      if (s < 0) return;  // optimal
      const int r = choose_leaving(s);
      if (r < 0) {
        throw SolverFailureError(std::string(phase) +
                                 ": unbounded ray on variable " +
                                 std::to_string(nonbasic_[s]));
      }
      pivot(r, s);
      if (pivots_ > kMaxPivots) {
        throw SolverFailureError(std::string(phase) + ": stalled after " +
                                 std::to_string(kMaxPivots) + " pivots");
      }
      if (pivots_ % 2000 == 0 && std::getenv("MECHLAB_LP_DEBUG")) {
        std::fprintf(stderr, "[lp] %s pivots=%zu obj=%.12f bland=%d\n", phase,
                     pivots_, row(obj_row)[rhs_], bland ? 1 : 0);
      }
      const double now = row(obj_row)[rhs_];
      // Exact simplex never lowers its objective; a visible drop means the
      // dense tableau has accumulated fatal round-off. Fail loudly instead
      // of churning in a corrupted dictionary.
      if (now < high - 1e-6 * std::max(1.0, std::abs(high))) {
        throw SolverFailureError(std::string(phase) +
                                 ": numerical breakdown (objective fell from " +
                                 fmt_num(high) + " to " + fmt_num(now) + ")");
      }
      high = std::max(high, now);
      if (now > last + 1e-12) {
        degenerate_run = 0;
        last = now;
      } else if (!bland && ++degenerate_run >= kBlandTrigger) {
        bland = true;  // permanent anti-cycling mode
      }
    }
  }

  /// After phase 1 the auxiliary variable may remain basic at value zero;
  /// pivot it out on any usable column, or blank the row entirely when it
  /// has become redundant (all coefficients negligible).
  void drive_out_auxiliary() {
    for (int i = 0; i < m_; ++i) {
      if (basic_[i] != aux_id_) continue;
      int s = -1;
      for (int j = 0; j <= n_; ++j) {
        if (nonbasic_[j] == aux_id_) continue;
        if (std::abs(row(i)[j]) > kPivotTol &&
            (s == -1 || nonbasic_[j] < nonbasic_[s])) {
          s = j;
        }
      }
      if (s >= 0) {
        pivot(i, s);
      } else {
        double* ri = row(i);
        std::fill(ri, ri + width_, 0.0);
      }
      return;
    }
  }

  int m_, n_, width_, rhs_, pert_, aux_id_;
  std::vector<double> D_;
  std::vector<int> basic_, nonbasic_;
  std::size_t pivots_{0};
};

std::vector<double> sorted_unique(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end(),
                       [](double x, double y) {
                         return std::abs(x - y) <= 1e-12;
                       }),
           xs.end());
  return xs;
}

std::vector<double> with_midpoints(const std::vector<double>& xs) {
  std::vector<double> out = xs;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    out.push_back(0.5 * (xs[i] + xs[i + 1]));
  }
  return sorted_unique(std::move(out));
}

/// Row names in exactly the order build_lp_on_grid emits the rows.
std::vector<std::string> row_names(const LPInstance& inst) {
  const std::size_t m = inst.node_count();
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(inst.num_rows));
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t l = 0; l < m; ++l) {
      if (l == k) continue;
      names.push_back("ic_" + std::to_string(k) + "_" + std::to_string(l));
    }
  }
  for (std::size_t k = 0; k < m; ++k) {
    if (inst.col_q1[k] >= 0) names.push_back("cap_" + std::to_string(k));
  }
  for (std::size_t k = 0; k < m; ++k) {
    if (inst.col_q2[k] == inst.col_q1[k]) continue;
    names.push_back("ord_" + std::to_string(k));
  }
  return names;
}

}  // namespace

TypeGrid make_type_grid(const Density& density, int n) {
  if (n < 2 || n > 25) {
    throw GridTooLargeError("grid resolution must be between 2 and 25, got " +
                            std::to_string(n));
  }
  const Domain dom = density.domain();
  TypeGrid grid;
  grid.domain = dom;
  grid.n = n;
  const double v1m = dom.v1_max();
  const double v2m = dom.v2_max();
  const double h1 = v1m / (n - 1.0);
  const double h2 = v2m / (n - 1.0);
  const bool dmv = dom.orientation == Orientation::DMV;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      // On the lattice the support test v2 <= a*v1 (resp. v1 <= a*v2)
      // reduces to an exact index comparison, which keeps the diagonal
      // nodes in regardless of rounding in the coordinates.
      if (dmv ? (j > i) : (i > j)) continue;
      const double x = v1m * i / (n - 1.0);
      const double y = v2m * j / (n - 1.0);
      const double cx0 = std::max(0.0, x - 0.5 * h1);
      const double cx1 = std::min(v1m, x + 0.5 * h1);
      const double cy0 = std::max(0.0, y - 0.5 * h2);
      const double cy1 = std::min(v2m, y + 0.5 * h2);
      const double w = box_mass(density, cx0, cx1, cy0, cy1, 1e-11);
      grid.nodes.push_back({x, y});
      grid.weights.push_back(std::max(0.0, w));
    }
  }
  double total = 0.0;
  for (double w : grid.weights) total += w;
  if (!(total > 0.0)) {
    throw InvalidInputError("density mass vanished on the type grid");
  }
  for (double& w : grid.weights) w /= total;
  return grid;
}

LPInstance build_lp_on_grid(TypeGrid grid, const LPOptions& options) {
  const std::size_t m = grid.nodes.size();
  if (m == 0) throw InvalidInputError("type grid has no nodes");
  if (grid.weights.size() != m) {
    throw InvalidInputError("type grid weight count does not match nodes");
  }
  if (options.fixed_q1 && options.force_equal_q) {
    throw InvalidInputError("fixed_q1 and force_equal_q are exclusive");
  }
  if (options.fixed_q1) {
    if (options.fixed_q1->size() != m) {
      throw InvalidInputError("fixed_q1 must give one value per node");
    }
    for (double v : *options.fixed_q1) {
      if (!(v >= 0.0 && v <= 1.0 + 1e-12)) {
        throw InvalidInputError("fixed_q1 values must lie in [0, 1]");
      }
    }
  }

  LPInstance inst;
  inst.grid = std::move(grid);
  inst.options = options;
  inst.col_q1.assign(m, -1);
  inst.col_q2.assign(m, -1);
  inst.col_u.assign(m, -1);
  int nv = 0;
  for (std::size_t k = 0; k < m; ++k) {
    if (options.force_equal_q) {
      inst.col_q1[k] = nv;
      inst.col_q2[k] = nv;  // shared column
      ++nv;
    } else if (options.fixed_q1) {
      inst.col_q2[k] = nv++;
    } else {
      inst.col_q1[k] = nv++;
      inst.col_q2[k] = nv++;
    }
    inst.col_u[k] = nv++;
  }
  inst.num_vars = nv;

  const auto& nodes = inst.grid.nodes;
  const auto& weights = inst.grid.weights;
  const std::vector<double>* fixed =
      options.fixed_q1 ? &*options.fixed_q1 : nullptr;

  inst.row_start.push_back(0);
  auto begin_idx = [&]() { return inst.col_index.size(); };
  auto add_entry = [&](std::size_t from, int col, double v) {
    if (col < 0 || v == 0.0) return;
    // Merge with an earlier coefficient of the same row (merged q columns).
    for (std::size_t e = from; e < inst.col_index.size(); ++e) {
      if (inst.col_index[e] == col) {
        inst.coeff[e] += v;
        return;
      }
    }
    inst.col_index.push_back(col);
    inst.coeff.push_back(v);
  };
  auto end_row = [&](double rhs) {
    inst.b.push_back(rhs);
    inst.row_start.push_back(static_cast<int>(inst.col_index.size()));
  };

  // IC rows: u(k) >= u(l) + (v_k - v_l) . q(l) for every ordered pair.
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t l = 0; l < m; ++l) {
      if (l == k) continue;
      const double d1 = nodes[k][0] - nodes[l][0];
      const double d2 = nodes[k][1] - nodes[l][1];
      const std::size_t from = begin_idx();
      double rhs = 0.0;
      if (inst.col_q1[l] >= 0) {
        add_entry(from, inst.col_q1[l], d1);
      } else {
        rhs -= d1 * (*fixed)[l];
      }
      add_entry(from, inst.col_q2[l], d2);
      add_entry(from, inst.col_u[l], 1.0);
      add_entry(from, inst.col_u[k], -1.0);
      end_row(rhs);
    }
  }
  // Capacity rows q1 <= 1 (on the merged column when q1 = q2).
  for (std::size_t k = 0; k < m; ++k) {
    if (inst.col_q1[k] < 0) continue;
    const std::size_t from = begin_idx();
    add_entry(from, inst.col_q1[k], 1.0);
    end_row(1.0);
  }
  // Ordering rows q2 <= q1 (q2 <= fixed value when q1 is pinned).
  for (std::size_t k = 0; k < m; ++k) {
    if (inst.col_q2[k] == inst.col_q1[k]) continue;  // merged: tautology
    const std::size_t from = begin_idx();
    add_entry(from, inst.col_q2[k], 1.0);
    if (inst.col_q1[k] >= 0) {
      add_entry(from, inst.col_q1[k], -1.0);
      end_row(0.0);
    } else {
      end_row((*fixed)[k]);
    }
  }
  inst.num_rows = static_cast<int>(inst.b.size());

  // Objective: expected transfer, t = v1 q1 + v2 q2 - u per node.
  inst.c.assign(nv, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    const double w = weights[k];
    if (inst.col_q1[k] >= 0) {
      inst.c[inst.col_q1[k]] += w * nodes[k][0];
    } else {
      inst.c0 += w * nodes[k][0] * (*fixed)[k];
    }
    inst.c[inst.col_q2[k]] += w * nodes[k][1];
    inst.c[inst.col_u[k]] -= w;
  }
  return inst;
}

LPInstance build_lp(const Density& density, int n, const LPOptions& options) {
  return build_lp_on_grid(make_type_grid(density, n), options);
}

namespace {

/// Copy of the solver-facing slice of an instance, keeping only the rows
/// listed in `rows` (ascending). Bookkeeping fields stay default.
LPInstance restrict_rows(const LPInstance& inst, const std::vector<int>& rows) {
  LPInstance sub;
  sub.num_vars = inst.num_vars;
  sub.c = inst.c;
  sub.c0 = inst.c0;
  sub.row_start.push_back(0);
  for (const int i : rows) {
    for (int e = inst.row_start[i]; e < inst.row_start[i + 1]; ++e) {
      sub.col_index.push_back(inst.col_index[e]);
      sub.coeff.push_back(inst.coeff[e]);
    }
    sub.b.push_back(inst.b[i]);
    sub.row_start.push_back(static_cast<int>(sub.col_index.size()));
  }
  sub.num_rows = static_cast<int>(sub.b.size());
  return sub;
}

/// Solve by deterministic row generation. The instances built here carry
/// m(m-1) incentive rows for only ~3m variables, so almost all rows are
/// slack at the optimum; a dense tableau over the full set is both slow and
/// numerically fragile. Start from the short bound rows (plus any row that
/// is violated at the origin), solve the restricted LP, then repeatedly add
/// the most-violated remaining rows until the incumbent satisfies every row.
/// The outcome is exact for the full instance: the final iterate is optimal
/// for a relaxation and feasible for the whole row set.
DictSimplex::Result solve_by_row_generation(const LPInstance& inst) {
  std::vector<char> active(static_cast<std::size_t>(inst.num_rows), 0);
  std::vector<int> act_rows;
  for (int i = 0; i < inst.num_rows; ++i) {
    const int len = inst.row_start[i + 1] - inst.row_start[i];
    if (len <= 2 || inst.b[i] < 0.0) {
      active[i] = 1;
      act_rows.push_back(i);
    }
  }
  if (act_rows.empty()) {
    for (int i = 0; i < inst.num_rows; ++i) act_rows.push_back(i);
    std::fill(active.begin(), active.end(), 1);
  }

  const int batch = std::max(128, inst.num_vars / 2);
  constexpr int kMaxRounds = 400;
  std::vector<std::pair<double, int>> worst;  // (-violation, row)
  for (int round = 0; round < kMaxRounds; ++round) {
    DictSimplex simplex(restrict_rows(inst, act_rows));
    DictSimplex::Result res = simplex.solve();

    worst.clear();
    for (int i = 0; i < inst.num_rows; ++i) {
      if (active[i]) continue;
      double lhs = 0.0;
      for (int e = inst.row_start[i]; e < inst.row_start[i + 1]; ++e) {
        lhs += inst.coeff[e] * res.x[inst.col_index[e]];
      }
      if (lhs - inst.b[i] > kPivotTol) worst.push_back({inst.b[i] - lhs, i});
    }
    if (std::getenv("MECHLAB_LP_DEBUG")) {
      std::fprintf(stderr,
                   "[rowgen] round=%d active=%zu obj=%.12f violated=%zu "
                   "pivots=%zu\n",
                   round, act_rows.size(), res.value, worst.size(),
                   res.pivots);
    }
    if (worst.empty()) return res;

    const std::size_t take =
        std::min(worst.size(), static_cast<std::size_t>(batch));
    std::partial_sort(worst.begin(), worst.begin() + take, worst.end());
    for (std::size_t k = 0; k < take; ++k) {
      active[worst[k].second] = 1;
      act_rows.push_back(worst[k].second);
    }
    std::sort(act_rows.begin(), act_rows.end());
  }
  throw SolverFailureError("row generation failed to settle after " +
                           std::to_string(kMaxRounds) + " rounds");
}

}  // namespace

LPSolution solve_lp(const LPInstance& inst) {
  const DictSimplex::Result res = solve_by_row_generation(inst);

  const std::size_t m = inst.node_count();
  LPSolution sol;
  sol.q1.resize(m);
  sol.q2.resize(m);
  sol.t.resize(m);
  std::vector<double> u(m);
  for (std::size_t k = 0; k < m; ++k) {
    sol.q1[k] = inst.col_q1[k] >= 0 ? res.x[inst.col_q1[k]]
                                    : (*inst.options.fixed_q1)[k];
    sol.q2[k] = res.x[inst.col_q2[k]];
    u[k] = res.x[inst.col_u[k]];
    sol.t[k] = inst.grid.nodes[k][0] * sol.q1[k] +
               inst.grid.nodes[k][1] * sol.q2[k] - u[k];
  }

  // Independent re-check of every constraint class on the extracted
  // mechanism, bypassing the solver's tableau entirely.
  double viol = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    viol = std::max(viol, -u[k]);                   // IR
    viol = std::max(viol, -sol.q2[k]);              // q2 >= 0
    viol = std::max(viol, sol.q2[k] - sol.q1[k]);   // q2 <= q1
    viol = std::max(viol, sol.q1[k] - 1.0);         // q1 <= 1
    for (std::size_t l = 0; l < m; ++l) {
      if (l == k) continue;
      const double d1 = inst.grid.nodes[k][0] - inst.grid.nodes[l][0];
      const double d2 = inst.grid.nodes[k][1] - inst.grid.nodes[l][1];
      viol = std::max(viol, u[l] + d1 * sol.q1[l] + d2 * sol.q2[l] - u[k]);
    }
  }
  sol.max_violation = viol;
  if (viol > 1e-7) {
    throw SolverFailureError(
        "solution failed the independent constraint re-check: violation " +
        fmt_num(viol));
  }

  double objective = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    objective += inst.grid.weights[k] * sol.t[k];
  }
  if (std::abs(objective - (res.value + inst.c0)) >
      1e-6 * std::max(1.0, std::abs(objective))) {
    throw SolverFailureError("tableau objective drifted from the recomputed "
                             "value by " +
                             fmt_num(objective - (res.value + inst.c0)));
  }
  sol.objective = objective;
  return sol;
}

GapResult deterministic_gap(const Density& density, int n) {
  LPInstance inst = build_lp(density, n);
  const LPSolution sol = solve_lp(inst);
  const TypeGrid& grid = inst.grid;
  const std::size_t m = grid.nodes.size();

  std::vector<double> v1s, sums;
  v1s.reserve(m);
  sums.reserve(m);
  for (const auto& nd : grid.nodes) {
    v1s.push_back(nd[0]);
    sums.push_back(nd[0] + nd[1]);
  }
  // Unit price candidates: v1 coordinates and bundle totals (a pure bundle
  // with total above v1_max is the pair (p1 = total, p2 = 0)), plus all
  // midpoints. Total-price candidates additionally get a sentinel beyond
  // w_max ("never sell the second unit").
  std::vector<double> p1s = with_midpoints(sorted_unique(std::move(v1s)));
  std::vector<double> totals = with_midpoints(sorted_unique(std::move(sums)));
  p1s.insert(p1s.end(), totals.begin(), totals.end());
  p1s = sorted_unique(std::move(p1s));
  totals.insert(totals.end(), p1s.begin(), p1s.end());  // covers p2 = 0 pairs
  totals.push_back(grid.domain.w_max() + 1.0);
  totals = sorted_unique(std::move(totals));

  double best = -std::numeric_limits<double>::infinity();
  DeterministicMechanism best_prices{};
  for (const double p1 : p1s) {
    for (const double s : totals) {
      if (s < p1 - 1e-12) continue;  // needs p2 >= 0
      double rev = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const double u1 = grid.nodes[k][0] - p1;
        const double u2 = grid.nodes[k][0] + grid.nodes[k][1] - s;
        // Seller-favorable best response: on utility ties take the larger
        // transfer (s >= p1 >= 0).
        if (u2 >= u1 && u2 >= 0.0) {
          rev += grid.weights[k] * s;
        } else if (u1 >= 0.0) {
          rev += grid.weights[k] * p1;
        }
      }
      if (rev > best + 1e-15) {
        best = rev;
        best_prices = DeterministicMechanism{p1, std::max(0.0, s - p1)};
      }
    }
  }

  GapResult out;
  out.lp_value = sol.objective;
  out.best_det_on_grid = best;
  out.gap = out.lp_value - out.best_det_on_grid;
  out.best_prices = best_prices;
  return out;
}

std::vector<MonotonicityRow> monotonicity_check(
    const Density& density, const std::vector<double>& thetas, int n) {
  std::vector<MonotonicityRow> out;
  out.reserve(thetas.size());
  for (const double theta : thetas) {
    const Density tilted = fosd_tilt(density, theta);
    const LPSolution sol = solve_lp(build_lp(tilted, n));
    out.push_back({theta, sol.objective});
  }
  return out;
}

std::string export_lp_text(const LPInstance& inst) {
  const std::size_t m = inst.node_count();
  std::vector<std::string> var(inst.num_vars);
  for (std::size_t k = 0; k < m; ++k) {
    const std::string id = std::to_string(k);
    if (inst.col_q1[k] >= 0) {
      var[inst.col_q1[k]] =
          (inst.options.force_equal_q ? "q_" : "q1_") + id;
    }
    if (inst.col_q2[k] >= 0 && inst.col_q2[k] != inst.col_q1[k]) {
      var[inst.col_q2[k]] = "q2_" + id;
    }
    var[inst.col_u[k]] = "u_" + id;
  }
  auto append_term = [](std::string& s, double v, const std::string& name) {
    s += v < 0 ? " - " : " + ";
    s += fmt_num(std::abs(v));
    s += " ";
    s += name;
  };

  std::string out;
  out += "\\ discretized mechanism design LP: " + std::to_string(m) +
         " nodes, " + std::to_string(inst.num_vars) + " variables, " +
         std::to_string(inst.num_rows) + " rows\n";
  out += "\\ variables: q1_k, q2_k in [0,1], u_k = v.q - t >= 0 (IR)\n";
  out += "maximize\n obj:";
  if (inst.c0 != 0.0) out += " " + fmt_num(inst.c0) + " +";
  for (int j = 0; j < inst.num_vars; ++j) {
    if (inst.c[j] != 0.0) append_term(out, inst.c[j], var[j]);
  }
  out += "\nsubject to\n";
  const std::vector<std::string> names = row_names(inst);
  for (int r = 0; r < inst.num_rows; ++r) {
    out += " " + names[r] + ":";
    for (int e = inst.row_start[r]; e < inst.row_start[r + 1]; ++e) {
      append_term(out, inst.coeff[e], var[inst.col_index[e]]);
    }
    out += " <= " + fmt_num(inst.b[r]) + "\n";
  }
  out += "bounds\n all variables >= 0\nend\n";
  return out;
}

std::string solution_csv(const TypeGrid& grid, const LPSolution& sol) {
  const std::size_t m = grid.nodes.size();
  if (sol.q1.size() != m || sol.q2.size() != m || sol.t.size() != m) {
    throw InvalidInputError("solution does not match the grid size");
  }
  std::string out = "v1,v2,q1,q2,t\n";
  for (std::size_t k = 0; k < m; ++k) {
    out += fmt_num(grid.nodes[k][0]) + "," + fmt_num(grid.nodes[k][1]) + "," +
           fmt_num(sol.q1[k]) + "," + fmt_num(sol.q2[k]) + "," +
           fmt_num(sol.t[k]) + "\n";
  }
  return out;
}

}  // namespace mechlab
