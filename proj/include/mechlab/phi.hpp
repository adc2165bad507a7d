// SPDX-License-Identifier: MIT
#pragma once

#include <string>
#include <vector>

#include "mechlab/density.hpp"

namespace mechlab {

/// The guidepost function
///   phi(v1, v2) = f(1, v2) - Int_{v1}^{1} [3 f(x, v2) + (x, v2).grad f(x, v2)] dx
/// on the DMV triangle. Its sign directs revenue-improving payoff
/// perturbations; phi(1, v2) = f(1, v2) exactly (empty integral) and phi is
/// continuous whenever f is continuously differentiable.
///
/// Closed forms (used when available, mode ClosedForm):
///   UniformTriangle        phi = (6 v1 - 4) / a
///   OrderedDecreasing(g)   phi = (2/a) g(v1) g(v2/a) W(v1, v2)
///   ConditionalDecreasing  phi = [g2(v2)/(1-G1(v2))] *
///                                [v1 g1(v1) - (1-G1(v1))(2 + gamma(v2))]
///   ScaleInvariant(g)      phi = g(v1) - 2 Int_{v1}^1 g(x)/x dx (v2-free)
enum class PhiMode { ClosedForm, Quadrature };

class PhiEvaluator {
 public:
  /// Picks ClosedForm when the density supports it, Quadrature otherwise.
  explicit PhiEvaluator(Density density);
  PhiEvaluator(Density density, PhiMode mode);

  const Density& density() const { return density_; }
  PhiMode mode() const { return mode_; }

  /// phi(v1, v2) with 0 <= v2 <= a and v2/a <= v1 <= 1. Throws
  /// WrongOrientationError for IMV densities.
  double operator()(double v1, double v2) const;

 private:
  Density density_;
  PhiMode mode_;
};

/// Free-function spelling of the evaluator call.
double phi(const PhiEvaluator& ev, double v1, double v2);

enum class Verdict { Holds, Fails, Inconclusive };

std::string to_string(Verdict v);

/// Concrete evidence for a failed condition: the grid points involved and
/// the values observed there.
struct Witness {
  std::string condition;
  std::vector<std::array<double, 2>> points;
  std::vector<double> values;
  std::string note;
};

struct CheckResult {
  Verdict verdict{Verdict::Holds};
  std::vector<Witness> witnesses;
  /// Largest violation magnitude observed (0 when the condition holds).
  double worst{0.0};
};

/// Verdicts for the three single-crossing conditions together with the
/// witnesses of every violation found.
///
/// The grid checks refute on finite evidence and support on exhaustion: a
/// Fails verdict is sound (it carries explicit witnesses), a Holds verdict is
/// evidence at the stated resolution, not a proof — in particular violations
/// on measure-zero sets are invisible to any grid.
struct SCReport {
  Verdict sch{Verdict::Holds};
  Verdict scv{Verdict::Holds};
  Verdict scd{Verdict::Holds};
  std::vector<Witness> witnesses;
  int grid_resolution{401};
  double tolerance{1e-10};
};

/// SC-H: phi increasing in v1, equivalently 3f + v.grad f >= 0 almost
/// everywhere. Checked pointwise on an n x n interior grid; works for both
/// orientations (the criterion only involves f).
CheckResult check_sch(const PhiEvaluator& ev, int grid_n = 401,
                      double tol = 1e-10);

/// SC-V: for every v1, phi(v1, .) crosses zero at most once from above in
/// v2: once below -tol it must never again exceed +tol. DMV only.
CheckResult check_scv(const PhiEvaluator& ev, int grid_n = 401,
                      double tol = 1e-10);

/// SC-D: I(v2) = Int_{v2}^{a} phi(y/a, y) dy crosses zero at most once from
/// below in v2: once above +tol it must never again fall below -tol. DMV
/// only.
CheckResult check_scd(const PhiEvaluator& ev, int grid_n = 401,
                      double tol = 1e-10);

/// All three checks assembled into one report. DMV only.
SCReport check_sc(const PhiEvaluator& ev, int grid_n = 401,
                  double tol = 1e-10);

/// Ordered-model virtual utility
///   W(v1, v2) = v1 - [(1 - G(v1))/g(v1)] [2 + eta_g(v2/a)],
/// satisfying phi = W f on the ordered-decreasing triangle.
double ordered_w(double v1, double v2, const BaseDensity& g, double a);

/// Diagonal virtual utility
///   W_min(v2) = (1/a^2) [v2 - a(1 - G(v2/a)) / (2 g(v2/a))],
/// satisfying Int_{v2}^{a} phi(y/a, y) dy = a g_min(v2) W_min(v2) with
/// g_min(v2) = (2/a) g(v2/a)(1 - G(v2/a)).
double ordered_wmin(double v2, const BaseDensity& g, double a);

/// Ordered-decreasing model conditions, each equivalent to the matching SC
/// condition for f = (2/a) g(v1) g(v2/a):
///   SC-H  <=>  eta_g(x) >= -3/2 for all x,
///   SC-V  <=>  W(v1, .) crosses zero at most once from above for all v1,
///   SC-D  <=>  W_min crosses zero at most once from below.
/// Evaluated on 1001-point grids; the report reuses the SCReport shape.
SCReport check_ordered_conditions(const BaseDensity& g, double a,
                                  int grid_n = 1001, double tol = 1e-10);

/// Conditional-decreasing model sufficient conditions for
/// f = g1(v1) g2(v2) / (1 - G1(v2)):
///   SC-H  if  eta_g1(v1) + eta_g2(v2) >= -3 for all v1 >= v2,
///   SC-V  if  gamma(v2) = eta_g2(v2) + v2 g1(v2)/(1 - G1(v2)) is increasing
///         and eta_g2 >= -2,
///   SC-D  if  eta_g2 >= -2.
SCReport check_conditional_conditions(const BaseDensity& g1,
                                      const BaseDensity& g2, int grid_n = 1001,
                                      double tol = 1e-10);

/// Conditional cdf of the first coordinate along the slice v1 + v2 = w,
/// measured against the slice's own v1 range:
///   Pr[ v1 <= c * v1max(w) | v1 + v2 = w ],
/// where v1max(w) is the largest v1 attainable on the slice. c = 1 always
/// yields 1. Throws ZeroDensitySliceError when the slice carries no mass and
/// InvalidInputError for c outside [0, 1] or w outside [0, w_max].
double conditional_share_cdf(const Density& density, double c, double w);

}  // namespace mechlab
