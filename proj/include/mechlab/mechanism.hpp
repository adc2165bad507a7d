// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <string>
#include <variant>
#include <vector>

#include "mechlab/density.hpp"
#include "mechlab/errors.hpp"

namespace mechlab {

/// Posted-price menu {buy nothing, one unit at p1, both units at p1 + p2}.
/// p2 is the incremental price of the second unit; p2 = 0 encodes selling
/// the two units as a bundle at price p1.
struct DeterministicMechanism {
  double p1{0.0};
  double p2{0.0};
};

/// One breakpoint of a step allocation rule: q2(1, v2) = q for v2 >= b until
/// the next breakpoint takes over.
struct Step {
  double b{0.0};
  double q{0.0};
};

/// A line mechanism restricted to step allocation rules. It is described by
/// the payment t10 = t(1,0) of the lowest diagonal type and the
/// right-continuous increasing step function v2 -> q2(1, v2):
///
///   q2(1, v2) = q_k  for v2 in [b_k, b_{k+1}),  and 0 below b_1.
///
/// The induced payoff of the top edge is u(1, v2) = (1 - t10) +
/// Int_0^{v2} q2(1, y) dy, which is convex, increasing and nonnegative, so
/// the mechanism is incentive compatible and individually rational on the
/// whole triangle via payoff_line().
class StepLineMechanism {
 public:
  StepLineMechanism(double t10, std::vector<Step> steps);

  /// The two-price menu (p1, p2) as a line mechanism: t10 = p1 and the
  /// second unit is allocated with probability one above v2 = p2.
  static StepLineMechanism from_deterministic(const DeterministicMechanism& d);

  double t10() const { return t10_; }
  const std::vector<Step>& steps() const { return steps_; }

  /// q2(1, v2): right-continuous step lookup (0 below the first breakpoint).
  double q2_at(double v2) const;

  /// u(1, v2) = (1 - t10) + Int_0^{v2} q2(1, y) dy.
  double u1(double v2) const;

  /// t(1, v2) = v2 q2(1, v2) + 1 - u(1, v2); piecewise constant in v2.
  double t1(double v2) const;

 private:
  double t10_;
  std::vector<Step> steps_;
};

/// Summary quantities of a step line mechanism on a triangle of height a.
struct MechanismDiagnostics {
  /// Unique fixed point of alpha = 1 - u(1, a*alpha).
  double alpha{0.0};
  /// v2_lower = inf{v2 : q2(1,v2) > 0} (= a when the second unit is never
  /// allocated).
  double v2_lower{0.0};
  /// v2_upper = sup{v2 : q2(1,v2) < 1} (= a when q2 never reaches one).
  double v2_upper{0.0};
  /// qbar2 = sup_{v2 < a*alpha} q2(1,v2) when alpha > 0, else 0.
  double qbar2{0.0};
  /// Whether q2(1,.) takes at most the two values {qbar2, 1} at and above
  /// a*alpha (with q2(1,a*alpha) equal to qbar2 or to 1).
  bool is_constrained{false};
  /// Whether q2(1,.) takes at most the three values {0, q2(1,a*alpha), 1}.
  bool is_semi_deterministic{false};
};

/// Buyer payoff of type v under the line extension:
/// u(v) = max[0, u(1, v2) - (1 - v1)].
double payoff_line(const StepLineMechanism& m, double v1, double v2);

/// Unique solution of alpha = 1 - u(1, a*alpha), by bisection on the
/// strictly increasing map x -> x + u(1, a x) - 1 (tolerance 1e-12).
double alpha_of(const StepLineMechanism& m, double a);

/// n >= 2 samples of the zero-payoff boundary {(1 - u(1,v2), v2)} for
/// v2 in [0, a*alpha]; runs from (t10, 0) to (alpha, a*alpha) and is convex.
std::vector<std::array<double, 2>> z0_boundary(const StepLineMechanism& m,
                                               double a, int n);

/// All diagnostics at once.
MechanismDiagnostics diagnose(const StepLineMechanism& m, double a);

/// Straightening at a cut v2s in (v2_lower, a*alpha]: the result has
/// u_s(1, v2) = max[u(1, v2), u(1, v2s)], i.e. t10_s = 1 - u(1, v2s) and
/// q2 zeroed below v2s. Throws BadCutError when v2s is outside the range.
StepLineMechanism straighten(const StepLineMechanism& m, double a,
                             double v2s);

/// The cover: keeps v2 > a*alpha unchanged and below a*alpha offers only
/// (q2(1,a*alpha), t(1,a*alpha)) — to those v2 with
/// v2 q2(1,a*alpha) >= t(1,a*alpha) - t(1,0) — or (0, t(1,0)).
/// The result is semi-deterministic, preserves t10 and alpha, and lowers
/// u(1,.) only below a*alpha. Idempotent.
StepLineMechanism cover(const StepLineMechanism& m, double a);

/// Expected transfer E[t(v)] of a posted-price menu under the
/// seller-favorable best response (ties toward the larger transfer).
double revenue_direct(const Density& density, const DeterministicMechanism& m);

/// Expected transfer E[t(v)] of a step line mechanism: type v pays t(1, v2)
/// iff v1 >= 1 - u(1, v2). DMV orientation only.
double revenue_direct(const Density& density, const StepLineMechanism& m);

/// The same revenue assembled from the phi function:
///   Rev = Int_0^{a alpha} Int_{1-u(1,v2)}^{1} phi
///       + Int_{a alpha}^{a} Int_{v2/a}^{1} phi
///       + Int_{a alpha}^{a} u(v2/a, v2) phi(v2/a, v2) dv2.
/// Agrees with revenue_direct to 1e-6. DMV orientation only.
double revenue_phi_route(const Density& density, const StepLineMechanism& m);

/// Buyer payoffs sampled on an n1 x n2 lattice over the bounding box of the
/// domain (values[j*n1 + i] at (v1_i, v2_j)); entries outside the triangle
/// are ignored.
struct PayoffGrid {
  int n1{0};
  int n2{0};
  std::vector<double> values;
};

/// Revenue from a payoff grid via the boundary/interior identity
///   Rev = Int u(edge) f(edge) - IntInt u(v) [3 f(v) + v . grad f(v)] dv,
/// where the edge is v1 = 1 (DMV) or v2 = 1 (IMV). The payoff grid is
/// interpolated bilinearly; u is not checked for convexity.
double revenue_from_payoff_grid(const Density& density, const PayoffGrid& u);

/// Payoff grid of a step line mechanism on an n x n lattice.
PayoffGrid payoff_grid_of(const StepLineMechanism& m, const Domain& domain,
                          int n);

/// Either mechanism kind, as parsed from JSON.
using AnyMechanism = std::variant<DeterministicMechanism, StepLineMechanism>;

/// Parse {"kind":"deterministic","p1":..,"p2":..} or
/// {"kind":"line","t10":..,"steps":[[b,q],..]}.
AnyMechanism mechanism_from_json_text(const std::string& text);
AnyMechanism mechanism_from_json_file(const std::string& path);

}  // namespace mechlab
