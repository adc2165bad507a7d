// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mechlab/density.hpp"
#include "mechlab/mechanism.hpp"

namespace mechlab {

/// Price geometry of a deterministic mechanism on the DMV triangle:
///   Interior      a*p1 > p2 > 0 (both first-order conditions apply)
///   SeparateEdge  p2 >= a*p1 (candidate from the separate-price family)
///   Bundle        p2 = 0 (both units at a single price)
enum class Regime { Interior, SeparateEdge, Bundle };

std::string to_string(Regime r);

/// One evaluated price pair.
struct Candidate {
  DeterministicMechanism prices;
  double revenue{0.0};
  Regime regime{Regime::Interior};
};

/// Result of the deterministic-price search.
struct OptResult {
  DeterministicMechanism best;
  double revenue{0.0};
  Regime regime{Regime::Interior};
  std::vector<Candidate> candidates;
  /// First-order residuals at the winner when it is interior.
  std::optional<std::array<double, 2>> foc_residuals;
};

/// Revenue-maximizing posted prices over {0 <= p1 <= 1, 0 <= p2 <= a}:
/// a coarse 200x200 grid of the revenue surface (cell-mass prefix sums),
/// coordinate golden-section refinement to 1e-7, and explicit 1-D searches
/// of the two boundary families p2 = 0 (bundle over the total price) and
/// p2 = a*p1. Deterministic tie-break: higher revenue, then lower p1,
/// then lower p2. DMV orientation only.
OptResult optimize_deterministic(const Density& density);

/// First-order necessary conditions at interior prices.
struct NecessaryReport {
  Regime regime{Regime::Interior};
  /// Interior: the two integral conditions
  ///   r1 = Int_0^{p2} phi(p1, v2) dv2
  ///   r2 = Int_{p2}^{a*alpha} phi((1+a)*alpha - v2, v2) dv2
  ///      + Int_{a*alpha}^{a} phi(v2/a, v2) dv2,  alpha = (p1+p2)/(1+a).
  /// Separate prices (a*p1 < p2): the marginal hazard-rate conditions
  ///   r_i = p_i - (1 - F_i(p_i)) / f_i(p_i).
  std::array<double, 2> residuals{0.0, 0.0};
  /// Interior only: phi(p1, p2) (should be <= 0) and phi(p1, 0) (>= 0).
  std::optional<double> phi_at_prices;
  std::optional<double> phi_at_zero;
};

/// Evaluate the necessary conditions at interior prices 0 < p1 < 1,
/// 0 < p2 < a. Throws OnBoundaryError when p2 = 0 or a*p1 = p2 (the
/// conditions do not apply on the regime boundaries). DMV only.
NecessaryReport check_necessary_conditions(const Density& density, double p1,
                                           double p2);

/// The two closed-form candidates for the uniform triangle:
/// separate prices (2/3, (2a - sqrt(a(1+a)))/3) and the bundle at
/// sqrt((1+a)/3); the winner is decided by direct revenue comparison
/// (the flip happens at a = 1/3).
struct UniformClosedForm {
  DeterministicMechanism unbundled;  // p2 clamped to 0 when the formula dips below
  double unbundled_revenue{0.0};
  double bundle_price{0.0};
  double bundle_revenue{0.0};
  Regime optimal_regime{Regime::Interior};
};

UniformClosedForm uniform_closed_form(double a);

/// Optimal bundle price for an IMV density.
struct BundleResult {
  double price{0.0};
  double revenue{0.0};
  /// Whether w - (1-T(w))/tau(w) was increasing (fixed-point route); when
  /// false, the price comes from an exhaustive search of w(1 - T(w)).
  bool regular{true};
  /// |B*tau(B) - (1 - T(B))|.
  double residual{0.0};
};

/// Solve B*tau(B) = 1 - T(B) for the sum distribution T of v1 + v2
/// (bisection to 1e-12 when T is regular; exhaustive 1e-5 scan plus local
/// polish otherwise). IMV orientation only.
BundleResult imv_bundle_price(const Density& density);

/// One row of a parameter sweep.
struct SweepRow {
  double param{0.0};
  double p1{0.0};
  double p2{0.0};
  Regime regime{Regime::Interior};
  double revenue{0.0};
};

/// Run optimize_deterministic over n >= 2 equally spaced parameter values,
/// building the density with `family`.
std::vector<SweepRow> sweep(const std::function<Density(double)>& family,
                            double lo, double hi, int n);

}  // namespace mechlab
