// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mechlab/errors.hpp"

namespace mechlab {

/// Orientation of the triangular type space.
///
/// DMV (decreasing marginal values): v2 <= a*v1 with v1 in [0,1], v2 in [0,a]
/// — the buyer's value for the second unit never exceeds a times the first.
/// IMV (increasing marginal values): v1 <= a*v2 with v1 in [0,a], v2 in [0,1].
enum class Orientation { DMV, IMV };

/// Triangular type space with slope parameter a > 0. The support is closed:
/// contains() is exact on the boundary.
struct Domain {
  Orientation orientation{Orientation::DMV};
  double a{1.0};

  bool contains(double v1, double v2) const {
    if (orientation == Orientation::DMV) {
      return v1 >= 0.0 && v1 <= 1.0 && v2 >= 0.0 && v2 <= a * v1;
    }
    return v2 >= 0.0 && v2 <= 1.0 && v1 >= 0.0 && v1 <= a * v2;
  }

  double v1_max() const { return orientation == Orientation::DMV ? 1.0 : a; }
  double v2_max() const { return orientation == Orientation::DMV ? a : 1.0; }

  /// Admissible v1 range of the horizontal slice at height v2.
  double v1_lo(double v2) const {
    return orientation == Orientation::DMV ? v2 / a : 0.0;
  }
  double v1_hi(double v2) const {
    return orientation == Orientation::DMV ? 1.0 : a * v2;
  }

  /// Largest attainable v1 + v2.
  double w_max() const { return v1_max() + v2_max(); }
};

/// One-dimensional density g on [0, 1] with cdf, derivative, and elasticity
/// eta_g(x) = x*g'(x)/g(x). Built-in families:
///   uniform-power          g(x) = alpha*x^(alpha-1),        alpha >= 1
///   truncated-exponential  g(x) = lambda*e^(lambda*x)/(e^lambda - 1), lambda > 0
///   beta                   g(x) = x^(alpha-1)(1-x)^(beta-1)/B(alpha,beta),
///                          alpha >= 1 >= beta > 0 (keeps the elasticity
///                          bounded below near 0)
class BaseDensity {
 public:
  enum class Family { UniformPower, TruncatedExponential, Beta, Custom };

  static BaseDensity uniform_power(double alpha);
  static BaseDensity truncated_exponential(double lambda);
  static BaseDensity beta(double alpha, double beta);
  /// Fully caller-specified density; all three callables required.
  static BaseDensity custom(std::function<double(double)> pdf,
                            std::function<double(double)> cdf,
                            std::function<double(double)> pdf_deriv);

  Family family() const { return family_; }
  double param_alpha() const { return alpha_; }
  double param_beta() const { return beta_; }
  double param_lambda() const { return lambda_; }

  double pdf(double x) const;
  double cdf(double x) const;
  double pdf_deriv(double x) const;
  /// x*g'(x)/g(x); throws DivisionByZeroError where g vanishes.
  double elasticity(double x) const;

  /// Short machine-readable description ("uniform-power(2)", ...).
  std::string describe() const;

 private:
  BaseDensity() = default;

  Family family_{Family::UniformPower};
  double alpha_{1.0};
  double beta_{1.0};
  double lambda_{0.0};
  double log_beta_norm_{0.0};  // log B(alpha, beta) for the beta family
  std::function<double(double)> custom_pdf_;
  std::function<double(double)> custom_cdf_;
  std::function<double(double)> custom_deriv_;
};

enum class DensityKind {
  UniformTriangle,
  OrderedDecreasing,
  ConditionalDecreasing,
  ScaleInvariant,
  OrderedIncreasing,
  Example3IMV,
  Grid,
};

/// Joint density on the triangular type space. Immutable after construction;
/// safe to share across threads. Evaluation is exactly zero outside the
/// closed support.
///
/// Built-in kinds (all normalized by construction):
///   UniformTriangle        f = 2/a on the triangle
///   OrderedDecreasing(g)   f = (2/a) g(v1) g(v2/a), DMV
///   ConditionalDecreasing  f = g1(v1) g2(v2) / (1 - G1(v2)), DMV, a = 1
///   ScaleInvariant(g)      f = g(v1)/v1, DMV, a = 1
///   OrderedIncreasing(g)   f = (2/a) g(v1/a) g(v2), IMV
///   Example3IMV            f = (12/11)(2 - v1^2), IMV, a = 1
///   Grid                   bilinear interpolation of tabulated values,
///                          renormalized so the interpolant integrates to 1
class Density {
 public:
  static Density uniform_triangle(Orientation orientation, double a);
  static Density ordered_decreasing(BaseDensity g, double a);
  static Density conditional_decreasing(BaseDensity g1, BaseDensity g2);
  static Density scale_invariant(BaseDensity g);
  static Density ordered_increasing(BaseDensity g, double a);
  static Density example3_imv();
  /// Tabulated density: values[j*n1 + i] = f(v1_i, v2_j) on the regular mesh
  /// over the bounding box (v1_i = i/(n1-1)*v1_max, v2_j = j/(n2-1)*v2_max).
  /// Rejects inputs whose interpolant integral differs from 1 by more than
  /// 1e-3, then renormalizes the rest exactly.
  static Density grid(Domain domain, int n1, int n2,
                      std::vector<double> values);

  const Domain& domain() const { return domain_; }
  DensityKind kind() const { return kind_; }
  /// True when phi(v1, v2) has a closed form (no nested quadrature needed).
  bool closed_form_phi() const;

  double f(double v1, double v2) const;
  /// (df/dv1, df/dv2). Analytic for built-in families (valid on the closed
  /// support); central finite differences with step 1e-5 for Grid, clipped
  /// into the support (one-sided on edges). Grid gradients throw
  /// BoundaryPointError outside the support and at degenerate corners where
  /// no stencil fits.
  std::array<double, 2> grad_f(double v1, double v2) const;

  /// Base densities of the ordered / scale-invariant / conditional kinds
  /// (nullptr for other kinds).
  const BaseDensity* base_g() const { return g_ ? &*g_ : nullptr; }
  const BaseDensity* base_g2() const { return g2_ ? &*g2_ : nullptr; }

  /// Grid payload access (Grid kind only).
  int grid_n1() const { return n1_; }
  int grid_n2() const { return n2_; }
  const std::vector<double>& grid_values() const { return values_; }

  /// Short machine-readable description for reports.
  std::string describe() const;

 private:
  Density() = default;

  double grid_interp(double v1, double v2) const;

  Domain domain_{};
  DensityKind kind_{DensityKind::UniformTriangle};
  std::optional<BaseDensity> g_;
  std::optional<BaseDensity> g2_;
  int n1_{0}, n2_{0};
  std::vector<double> values_;
};

/// f(v); exactly 0 outside the closed support (total function).
double eval_f(const Density& density, double v1, double v2);

/// Gradient of f; see Density::grad_f for the contract.
std::array<double, 2> eval_grad_f(const Density& density, double v1,
                                  double v2);

/// Marginal cdfs F1(x) = Pr[v1 <= x], F2(y) = Pr[v2 <= y], each computed by
/// nested adaptive quadrature.
struct MarginalCdfs {
  std::function<double(double)> F1;
  std::function<double(double)> F2;
};
MarginalCdfs marginal_cdfs(const Density& density);

/// Marginal pdfs f1, f2 (slice integrals of f), used by the separate-price
/// first-order conditions.
struct MarginalPdfs {
  std::function<double(double)> f1;
  std::function<double(double)> f2;
};
MarginalPdfs marginal_pdfs(const Density& density);

/// Mass of the density on the axis-aligned box [x0, x1] x [y0, y1]
/// intersected with the support. Grid densities integrate their bilinear
/// interpolant cell by cell in closed form (adaptive refinement would
/// otherwise stall on the interpolation kinks); every other kind falls back
/// to adaptive quadrature at absolute tolerance `tol`.
double box_mass(const Density& density, double x0, double x1, double y0,
                double y1, double tol = 1e-11);

/// Distribution of the total w = v1 + v2. tau evaluates the slice integral
/// of f along v1 + v2 = w adaptively on every call; T combines a prebuilt
/// cumulative table with cubic Hermite interpolation (T' = tau is known at
/// the table knots), and T_exact integrates the tail from the nearest knot
/// for fixed-point-accuracy queries.
class SumDistribution {
 public:
  explicit SumDistribution(const Density& density);

  double w_max() const { return w_max_; }
  double tau(double w) const;
  double T(double w) const;
  /// Same value as T but with the last partial interval integrated
  /// adaptively instead of interpolated.
  double T_exact(double w) const;

 private:
  std::shared_ptr<const Density> density_;
  double w_max_{0.0};
  std::vector<double> knots_;
  std::vector<double> cum_;   // T at knots
  std::vector<double> taus_;  // tau at knots
};

SumDistribution sum_distribution(const Density& density);

/// Exponential tilting: Grid density proportional to f(v)*exp(theta*(v1+v2))
/// on a fixed default mesh. theta = 0 reproduces to_grid(density) exactly;
/// theta > 0 first-order stochastically dominates smaller theta.
Density fosd_tilt(const Density& density, double theta,
                  int mesh_n = 201);

/// Resample any density onto the Grid representation (same pipeline as
/// fosd_tilt with theta = 0).
Density to_grid(const Density& density, int mesh_n = 201);

/// Load a density from its JSON spec:
///   {"orientation":"dmv"|"imv", "a":number, "kind":string,
///    "params":object}  or  {"kind":"grid", ..., "grid":{"n1","n2","values"}}
/// Throws InvalidInputError with a diagnostic on malformed or non-normalized
/// input.
Density density_from_json_text(const std::string& json_text);
Density density_from_json_file(const std::string& path);

}  // namespace mechlab
