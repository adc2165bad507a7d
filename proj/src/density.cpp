// SPDX-License-Identifier: MIT
#include "mechlab/density.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "mechlab/quadrature.hpp"

namespace mechlab {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// BaseDensity
// ---------------------------------------------------------------------------

BaseDensity BaseDensity::uniform_power(double alpha) {
  if (!(alpha >= 1.0)) {
    throw InvalidInputError("uniform-power family requires alpha >= 1, got " +
                            fmt(alpha));
  }
  BaseDensity d;
  d.family_ = Family::UniformPower;
  d.alpha_ = alpha;
  return d;
}

BaseDensity BaseDensity::truncated_exponential(double lambda) {
  if (!(lambda > 0.0)) {
    throw InvalidInputError(
        "truncated-exponential family requires lambda > 0, got " +
        fmt(lambda));
  }
  BaseDensity d;
  d.family_ = Family::TruncatedExponential;
  d.lambda_ = lambda;
  return d;
}

BaseDensity BaseDensity::beta(double alpha, double beta) {
  if (!(alpha >= 1.0 && beta <= 1.0 && beta > 0.0)) {
    throw InvalidInputError(
        "beta family requires alpha >= 1 >= beta > 0, got alpha=" +
        fmt(alpha) + " beta=" + fmt(beta));
  }
  BaseDensity d;
  d.family_ = Family::Beta;
  d.alpha_ = alpha;
  d.beta_ = beta;
  d.log_beta_norm_ =
      std::lgamma(alpha) + std::lgamma(beta) - std::lgamma(alpha + beta);
  return d;
}

BaseDensity BaseDensity::custom(std::function<double(double)> pdf,
                                std::function<double(double)> cdf,
                                std::function<double(double)> pdf_deriv) {
  if (!pdf || !cdf || !pdf_deriv) {
    throw InvalidInputError("custom base density requires pdf, cdf and deriv");
  }
  BaseDensity d;
  d.family_ = Family::Custom;
  d.custom_pdf_ = std::move(pdf);
  d.custom_cdf_ = std::move(cdf);
  d.custom_deriv_ = std::move(pdf_deriv);
  return d;
}

double BaseDensity::pdf(double x) const {
  switch (family_) {
    case Family::UniformPower:
      return alpha_ == 1.0 ? 1.0 : alpha_ * std::pow(x, alpha_ - 1.0);
    case Family::TruncatedExponential:
      return lambda_ * std::exp(lambda_ * x) / std::expm1(lambda_);
    case Family::Beta: {
      const double lx = (alpha_ == 1.0) ? 0.0 : (alpha_ - 1.0) * std::log(x);
      const double l1x = (beta_ == 1.0) ? 0.0 : (beta_ - 1.0) * std::log1p(-x);
      return std::exp(lx + l1x - log_beta_norm_);
    }
    case Family::Custom:
      return custom_pdf_(x);
  }
  return 0.0;
}

double BaseDensity::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  switch (family_) {
    case Family::UniformPower:
      return std::pow(x, alpha_);
    case Family::TruncatedExponential:
      return std::expm1(lambda_ * x) / std::expm1(lambda_);
    case Family::Beta:
      return boost::math::ibeta(alpha_, beta_, x);
    case Family::Custom:
      return custom_cdf_(x);
  }
  return 0.0;
}

double BaseDensity::pdf_deriv(double x) const {
  switch (family_) {
    case Family::UniformPower:
      if (alpha_ == 1.0) return 0.0;
      if (alpha_ == 2.0) return 2.0;
      return alpha_ * (alpha_ - 1.0) * std::pow(x, alpha_ - 2.0);
    case Family::TruncatedExponential:
      return lambda_ * lambda_ * std::exp(lambda_ * x) / std::expm1(lambda_);
    case Family::Beta: {
      // g'(x) = g(x) * [(alpha-1)/x - (beta-1)/(1-x)]
      return pdf(x) * ((alpha_ - 1.0) / x - (beta_ - 1.0) / (1.0 - x));
    }
    case Family::Custom:
      return custom_deriv_(x);
  }
  return 0.0;
}

double BaseDensity::elasticity(double x) const {
  switch (family_) {
    case Family::UniformPower:
      return alpha_ - 1.0;
    case Family::TruncatedExponential:
      return lambda_ * x;
    case Family::Beta:
      return (alpha_ - 1.0) - (beta_ - 1.0) * x / (1.0 - x);
    case Family::Custom: {
      const double g = custom_pdf_(x);
      if (g == 0.0) {
        throw DivisionByZeroError("elasticity undefined where g(x)=0, x=" +
                                  fmt(x));
      }
      return x * custom_deriv_(x) / g;
    }
  }
  return 0.0;
}

std::string BaseDensity::describe() const {
  switch (family_) {
    case Family::UniformPower:
      return "uniform-power(" + fmt(alpha_) + ")";
    case Family::TruncatedExponential:
      return "truncated-exponential(" + fmt(lambda_) + ")";
    case Family::Beta:
      return "beta(" + fmt(alpha_) + "," + fmt(beta_) + ")";
    case Family::Custom:
      return "custom";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Density: construction
// ---------------------------------------------------------------------------

namespace {

void require_positive_a(double a) {
  if (!(a > 0.0)) {
    throw InvalidInputError("domain parameter a must be > 0, got " + fmt(a));
  }
}

/// Integral of the bilinear interpolant of `values` over the support. Cells
/// fully inside the triangle integrate exactly (mean of corners times area);
/// cells crossing the hypotenuse are integrated adaptively on the clipped
/// region.
double grid_interpolant_integral(const Domain& dom, int n1, int n2,
                                 const std::vector<double>& values) {
  const double h1 = dom.v1_max() / (n1 - 1);
  const double h2 = dom.v2_max() / (n2 - 1);
  auto value = [&](int i, int j) { return values[j * n1 + i]; };
  auto interp = [&](double v1, double v2, int i, int j) {
    const double tx = (v1 - i * h1) / h1;
    const double ty = (v2 - j * h2) / h2;
    return (1 - tx) * (1 - ty) * value(i, j) + tx * (1 - ty) * value(i + 1, j) +
           (1 - tx) * ty * value(i, j + 1) + tx * ty * value(i + 1, j + 1);
  };
  double total = 0.0;
  for (int j = 0; j + 1 < n2; ++j) {
    const double y0 = j * h2, y1 = (j + 1) * h2;
    for (int i = 0; i + 1 < n1; ++i) {
      const double x0 = i * h1, x1 = (i + 1) * h1;
      bool inside, outside;
      if (dom.orientation == Orientation::DMV) {
        inside = y1 <= dom.a * x0;   // top-left corner below the hypotenuse
        outside = y0 >= dom.a * x1;  // bottom-right corner above it
      } else {
        inside = x1 <= dom.a * y0;
        outside = x0 >= dom.a * y1;
      }
      if (outside) continue;
      if (inside) {
        total += 0.25 * h1 * h2 *
                 (value(i, j) + value(i + 1, j) + value(i, j + 1) +
                  value(i + 1, j + 1));
        continue;
      }
      auto xlo = [&](double y) {
        return dom.orientation == Orientation::DMV ? std::max(x0, dom.v1_lo(y))
                                                   : x0;
      };
      auto xhi = [&](double y) {
        return dom.orientation == Orientation::DMV
                   ? x1
                   : std::min(x1, dom.v1_hi(y));
      };
      total += quad::integrate2(
          [&](double x, double y) { return interp(x, y, i, j); }, y0, y1, xlo,
          xhi, 1e-13);
    }
  }
  return total;
}

}  // namespace

Density Density::uniform_triangle(Orientation orientation, double a) {
  require_positive_a(a);
  Density d;
  d.domain_ = Domain{orientation, a};
  d.kind_ = DensityKind::UniformTriangle;
  return d;
}

Density Density::ordered_decreasing(BaseDensity g, double a) {
  require_positive_a(a);
  Density d;
  d.domain_ = Domain{Orientation::DMV, a};
  d.kind_ = DensityKind::OrderedDecreasing;
  d.g_ = std::move(g);
  return d;
}

Density Density::conditional_decreasing(BaseDensity g1, BaseDensity g2) {
  Density d;
  d.domain_ = Domain{Orientation::DMV, 1.0};
  d.kind_ = DensityKind::ConditionalDecreasing;
  d.g_ = std::move(g1);
  d.g2_ = std::move(g2);
  return d;
}

Density Density::scale_invariant(BaseDensity g) {
  Density d;
  d.domain_ = Domain{Orientation::DMV, 1.0};
  d.kind_ = DensityKind::ScaleInvariant;
  d.g_ = std::move(g);
  return d;
}

Density Density::ordered_increasing(BaseDensity g, double a) {
  require_positive_a(a);
  Density d;
  d.domain_ = Domain{Orientation::IMV, a};
  d.kind_ = DensityKind::OrderedIncreasing;
  d.g_ = std::move(g);
  return d;
}

Density Density::example3_imv() {
  Density d;
  d.domain_ = Domain{Orientation::IMV, 1.0};
  d.kind_ = DensityKind::Example3IMV;
  return d;
}

Density Density::grid(Domain domain, int n1, int n2,
                      std::vector<double> values) {
  require_positive_a(domain.a);
  if (n1 < 2 || n2 < 2) {
    throw InvalidInputError("grid density needs at least 2 points per axis");
  }
  if (static_cast<int>(values.size()) != n1 * n2) {
    throw InvalidInputError("grid density expects " + std::to_string(n1 * n2) +
                            " values, got " + std::to_string(values.size()));
  }
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidInputError("grid density values must be finite and >= 0");
    }
  }
  const double mass = grid_interpolant_integral(domain, n1, n2, values);
  if (std::abs(mass - 1.0) > 1e-3) {
    throw InvalidInputError(
        "grid density is not normalized: interpolant integrates to " +
        fmt(mass) + " (|mass-1| must be <= 1e-3); scale the values first");
  }
  for (double& v : values) v /= mass;
  Density d;
  d.domain_ = domain;
  d.kind_ = DensityKind::Grid;
  d.n1_ = n1;
  d.n2_ = n2;
  d.values_ = std::move(values);
  return d;
}

bool Density::closed_form_phi() const {
  switch (kind_) {
    case DensityKind::UniformTriangle:
    case DensityKind::OrderedDecreasing:
    case DensityKind::ConditionalDecreasing:
    case DensityKind::ScaleInvariant:
      return domain_.orientation == Orientation::DMV;
    default:
      return false;
  }
}

// ---------------------------------------------------------------------------
// Density: evaluation
// ---------------------------------------------------------------------------

double Density::grid_interp(double v1, double v2) const {
  const double h1 = domain_.v1_max() / (n1_ - 1);
  const double h2 = domain_.v2_max() / (n2_ - 1);
  int i = std::clamp(static_cast<int>(v1 / h1), 0, n1_ - 2);
  int j = std::clamp(static_cast<int>(v2 / h2), 0, n2_ - 2);
  const double tx = std::clamp((v1 - i * h1) / h1, 0.0, 1.0);
  const double ty = std::clamp((v2 - j * h2) / h2, 0.0, 1.0);
  auto value = [&](int ii, int jj) { return values_[jj * n1_ + ii]; };
  return (1 - tx) * (1 - ty) * value(i, j) + tx * (1 - ty) * value(i + 1, j) +
         (1 - tx) * ty * value(i, j + 1) + tx * ty * value(i + 1, j + 1);
}

double Density::f(double v1, double v2) const {
  if (!domain_.contains(v1, v2)) return 0.0;
  const double a = domain_.a;
  switch (kind_) {
    case DensityKind::UniformTriangle:
      return 2.0 / a;
    case DensityKind::OrderedDecreasing:
      return (2.0 / a) * g_->pdf(v1) * g_->pdf(v2 / a);
    case DensityKind::ConditionalDecreasing:
      return g_->pdf(v1) * g2_->pdf(v2) / (1.0 - g_->cdf(v2));
    case DensityKind::ScaleInvariant:
      return g_->pdf(v1) / v1;
    case DensityKind::OrderedIncreasing:
      return (2.0 / a) * g_->pdf(v1 / a) * g_->pdf(v2);
    case DensityKind::Example3IMV:
      return (12.0 / 11.0) * (2.0 - v1 * v1);
    case DensityKind::Grid:
      return grid_interp(v1, v2);
  }
  return 0.0;
}

std::array<double, 2> Density::grad_f(double v1, double v2) const {
  const double a = domain_.a;
  switch (kind_) {
    case DensityKind::UniformTriangle:
      return {0.0, 0.0};
    case DensityKind::OrderedDecreasing:
      return {(2.0 / a) * g_->pdf_deriv(v1) * g_->pdf(v2 / a),
              (2.0 / (a * a)) * g_->pdf(v1) * g_->pdf_deriv(v2 / a)};
    case DensityKind::ConditionalDecreasing: {
      const double s = 1.0 - g_->cdf(v2);
      return {g_->pdf_deriv(v1) * g2_->pdf(v2) / s,
              g_->pdf(v1) * (g2_->pdf_deriv(v2) * s + g2_->pdf(v2) * g_->pdf(v2)) /
                  (s * s)};
    }
    case DensityKind::ScaleInvariant:
      return {(g_->pdf_deriv(v1) * v1 - g_->pdf(v1)) / (v1 * v1), 0.0};
    case DensityKind::OrderedIncreasing:
      return {(2.0 / (a * a)) * g_->pdf_deriv(v1 / a) * g_->pdf(v2),
              (2.0 / a) * g_->pdf(v1 / a) * g_->pdf_deriv(v2)};
    case DensityKind::Example3IMV:
      return {-(24.0 / 11.0) * v1, 0.0};
    case DensityKind::Grid:
      break;  // handled below
  }

  // Tabulated grid: central finite differences, step 1e-5 clipped into the
  // support. On the boundary no two-sided stencil exists.
  if (!domain_.contains(v1, v2)) {
    throw BoundaryPointError("gradient requested outside the support at (" +
                             fmt(v1) + "," + fmt(v2) + ")");
  }
  const double h = 1e-5;
  const double lo1 = domain_.v1_lo(v2), hi1 = domain_.v1_hi(v2);
  const double hm1 = std::min(h, v1 - lo1), hp1 = std::min(h, hi1 - v1);
  double lo2, hi2;
  if (domain_.orientation == Orientation::DMV) {
    lo2 = 0.0;
    hi2 = a * v1;
  } else {
    lo2 = v1 / a;
    hi2 = 1.0;
  }
  const double hm2 = std::min(h, v2 - lo2), hp2 = std::min(h, hi2 - v2);
  if (hm1 + hp1 <= 0.0 || hm2 + hp2 <= 0.0) {
    throw BoundaryPointError(
        "gradient of a tabulated density is undefined on the boundary at (" +
        fmt(v1) + "," + fmt(v2) + ")");
  }
  return {(f(v1 + hp1, v2) - f(v1 - hm1, v2)) / (hp1 + hm1),
          (f(v1, v2 + hp2) - f(v1, v2 - hm2)) / (hp2 + hm2)};
}

std::string Density::describe() const {
  const std::string a = fmt(domain_.a);
  switch (kind_) {
    case DensityKind::UniformTriangle:
      return std::string("uniform(") +
             (domain_.orientation == Orientation::DMV ? "dmv" : "imv") +
             ",a=" + a + ")";
    case DensityKind::OrderedDecreasing:
      return "ordered-decreasing(g=" + g_->describe() + ",a=" + a + ")";
    case DensityKind::ConditionalDecreasing:
      return "conditional-decreasing(g1=" + g_->describe() +
             ",g2=" + g2_->describe() + ")";
    case DensityKind::ScaleInvariant:
      return "scale-invariant(g=" + g_->describe() + ")";
    case DensityKind::OrderedIncreasing:
      return "ordered-increasing(g=" + g_->describe() + ",a=" + a + ")";
    case DensityKind::Example3IMV:
      return "example3";
    case DensityKind::Grid:
      return std::string("grid(") +
             (domain_.orientation == Orientation::DMV ? "dmv" : "imv") +
             ",a=" + a + "," + std::to_string(n1_) + "x" +
             std::to_string(n2_) + ")";
  }
  return "?";
}

double eval_f(const Density& density, double v1, double v2) {
  return density.f(v1, v2);
}

std::array<double, 2> eval_grad_f(const Density& density, double v1,
                                  double v2) {
  return density.grad_f(v1, v2);
}

// ---------------------------------------------------------------------------
// Exact integration of grid interpolants
// ---------------------------------------------------------------------------

namespace {

/// Raw bilinear interpolation over a grid density's lattice. The closed-form
/// integration helpers below only evaluate at points they already know lie
/// inside the support, where Density::f's boundary clip (exact in a*v1 but
/// not in v2/a and vice versa) could spuriously zero a slice endpoint after
/// rounding, so they bypass the clip and read the interpolant directly.
struct GridView {
  int n1, n2;
  double h1, h2;
  const std::vector<double>* vals;

  explicit GridView(const Density& d)
      : n1(d.grid_n1()),
        n2(d.grid_n2()),
        h1(d.domain().v1_max() / (d.grid_n1() - 1)),
        h2(d.domain().v2_max() / (d.grid_n2() - 1)),
        vals(&d.grid_values()) {}

  double value(int i, int j) const { return (*vals)[j * n1 + i]; }

  double interp(double x, double y) const {
    const int i = std::clamp(static_cast<int>(x / h1), 0, n1 - 2);
    const int j = std::clamp(static_cast<int>(y / h2), 0, n2 - 2);
    const double tx = std::clamp((x - i * h1) / h1, 0.0, 1.0);
    const double ty = std::clamp((y - j * h2) / h2, 0.0, 1.0);
    return (1 - tx) * (1 - ty) * value(i, j) + tx * (1 - ty) * value(i + 1, j) +
           (1 - tx) * ty * value(i, j + 1) + tx * ty * value(i + 1, j + 1);
  }
};

}  // namespace

double box_mass(const Density& density, double x0, double x1, double y0,
                double y1, double tol) {
  const Domain dom = density.domain();
  x0 = std::max(x0, 0.0);
  y0 = std::max(y0, 0.0);
  x1 = std::min(x1, dom.v1_max());
  y1 = std::min(y1, dom.v2_max());
  if (!(x1 > x0) || !(y1 > y0)) return 0.0;
  if (density.kind() != DensityKind::Grid) {
    return quad::integrate2(
        [&](double v1, double v2) { return density.f(v1, v2); }, y0, y1,
        [&](double v2) { return std::max(x0, dom.v1_lo(v2)); },
        [&](double v2) { return std::min(x1, dom.v1_hi(v2)); }, tol);
  }

  // Grid density: restricted to one lattice cell the integrand is a single
  // bilinear patch. Adaptive quadrature would subdivide at every cell line,
  // so integrate in closed form instead. Over a sub-rectangle whose rows all
  // span the full [xa, xb] width, the bilinear integral is exactly
  // area * patch(center); over the part cut by the support diagonal, the row
  // integral width(y) * patch(x-midpoint(y), y) is a cubic polynomial of y,
  // so one Gauss-Legendre panel integrates it exactly.
  const GridView g(density);
  const bool dmv = dom.orientation == Orientation::DMV;
  const double a = dom.a;
  double total = 0.0;
  const int i_lo = std::clamp(static_cast<int>(x0 / g.h1), 0, g.n1 - 2);
  const int i_hi = std::clamp(static_cast<int>(x1 / g.h1), 0, g.n1 - 2);
  const int j_lo = std::clamp(static_cast<int>(y0 / g.h2), 0, g.n2 - 2);
  const int j_hi = std::clamp(static_cast<int>(y1 / g.h2), 0, g.n2 - 2);
  for (int j = j_lo; j <= j_hi; ++j) {
    const double by0 = std::max(y0, j * g.h2);
    const double by1 = std::min(y1, (j + 1) * g.h2);
    if (!(by1 > by0)) continue;
    for (int i = i_lo; i <= i_hi; ++i) {
      const double bx0 = std::max(x0, i * g.h1);
      const double bx1 = std::min(x1, (i + 1) * g.h1);
      if (!(bx1 > bx0)) continue;
      if (dmv) {
        if (by0 >= a * bx1) continue;  // cell lies above the diagonal
        const double split = std::min(by1, a * bx0);
        if (split > by0) {  // rows below y = a*bx0 span the full width
          total += (bx1 - bx0) * (split - by0) *
                   g.interp(0.5 * (bx0 + bx1), 0.5 * (by0 + split));
        }
        const double ya = std::max(by0, a * bx0);
        const double yb = std::min(by1, a * bx1);
        if (yb > ya) {  // rows cut by the diagonal: x in [y/a, bx1]
          total += quad::panel_integral(
              [&](double y) {
                const double lo = std::max(y / a, bx0);
                return lo >= bx1 ? 0.0
                                 : (bx1 - lo) * g.interp(0.5 * (lo + bx1), y);
              },
              ya, yb);
        }
      } else {
        if (bx0 >= a * by1) continue;  // cell lies right of the diagonal
        const double split = std::max(by0, bx1 / a);
        if (by1 > split) {  // rows above y = bx1/a span the full width
          total += (bx1 - bx0) * (by1 - split) *
                   g.interp(0.5 * (bx0 + bx1), 0.5 * (split + by1));
        }
        const double ya = std::max(by0, bx0 / a);
        const double yb = std::min(by1, bx1 / a);
        if (yb > ya) {  // rows cut by the diagonal: x in [bx0, a*y]
          total += quad::panel_integral(
              [&](double y) {
                const double hi = std::min(a * y, bx1);
                return hi <= bx0 ? 0.0
                                 : (hi - bx0) * g.interp(0.5 * (bx0 + hi), y);
              },
              ya, yb);
        }
      }
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Marginals
// ---------------------------------------------------------------------------

MarginalPdfs marginal_pdfs(const Density& density) {
  const Domain dom = density.domain();
  Density d = density;
  MarginalPdfs m;
  if (density.kind() == DensityKind::Grid) {
    // Along a fixed-x (or fixed-y) slice the interpolant is piecewise linear
    // with breakpoints on the lattice lines, so a trapezoid per lattice
    // interval is the exact slice integral and the marginal costs O(n).
    m.f1 = [d, dom](double x) {
      if (x < 0.0 || x > dom.v1_max()) return 0.0;
      const double lo = dom.orientation == Orientation::DMV ? 0.0 : x / dom.a;
      const double hi = dom.orientation == Orientation::DMV ? dom.a * x : 1.0;
      if (!(hi > lo)) return 0.0;
      const GridView g(d);
      const int j_lo = std::clamp(static_cast<int>(lo / g.h2), 0, g.n2 - 2);
      const int j_hi = std::clamp(static_cast<int>(hi / g.h2), 0, g.n2 - 2);
      double total = 0.0;
      for (int j = j_lo; j <= j_hi; ++j) {
        const double ya = std::max(lo, j * g.h2);
        const double yb = std::min(hi, (j + 1) * g.h2);
        if (!(yb > ya)) continue;
        total += 0.5 * (g.interp(x, ya) + g.interp(x, yb)) * (yb - ya);
      }
      return total;
    };
    m.f2 = [d, dom](double y) {
      if (y < 0.0 || y > dom.v2_max()) return 0.0;
      const double lo = dom.v1_lo(y);
      const double hi = dom.v1_hi(y);
      if (!(hi > lo)) return 0.0;
      const GridView g(d);
      const int i_lo = std::clamp(static_cast<int>(lo / g.h1), 0, g.n1 - 2);
      const int i_hi = std::clamp(static_cast<int>(hi / g.h1), 0, g.n1 - 2);
      double total = 0.0;
      for (int i = i_lo; i <= i_hi; ++i) {
        const double xa = std::max(lo, i * g.h1);
        const double xb = std::min(hi, (i + 1) * g.h1);
        if (!(xb > xa)) continue;
        total += 0.5 * (g.interp(xa, y) + g.interp(xb, y)) * (xb - xa);
      }
      return total;
    };
    return m;
  }
  m.f1 = [d, dom](double x) {
    if (x < 0.0 || x > dom.v1_max()) return 0.0;
    double lo, hi;
    if (dom.orientation == Orientation::DMV) {
      lo = 0.0;
      hi = dom.a * x;
    } else {
      lo = x / dom.a;
      hi = 1.0;
    }
    return quad::integrate([&](double v2) { return d.f(x, v2); }, lo, hi,
                           1e-11);
  };
  m.f2 = [d, dom](double y) {
    if (y < 0.0 || y > dom.v2_max()) return 0.0;
    return quad::integrate([&](double v1) { return d.f(v1, y); },
                           dom.v1_lo(y), dom.v1_hi(y), 1e-11);
  };
  return m;
}

MarginalCdfs marginal_cdfs(const Density& density) {
  MarginalPdfs pdfs = marginal_pdfs(density);
  const Domain dom = density.domain();
  MarginalCdfs c;
  c.F1 = [pdfs, dom](double x) {
    if (x <= 0.0) return 0.0;
    return quad::integrate(pdfs.f1, 0.0, std::min(x, dom.v1_max()), 1e-9);
  };
  c.F2 = [pdfs, dom](double y) {
    if (y <= 0.0) return 0.0;
    return quad::integrate(pdfs.f2, 0.0, std::min(y, dom.v2_max()), 1e-9);
  };
  return c;
}

// ---------------------------------------------------------------------------
// Sum distribution
// ---------------------------------------------------------------------------

namespace {

/// v1 range of the slice {v1 + v2 = w} inside the support.
std::pair<double, double> slice_range(const Domain& dom, double w) {
  if (dom.orientation == Orientation::DMV) {
    return {std::max(w / (1.0 + dom.a), w - dom.a), std::min(1.0, w)};
  }
  return {std::max(0.0, w - 1.0), dom.a * w / (1.0 + dom.a)};
}

}  // namespace

SumDistribution::SumDistribution(const Density& density)
    : density_(std::make_shared<const Density>(density)),
      w_max_(density.domain().w_max()) {
  constexpr int kIntervals = 512;
  knots_.resize(kIntervals + 1);
  cum_.resize(kIntervals + 1);
  taus_.resize(kIntervals + 1);
  for (int k = 0; k <= kIntervals; ++k) {
    knots_[k] = w_max_ * k / kIntervals;
    taus_[k] = tau(knots_[k]);
  }
  cum_[0] = 0.0;
  for (int k = 0; k < kIntervals; ++k) {
    cum_[k + 1] = cum_[k] + quad::integrate([this](double w) { return tau(w); },
                                            knots_[k], knots_[k + 1], 2e-12);
  }
}

double SumDistribution::tau(double w) const {
  if (w <= 0.0 || w >= w_max_) return 0.0;
  const auto [lo, hi] = slice_range(density_->domain(), w);
  if (!(hi > lo)) return 0.0;
  return quad::integrate([&](double v1) { return density_->f(v1, w - v1); },
                         lo, hi, 1e-12);
}

double SumDistribution::T(double w) const {
  if (w <= 0.0) return 0.0;
  if (w >= w_max_) return 1.0;
  const int n = static_cast<int>(knots_.size()) - 1;
  const double h = w_max_ / n;
  const int k = std::min(static_cast<int>(w / h), n - 1);
  const double t = (w - knots_[k]) / h;
  // Cubic Hermite with the exact derivative tau at both knots.
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * cum_[k] + (t3 - 2 * t2 + t) * h * taus_[k] +
         (-2 * t3 + 3 * t2) * cum_[k + 1] + (t3 - t2) * h * taus_[k + 1];
}

double SumDistribution::T_exact(double w) const {
  if (w <= 0.0) return 0.0;
  if (w >= w_max_) return 1.0;
  const int n = static_cast<int>(knots_.size()) - 1;
  const double h = w_max_ / n;
  const int k = std::min(static_cast<int>(w / h), n - 1);
  return cum_[k] + quad::integrate([this](double s) { return tau(s); },
                                   knots_[k], w, 1e-12);
}

SumDistribution sum_distribution(const Density& density) {
  return SumDistribution(density);
}

// ---------------------------------------------------------------------------
// FOSD tilt / grid resampling
// ---------------------------------------------------------------------------

Density fosd_tilt(const Density& density, double theta, int mesh_n) {
  if (!(theta >= 0.0)) {
    throw InvalidInputError("fosd_tilt requires theta >= 0, got " +
                            fmt(theta));
  }
  const Domain dom = density.domain();
  const int n = mesh_n;
  std::vector<double> values(static_cast<std::size_t>(n) * n);
  const double h1 = dom.v1_max() / (n - 1);
  const double h2 = dom.v2_max() / (n - 1);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double v1 = i * h1, v2 = j * h2;
      values[j * n + i] = density.f(v1, v2) * std::exp(theta * (v1 + v2));
    }
  }
  // Pre-normalize so Density::grid sees a unit-mass interpolant and only
  // polishes the remainder.
  const double mass = grid_interpolant_integral(dom, n, n, values);
  if (!(mass > 0.0)) {
    throw InvalidInputError("tilted density has zero mass on the mesh");
  }
  for (double& v : values) v /= mass;
  return Density::grid(dom, n, n, std::move(values));
}

Density to_grid(const Density& density, int mesh_n) {
  return fosd_tilt(density, 0.0, mesh_n);
}

// ---------------------------------------------------------------------------
// JSON loading
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

BaseDensity base_density_from_json(const json& spec, const std::string& where) {
  if (!spec.is_object() || !spec.contains("family")) {
    throw InvalidInputError("density spec: " + where +
                            " must be an object with a \"family\" key");
  }
  const std::string family = spec.at("family").get<std::string>();
  auto num = [&](const char* key) {
    if (!spec.contains(key) || !spec.at(key).is_number()) {
      throw InvalidInputError("density spec: " + where + "." + key +
                              " must be a number for family " + family);
    }
    return spec.at(key).get<double>();
  };
  if (family == "uniform-power") return BaseDensity::uniform_power(num("alpha"));
  if (family == "truncated-exponential") {
    return BaseDensity::truncated_exponential(num("lambda"));
  }
  if (family == "beta") return BaseDensity::beta(num("alpha"), num("beta"));
  throw InvalidInputError("density spec: unknown base family \"" + family +
                          "\" in " + where);
}

Orientation orientation_from_json(const json& j) {
  const std::string s = j.get<std::string>();
  if (s == "dmv") return Orientation::DMV;
  if (s == "imv") return Orientation::IMV;
  throw InvalidInputError("density spec: orientation must be \"dmv\" or "
                          "\"imv\", got \"" + s + "\"");
}

}  // namespace

Density density_from_json_text(const std::string& json_text) {
  json spec;
  try {
    spec = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidInputError(std::string("density spec: invalid JSON: ") +
                            e.what());
  }
  if (!spec.is_object() || !spec.contains("kind")) {
    throw InvalidInputError("density spec: expected an object with \"kind\"");
  }
  const std::string kind = spec.at("kind").get<std::string>();
  const json params = spec.value("params", json::object());
  auto get_a = [&](double fallback) {
    if (!spec.contains("a")) return fallback;
    if (!spec.at("a").is_number()) {
      throw InvalidInputError("density spec: \"a\" must be a number");
    }
    return spec.at("a").get<double>();
  };
  auto check_orientation = [&](Orientation required) {
    if (spec.contains("orientation") &&
        orientation_from_json(spec.at("orientation")) != required) {
      throw InvalidInputError("density spec: kind \"" + kind +
                              "\" fixes the opposite orientation");
    }
  };

  if (kind == "uniform") {
    Orientation o = spec.contains("orientation")
                        ? orientation_from_json(spec.at("orientation"))
                        : Orientation::DMV;
    return Density::uniform_triangle(o, get_a(1.0));
  }
  if (kind == "ordered-decreasing") {
    check_orientation(Orientation::DMV);
    return Density::ordered_decreasing(
        base_density_from_json(params.value("g", json()), "params.g"),
        get_a(1.0));
  }
  if (kind == "conditional-decreasing") {
    check_orientation(Orientation::DMV);
    return Density::conditional_decreasing(
        base_density_from_json(params.value("g1", json()), "params.g1"),
        base_density_from_json(params.value("g2", json()), "params.g2"));
  }
  if (kind == "scale-invariant") {
    check_orientation(Orientation::DMV);
    return Density::scale_invariant(
        base_density_from_json(params.value("g", json()), "params.g"));
  }
  if (kind == "ordered-increasing") {
    check_orientation(Orientation::IMV);
    return Density::ordered_increasing(
        base_density_from_json(params.value("g", json()), "params.g"),
        get_a(1.0));
  }
  if (kind == "example3") {
    check_orientation(Orientation::IMV);
    return Density::example3_imv();
  }
  if (kind == "grid") {
    if (!spec.contains("grid") || !spec.at("grid").is_object()) {
      throw InvalidInputError("density spec: kind \"grid\" needs a \"grid\" "
                              "object with n1, n2, values");
    }
    const json& g = spec.at("grid");
    if (!g.contains("n1") || !g.contains("n2") || !g.contains("values") ||
        !g.at("values").is_array()) {
      throw InvalidInputError("density spec: grid needs n1, n2 and a values "
                              "array");
    }
    Orientation o = spec.contains("orientation")
                        ? orientation_from_json(spec.at("orientation"))
                        : Orientation::DMV;
    std::vector<double> values;
    values.reserve(g.at("values").size());
    for (const auto& v : g.at("values")) {
      if (!v.is_number()) {
        throw InvalidInputError("density spec: grid values must be numbers");
      }
      values.push_back(v.get<double>());
    }
    return Density::grid(Domain{o, get_a(1.0)}, g.at("n1").get<int>(),
                         g.at("n2").get<int>(), std::move(values));
  }
  throw InvalidInputError("density spec: unknown kind \"" + kind + "\"");
}

Density density_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidInputError("density spec: cannot open file " + path);
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return density_from_json_text(buf.str());
}

}  // namespace mechlab
