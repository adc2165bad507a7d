// SPDX-License-Identifier: MIT
#include "mechlab/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "mechlab/phi.hpp"
#include "mechlab/quadrature.hpp"

namespace mechlab {

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Interior:
      return "interior";
    case Regime::SeparateEdge:
      return "separate-edge";
    case Regime::Bundle:
      return "bundle";
  }
  return "?";
}

namespace {

void require_dmv(const Density& d, const char* op) {
  if (d.domain().orientation != Orientation::DMV) {
    throw WrongOrientationError(std::string(op) +
                                " requires the DMV orientation");
  }
}

/// A bundle at total price P as a posted-price menu; prices beyond 1 shift
/// onto the p1 = 1 edge (same revenue, normalized p1).
DeterministicMechanism bundle_prices(double total) {
  if (total <= 1.0) return {total, 0.0};
  return {1.0, total - 1.0};
}

// ---------------------------------------------------------------------------
// Coarse revenue surface: cell masses on an 800x800 decomposition of the
// bounding box, queried through prefix/suffix sums. Only used to locate the
// basin of the optimum; all reported revenues come from revenue_direct.
// ---------------------------------------------------------------------------

class CoarseSurface {
 public:
  static constexpr int kCells = 800;

  explicit CoarseSurface(const Density& density)
      : a_(density.domain().a),
        prefix_((kCells + 1) * (kCells + 1), 0.0),
        col_suffix_((kCells + 1) * (kCells + 1), 0.0) {
    const double hx = 1.0 / kCells, hy = a_ / kCells;
    const double sub_area = (hx / 4.0) * (hy / 4.0);
    std::vector<double> mass(static_cast<size_t>(kCells) * kCells, 0.0);
    for (int j = 0; j < kCells; ++j) {
      const double y0 = j * hy;
      for (int i = 0; i < kCells; ++i) {
        const double x0 = i * hx;
        if (y0 >= a_ * (x0 + hx)) continue;  // cell above the diagonal
        double cell = 0.0;
        for (int r = 0; r < 4; ++r) {
          const double y = y0 + (r + 0.5) * hy / 4.0;
          for (int c = 0; c < 4; ++c) {
            const double x = x0 + (c + 0.5) * hx / 4.0;
            if (y <= a_ * x) cell += density.f(x, y);
          }
        }
        mass[static_cast<size_t>(j) * kCells + i] = cell * sub_area;
      }
    }
    // prefix_[i][j] = mass of cells with x-index < i and y-index < j.
    for (int i = 1; i <= kCells; ++i) {
      for (int j = 1; j <= kCells; ++j) {
        at(prefix_, i, j) = mass[static_cast<size_t>(j - 1) * kCells + i - 1] +
                            at(prefix_, i - 1, j) + at(prefix_, i, j - 1) -
                            at(prefix_, i - 1, j - 1);
      }
    }
    // col_suffix_[i][j] = mass of column i cells with y-index >= j.
    for (int i = 0; i < kCells; ++i) {
      for (int j = kCells - 1; j >= 0; --j) {
        at(col_suffix_, i, j) = mass[static_cast<size_t>(j) * kCells + i] +
                                at(col_suffix_, i, j + 1);
      }
    }
  }

  double x_node(int i) const { return static_cast<double>(i) / kCells; }
  double y_node(int j) const { return a_ * j / kCells; }

  /// Approximate revenue at node prices (x_node(ip), y_node(jp)).
  double revenue_at(int ip, int jp) const {
    const double p1 = x_node(ip), p2 = y_node(jp);
    // One unit: x >= p1, y < p2.
    const double one =
        at(prefix_, kCells, jp) - at(prefix_, ip, jp);
    // Both units: y >= p2 and x + y >= p1 + p2, column by column.
    const double both = mass_above_sum(p1 + p2, jp);
    return p1 * one + (p1 + p2) * both;
  }

  /// Approximate mass of {x + y >= total, y >= y_node(jmin)}.
  double mass_above_sum(double total, int jmin) const {
    double sum = 0.0;
    for (int i = 0; i < kCells; ++i) {
      const double xc = (i + 0.5) / kCells;
      const double ylim = total - xc;
      int j = jmin;
      if (ylim > 0.0) {
        j = std::max(j, static_cast<int>(std::ceil(ylim / a_ * kCells - 0.5)));
      }
      if (j >= kCells) continue;
      sum += at(col_suffix_, i, std::max(j, 0));
    }
    return sum;
  }

 private:
  static double& at(std::vector<double>& v, int i, int j) {
    return v[static_cast<size_t>(i) * (kCells + 1) + j];
  }
  static double at(const std::vector<double>& v, int i, int j) {
    return v[static_cast<size_t>(i) * (kCells + 1) + j];
  }

  double a_;
  std::vector<double> prefix_;
  std::vector<double> col_suffix_;
};

// ---------------------------------------------------------------------------
// 1-D refinement: golden-section down to the quadrature noise floor, then a
// few rounds of parabolic polish with tighter integrals so the price is
// accurate to ~1e-7 despite the noisy objective.
// ---------------------------------------------------------------------------

constexpr double kInvPhi = 0.6180339887498949;

template <class F>
double golden_max(F&& f, double lo, double hi, double xtol) {
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > xtol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
    }
  }
  return 0.5 * (lo + hi);
}

template <class F>
double parabolic_polish(F&& f, double x, double lo, double hi, double h) {
  for (int round = 0; round < 3; ++round) {
    const double xl = std::max(lo, x - h), xr = std::min(hi, x + h);
    if (!(xr > xl)) break;
    // Keep the middle sample strictly inside the bracket.
    const double xm = std::clamp(x, xl + 0.25 * (xr - xl), xr - 0.25 * (xr - xl));
    const double fa = f(xl), fb = f(xm), fc = f(xr);
    const double num = (xm - xl) * (xm - xl) * (fb - fc) -
                       (xm - xr) * (xm - xr) * (fb - fa);
    const double den =
        (xm - xl) * (fb - fc) - (xm - xr) * (fb - fa);
    double next = xm;
    if (den > 1e-300) next = xm - 0.5 * num / den;  // den > 0 <=> concave fit
    if (!std::isfinite(next) || next < xl || next > xr) {
      next = fa > fc ? (fa > fb ? xl : xm) : (fc > fb ? xr : xm);
    }
    x = next;
    h *= 0.3;
  }
  return x;
}

template <class F, class G>
double refine_1d(F&& rough, G&& fine, double x0, double lo, double hi,
                 double window) {
  const double wlo = std::max(lo, x0 - window);
  const double whi = std::min(hi, x0 + window);
  double x = golden_max(rough, wlo, whi, 3e-6);
  return parabolic_polish(fine, x, lo, hi, 2e-4);
}

/// Newton on the interior first-order conditions from a nearby start. The
/// residuals are quadrature-clean where revenue comparisons are nearly flat,
/// so this sharpens an interior optimum to ~1e-10. Returns nullopt when the
/// iteration leaves the trust box around the start, hits a boundary, or the
/// conditions cannot be evaluated.
std::optional<DeterministicMechanism> polish_interior(const Density& density,
                                                      double p1, double p2) {
  const double a = density.domain().a;
  const double p10 = p1, p20 = p2;
  auto residuals = [&](double x, double y) {
    return check_necessary_conditions(density, x, y).residuals;
  };
  try {
    for (int it = 0; it < 12; ++it) {
      const auto r = residuals(p1, p2);
      if (std::abs(r[0]) < 1e-12 && std::abs(r[1]) < 1e-12) break;
      constexpr double h = 1e-6;
      const auto rx = residuals(p1 + h, p2);
      const auto ry = residuals(p1, p2 + h);
      const double j11 = (rx[0] - r[0]) / h, j12 = (ry[0] - r[0]) / h;
      const double j21 = (rx[1] - r[1]) / h, j22 = (ry[1] - r[1]) / h;
      const double det = j11 * j22 - j12 * j21;
      if (!(std::abs(det) > 1e-12)) return std::nullopt;
      double d1 = (j12 * r[1] - j22 * r[0]) / det;
      double d2 = (j21 * r[0] - j11 * r[1]) / det;
      const double step = std::max(std::abs(d1), std::abs(d2));
      if (step > 5e-3) {  // damp long steps
        d1 *= 5e-3 / step;
        d2 *= 5e-3 / step;
      }
      p1 += d1;
      p2 += d2;
      if (std::abs(p1 - p10) > 0.02 || std::abs(p2 - p20) > 0.02 ||
          !(p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < a * p1)) {
        return std::nullopt;
      }
      if (step < 1e-13) break;
    }
  } catch (const Error&) {
    return std::nullopt;
  }
  return DeterministicMechanism{p1, p2};
}

}  // namespace

OptResult optimize_deterministic(const Density& density) {
  require_dmv(density, "optimize_deterministic");
  const double a = density.domain().a;
  const CoarseSurface coarse(density);
  constexpr int kPriceGrid = 200;  // every 4th node of the 800-cell mesh
  constexpr int kStride = CoarseSurface::kCells / kPriceGrid;

  // Stage 1: coarse scan of the whole price box.
  int best_ip = 0, best_jp = 0;
  double best_coarse = -1.0;
  for (int gi = 0; gi <= kPriceGrid; ++gi) {
    for (int gj = 0; gj <= kPriceGrid; ++gj) {
      const double r = coarse.revenue_at(gi * kStride, gj * kStride);
      if (r > best_coarse) {
        best_coarse = r;
        best_ip = gi * kStride;
        best_jp = gj * kStride;
      }
    }
  }

  auto rev_rough = [&](double p1, double p2) {
    return revenue_direct(density, {p1, p2});
  };
  auto rev_fine = [&](double p1, double p2) {
    const DeterministicMechanism m{p1, p2};
    const Domain& dom = density.domain();
    auto hi = [&](double y) { return dom.v1_hi(y); };
    const double one = quad::integrate2(
        [&](double x, double y) { return density.f(x, y); }, 0.0,
        std::min(p2, dom.v2_max()),
        [&](double y) { return std::max(dom.v1_lo(y), p1); }, hi, 5e-12);
    const double both = quad::integrate2(
        [&](double x, double y) { return density.f(x, y); },
        std::min(p2, dom.v2_max()), dom.v2_max(),
        [&](double y) { return std::max(dom.v1_lo(y), p1 + p2 - y); }, hi,
        5e-12);
    return m.p1 * one + (m.p1 + m.p2) * both;
  };

  // Stage 2: coordinate golden-section + parabolic polish from the coarse
  // argmax, free to move anywhere in the box. The third direction (-1, +1)
  // keeps the total p1 + p2 fixed: the both-units region depends on the
  // prices only through that total, so the revenue surface has a shallow
  // valley along it that axis-wise moves alone zigzag across.
  double p1 = coarse.x_node(best_ip), p2 = coarse.y_node(best_jp);
  for (int round = 0; round < 8; ++round) {
    const double q1 = refine_1d([&](double x) { return rev_rough(x, p2); },
                                [&](double x) { return rev_fine(x, p2); }, p1,
                                0.0, 1.0, 0.02);
    const double q2 = refine_1d([&](double y) { return rev_rough(q1, y); },
                                [&](double y) { return rev_fine(q1, y); }, p2,
                                0.0, a, 0.02 * a);
    const double tlo = std::max(q1 - 1.0, -q2);
    const double thi = std::min(q1, a - q2);
    const double t = refine_1d(
        [&](double s) { return rev_rough(q1 - s, q2 + s); },
        [&](double s) { return rev_fine(q1 - s, q2 + s); }, 0.0, tlo, thi,
        0.02);
    const double moved =
        std::abs(q1 - t - p1) + std::abs(q2 + t - p2);
    p1 = q1 - t;
    p2 = q2 + t;
    if (moved < 1e-7) break;
  }

  // Stage 2.5: strictly interior points get a first-order-condition polish;
  // comparisons of nearly flat revenues cannot place the optimum this well.
  if (p2 > 1e-6 && a * p1 - p2 > 1e-6 && p1 > 1e-6 && p1 < 1.0 - 1e-6) {
    if (const auto polished = polish_interior(density, p1, p2)) {
      if (revenue_direct(density, *polished) >=
          revenue_direct(density, {p1, p2}) - 1e-12) {
        p1 = polished->p1;
        p2 = polished->p2;
      }
    }
  }

  // Search dust on the p2 = 0 boundary: when the optimum is a bundle, the
  // diagonal search ends within ~1e-8 of it, and (p1 + p2, 0) earns the same
  // revenue up to O(p2^2). Snap so the regime classification stays sharp.
  if (p2 > 0.0 && p2 < 1e-6 && p1 + p2 <= 1.0) {
    p1 += p2;
    p2 = 0.0;
  }

  // Stage 3: the two boundary families as explicit 1-D problems.
  double best_total = 0.0, best_total_rev = -1.0;
  for (int k = 0; k <= 2 * CoarseSurface::kCells; ++k) {
    const double total = (1.0 + a) * k / (2 * CoarseSurface::kCells);
    const double r = total * coarse.mass_above_sum(total, 0);
    if (r > best_total_rev) {
      best_total_rev = r;
      best_total = total;
    }
  }
  const double bundle_total = refine_1d(
      [&](double t) {
        const auto m = bundle_prices(t);
        return rev_rough(m.p1, m.p2);
      },
      [&](double t) {
        const auto m = bundle_prices(t);
        return rev_fine(m.p1, m.p2);
      },
      best_total, 0.0, 1.0 + a, 0.02 * (1.0 + a));

  int best_edge_node = 0;
  double best_edge_rev = -1.0;
  for (int i = 0; i <= CoarseSurface::kCells; ++i) {
    const double r = coarse.revenue_at(i, i);  // p2 = a*p1 aligns node-wise
    if (r > best_edge_rev) {
      best_edge_rev = r;
      best_edge_node = i;
    }
  }
  const double edge_p1 = refine_1d(
      [&](double x) { return rev_rough(x, a * x); },
      [&](double x) { return rev_fine(x, a * x); },
      coarse.x_node(best_edge_node), 0.0, 1.0, 0.02);

  // Assemble candidates with the one measuring stick, revenue_direct.
  auto classify = [&](const DeterministicMechanism& m) {
    if (m.p2 <= 1e-9) return Regime::Bundle;
    if (a * m.p1 <= m.p2 + 1e-9) return Regime::SeparateEdge;
    return Regime::Interior;
  };
  std::vector<Candidate> cands;
  {
    const DeterministicMechanism m{p1, p2};
    cands.push_back({m, revenue_direct(density, m), classify(m)});
  }
  {
    const DeterministicMechanism m = bundle_prices(bundle_total);
    cands.push_back({m, revenue_direct(density, m), Regime::Bundle});
  }
  {
    const DeterministicMechanism m{edge_p1, a * edge_p1};
    cands.push_back({m, revenue_direct(density, m), Regime::SeparateEdge});
  }

  OptResult out;
  out.candidates = cands;
  size_t win = 0;
  for (size_t k = 1; k < cands.size(); ++k) {
    const Candidate& c = cands[k];
    const Candidate& b = cands[win];
    if (c.revenue > b.revenue + 1e-12) {
      win = k;
    } else if (c.revenue >= b.revenue - 1e-12 &&
               (c.prices.p1 < b.prices.p1 - 1e-12 ||
                (std::abs(c.prices.p1 - b.prices.p1) <= 1e-12 &&
                 c.prices.p2 < b.prices.p2))) {
      win = k;  // tie on revenue: lower p1, then lower p2
    }
  }
  out.best = cands[win].prices;
  out.revenue = cands[win].revenue;
  out.regime = classify(out.best);
  if (out.regime == Regime::Interior) {
    try {
      out.foc_residuals =
          check_necessary_conditions(density, out.best.p1, out.best.p2)
              .residuals;
    } catch (const Error&) {
      out.foc_residuals.reset();
    }
  }
  return out;
}

NecessaryReport check_necessary_conditions(const Density& density, double p1,
                                           double p2) {
  require_dmv(density, "check_necessary_conditions");
  const double a = density.domain().a;
  if (!(p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < a)) {
    throw OnBoundaryError(
        "necessary conditions need interior prices 0<p1<1, 0<p2<a");
  }
  if (std::abs(a * p1 - p2) <= 1e-12) {
    throw OnBoundaryError(
        "necessary conditions do not apply on the edge a*p1 = p2");
  }
  NecessaryReport rep;
  if (a * p1 > p2) {
    rep.regime = Regime::Interior;
    const PhiEvaluator ev(density);
    const double alpha = (p1 + p2) / (1.0 + a);
    rep.residuals[0] = quad::integrate(
        [&](double v2) { return ev(p1, v2); }, 0.0, p2, 1e-10);
    rep.residuals[1] =
        quad::integrate(
            [&](double v2) { return ev((1.0 + a) * alpha - v2, v2); }, p2,
            a * alpha, 1e-10) +
        quad::integrate([&](double v2) { return ev(v2 / a, v2); }, a * alpha,
                        a, 1e-10);
    rep.phi_at_prices = ev(p1, p2);
    rep.phi_at_zero = ev(p1, 0.0);
  } else {
    rep.regime = Regime::SeparateEdge;
    const MarginalCdfs cdfs = marginal_cdfs(density);
    const MarginalPdfs pdfs = marginal_pdfs(density);
    const double f1 = pdfs.f1(p1), f2 = pdfs.f2(p2);
    if (f1 <= 0.0 || f2 <= 0.0) {
      throw DivisionByZeroError(
          "necessary conditions: marginal density vanishes at the prices");
    }
    rep.residuals[0] = p1 - (1.0 - cdfs.F1(p1)) / f1;
    rep.residuals[1] = p2 - (1.0 - cdfs.F2(p2)) / f2;
  }
  return rep;
}

UniformClosedForm uniform_closed_form(double a) {
  if (!(a > 0.0)) throw InvalidInputError("uniform_closed_form: need a > 0");
  UniformClosedForm out;
  out.unbundled.p1 = 2.0 / 3.0;
  out.unbundled.p2 =
      std::max(0.0, (2.0 * a - std::sqrt(a * (1.0 + a))) / 3.0);
  out.bundle_price = std::sqrt((1.0 + a) / 3.0);
  const Density uni = Density::uniform_triangle(Orientation::DMV, a);
  out.unbundled_revenue = revenue_direct(uni, out.unbundled);
  out.bundle_revenue = revenue_direct(uni, bundle_prices(out.bundle_price));
  out.optimal_regime = out.unbundled_revenue >= out.bundle_revenue
                           ? Regime::Interior
                           : Regime::Bundle;
  return out;
}

BundleResult imv_bundle_price(const Density& density) {
  if (density.domain().orientation != Orientation::IMV) {
    throw WrongOrientationError("imv_bundle_price requires the IMV orientation");
  }
  const SumDistribution sum(density);
  const double wmax = sum.w_max();
  auto excess = [&](double w) {
    return w * sum.tau(w) - (1.0 - sum.T_exact(w));
  };

  // Regularity scan: the virtual value w - (1-T(w))/tau(w) must be
  // nondecreasing where tau is meaningfully positive, and must change sign.
  constexpr int kScan = 1024;
  double prev_psi = 0.0;
  bool have_prev = false, regular = true;
  double lo = -1.0, hi = -1.0;
  for (int k = 1; k < kScan; ++k) {
    const double w = wmax * k / kScan;
    const double tau = sum.tau(w);
    if (tau <= 1e-9) continue;
    const double psi = w - (1.0 - sum.T(w)) / tau;
    if (have_prev && psi < prev_psi - 1e-9) regular = false;
    if (have_prev && prev_psi < 0.0 && psi >= 0.0 && lo < 0.0) {
      lo = wmax * (k - 1) / kScan;  // not exact, refined below
      hi = w;
    }
    prev_psi = psi;
    have_prev = true;
  }

  BundleResult out;
  if (regular && lo >= 0.0 && excess(lo) < 0.0 && excess(hi) >= 0.0) {
    double l = lo, h = hi;
    for (int it = 0; it < 60 && h - l > 1e-12; ++it) {
      const double mid = 0.5 * (l + h);
      (excess(mid) < 0.0 ? l : h) = mid;
    }
    out.price = 0.5 * (l + h);
    out.residual = std::abs(excess(out.price));
    out.regular = true;
    if (out.residual < 1e-8) {
      out.revenue = out.price * (1.0 - sum.T_exact(out.price));
      return out;
    }
  }

  // Fallback: exhaustive scan of w (1 - T(w)) at 1e-5 resolution, then a
  // local golden polish with the exact cdf.
  const int n = static_cast<int>(std::ceil(wmax / 1e-5));
  double best_w = 0.0, best_r = -1.0;
  for (int k = 0; k <= n; ++k) {
    const double w = wmax * k / n;
    const double r = w * (1.0 - sum.T(w));
    if (r > best_r) {
      best_r = r;
      best_w = w;
    }
  }
  const double step = wmax / n;
  out.price = golden_max(
      [&](double w) { return w * (1.0 - sum.T_exact(w)); },
      std::max(0.0, best_w - 2.0 * step), std::min(wmax, best_w + 2.0 * step),
      1e-10);
  out.regular = false;
  out.residual = std::abs(excess(out.price));
  out.revenue = out.price * (1.0 - sum.T_exact(out.price));
  return out;
}

std::vector<SweepRow> sweep(const std::function<Density(double)>& family,
                            double lo, double hi, int n) {
  if (n < 2) throw InvalidInputError("sweep: need n >= 2 rows");
  std::vector<SweepRow> rows;
  rows.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double param = lo + (hi - lo) * k / (n - 1);
    const OptResult r = optimize_deterministic(family(param));
    rows.push_back({param, r.best.p1, r.best.p2, r.regime, r.revenue});
  }
  return rows;
}

}  // namespace mechlab
