// SPDX-License-Identifier: MIT
#include "mechlab/phi.hpp"

#include <algorithm>
#include <cmath>

#include "mechlab/quadrature.hpp"

namespace mechlab {

namespace {

constexpr int kMaxWitnesses = 16;

void require_dmv(const Density& d, const char* op) {
  if (d.domain().orientation != Orientation::DMV) {
    throw WrongOrientationError(std::string(op) +
                                " is defined on the DMV orientation only");
  }
}

/// 3 f(v) + v . grad f(v), the integrand of the phi definition and the
/// pointwise form of condition SC-H.
double sch_integrand(const Density& d, double v1, double v2) {
  const auto g = d.grad_f(v1, v2);
  return 3.0 * d.f(v1, v2) + v1 * g[0] + v2 * g[1];
}

}  // namespace

PhiEvaluator::PhiEvaluator(Density density)
    : density_(std::move(density)),
      mode_(density_.closed_form_phi() ? PhiMode::ClosedForm
                                       : PhiMode::Quadrature) {}

PhiEvaluator::PhiEvaluator(Density density, PhiMode mode)
    : density_(std::move(density)), mode_(mode) {
  if (mode_ == PhiMode::ClosedForm && !density_.closed_form_phi()) {
    throw InvalidInputError(
        "ClosedForm phi mode requested for a density without a closed form");
  }
}

double PhiEvaluator::operator()(double v1, double v2) const {
  require_dmv(density_, "phi");
  const double a = density_.domain().a;
  if (mode_ == PhiMode::ClosedForm) {
    switch (density_.kind()) {
      case DensityKind::UniformTriangle:
        return (6.0 * v1 - 4.0) / a;
      case DensityKind::OrderedDecreasing: {
        const BaseDensity& g = *density_.base_g();
        return (2.0 / a) * g.pdf(v1) * g.pdf(v2 / a) *
               ordered_w(v1, v2, g, a);
      }
      case DensityKind::ConditionalDecreasing: {
        const BaseDensity& g1 = *density_.base_g();
        const BaseDensity& g2 = *density_.base_g2();
        const double surv = 1.0 - g1.cdf(v2);
        const double tau2 = g2.pdf(v2) / surv;
        const double gamma =
            g2.elasticity(v2) + v2 * g1.pdf(v2) / surv;
        return tau2 * (v1 * g1.pdf(v1) -
                       (1.0 - g1.cdf(v1)) * (2.0 + gamma));
      }
      case DensityKind::ScaleInvariant: {
        const BaseDensity& g = *density_.base_g();
        return g.pdf(v1) -
               2.0 * quad::integrate(
                         [&](double x) { return g.pdf(x) / x; }, v1, 1.0,
                         1e-11);
      }
      default:
        break;
    }
  }
  // Generic quadrature route straight from the definition.
  const double boundary = density_.f(1.0, v2);
  if (v1 >= 1.0) return boundary;
  return boundary -
         quad::integrate(
             [&](double x) { return sch_integrand(density_, x, v2); }, v1,
             1.0, 1e-10);
}

double phi(const PhiEvaluator& ev, double v1, double v2) {
  return ev(v1, v2);
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds:
      return "holds";
    case Verdict::Fails:
      return "fails";
    case Verdict::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

namespace {

Verdict verdict_from_worst(double worst, double tol) {
  if (worst <= tol) return Verdict::Holds;
  if (worst <= 10.0 * tol) return Verdict::Inconclusive;
  return Verdict::Fails;
}

}  // namespace

CheckResult check_sch(const PhiEvaluator& ev, int grid_n, double tol) {
  const Density& d = ev.density();
  const Domain& dom = d.domain();
  CheckResult res;
  const int n = grid_n;
  const bool dmv = dom.orientation == Orientation::DMV;
  for (int j = 1; j <= n; ++j) {
    // Interior sweep: DMV scans horizontal slices v2 = const, IMV scans
    // vertical slices mirrored across the diagonal.
    const double outer = (dmv ? dom.a : 1.0) * j / (n + 1.0);
    for (int i = 1; i <= n; ++i) {
      double v1, v2;
      if (dmv) {
        v2 = outer;
        v1 = v2 / dom.a + (1.0 - v2 / dom.a) * i / (n + 1.0);
      } else {
        v2 = outer;
        v1 = dom.a * v2 * i / (n + 1.0);
      }
      const double s = sch_integrand(d, v1, v2);
      if (s < -tol) {
        res.worst = std::max(res.worst, -s);
        if (static_cast<int>(res.witnesses.size()) < kMaxWitnesses) {
          Witness w;
          w.condition = "sch";
          w.points = {{v1, v2}};
          w.values = {s};
          w.note = "3f + v.grad f below zero";
          if (dmv) {
            // Exhibit the definition's form of the violation: a pair
            // v1 < v1' on the same slice with phi decreasing.
            double h = std::min(1e-4, 0.5 * (1.0 - v1));
            for (int attempt = 0; attempt < 6 && h > 0.0; ++attempt) {
              const double lhs = ev(v1, v2), rhs = ev(v1 + h, v2);
              if (lhs > rhs) {
                w.points.push_back({v1 + h, v2});
                w.values = {lhs, rhs};
                w.note = "phi decreasing in v1";
                break;
              }
              h *= 0.25;
            }
          }
          res.witnesses.push_back(std::move(w));
        }
      }
    }
  }
  res.verdict = verdict_from_worst(res.worst, tol);
  return res;
}

CheckResult check_scv(const PhiEvaluator& ev, int grid_n, double tol) {
  require_dmv(ev.density(), "check_scv");
  const double a = ev.density().domain().a;
  CheckResult res;
  const int n = grid_n;
  for (int i = 1; i <= n; ++i) {
    const double v1 = static_cast<double>(i) / n;
    // Scan v2 upward along the column: after phi has fallen below -tol it
    // must never again exceed +tol (a second upward crossing).
    double neg_depth = 0.0;
    std::array<double, 2> neg_point{0.0, 0.0};
    double neg_value = 0.0;
    for (int j = 0; j <= n; ++j) {
      const double v2 = a * v1 * j / n;
      const double value = ev(v1, v2);
      if (value < -tol && -value > neg_depth) {
        neg_depth = -value;
        neg_point = {v1, v2};
        neg_value = value;
      } else if (value > tol && neg_depth > 0.0) {
        const double severity = std::min(neg_depth, value);
        res.worst = std::max(res.worst, severity);
        if (severity > 10.0 * tol &&
            static_cast<int>(res.witnesses.size()) < kMaxWitnesses) {
          Witness w;
          w.condition = "scv";
          w.points = {neg_point, {v1, v2}};
          w.values = {neg_value, value};
          w.note = "phi(v1,.) returns above zero after crossing below";
          res.witnesses.push_back(std::move(w));
        }
        break;  // one witness per column suffices
      }
    }
  }
  res.verdict = verdict_from_worst(res.worst, tol);
  return res;
}

CheckResult check_scd(const PhiEvaluator& ev, int grid_n, double tol) {
  require_dmv(ev.density(), "check_scd");
  const double a = ev.density().domain().a;
  CheckResult res;
  const int n = grid_n;
  // Cumulative diagonal integrals I(v2_j) = Int_{v2_j}^{a} phi(y/a, y) dy,
  // accumulated from the top so each segment is integrated once.
  std::vector<double> cum(n + 1, 0.0);
  auto diag = [&](double y) { return ev(y / a, y); };
  const double seg_tol = std::max(tol / (4.0 * n), 1e-14);
  for (int j = n - 1; j >= 0; --j) {
    const double lo = a * j / n, hi = a * (j + 1) / n;
    cum[j] = cum[j + 1] + quad::integrate(diag, lo, hi, seg_tol);
  }
  // Scan upward: once I exceeds +tol it must never fall below -tol again.
  double pos_height = 0.0;
  std::array<double, 2> pos_point{0.0, 0.0};
  double pos_value = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double v2 = a * j / n;
    const double value = cum[j];
    if (value > tol && value > pos_height) {
      pos_height = value;
      pos_point = {v2 / a, v2};
      pos_value = value;
    } else if (value < -tol && pos_height > 0.0) {
      const double severity = std::min(pos_height, -value);
      res.worst = std::max(res.worst, severity);
      if (severity > 10.0 * tol &&
          static_cast<int>(res.witnesses.size()) < kMaxWitnesses) {
        Witness w;
        w.condition = "scd";
        w.points = {pos_point, {v2 / a, v2}};
        w.values = {pos_value, value};
        w.note = "diagonal integral falls below zero after crossing above";
        res.witnesses.push_back(std::move(w));
      }
    }
  }
  res.verdict = verdict_from_worst(res.worst, tol);
  return res;
}

SCReport check_sc(const PhiEvaluator& ev, int grid_n, double tol) {
  require_dmv(ev.density(), "check_sc");
  SCReport report;
  report.grid_resolution = grid_n;
  report.tolerance = tol;
  CheckResult h = check_sch(ev, grid_n, tol);
  CheckResult v = check_scv(ev, grid_n, tol);
  CheckResult d = check_scd(ev, grid_n, tol);
  report.sch = h.verdict;
  report.scv = v.verdict;
  report.scd = d.verdict;
  auto append = [&report](std::vector<Witness>& ws) {
    for (auto& w : ws) report.witnesses.push_back(std::move(w));
  };
  append(h.witnesses);
  append(v.witnesses);
  append(d.witnesses);
  return report;
}

// ---------------------------------------------------------------------------
// Ordered / conditional model conditions
// ---------------------------------------------------------------------------

double ordered_w(double v1, double v2, const BaseDensity& g, double a) {
  const double gv = g.pdf(v1);
  if (gv == 0.0) {
    throw DivisionByZeroError("ordered_w: g(v1) = 0 at v1 = " +
                              std::to_string(v1));
  }
  return v1 - (1.0 - g.cdf(v1)) / gv * (2.0 + g.elasticity(v2 / a));
}

double ordered_wmin(double v2, const BaseDensity& g, double a) {
  const double x = v2 / a;
  const double gx = g.pdf(x);
  if (gx == 0.0) {
    throw DivisionByZeroError("ordered_wmin: g(v2/a) = 0 at v2 = " +
                              std::to_string(v2));
  }
  // (1 - G_min)/g_min simplifies to a (1 - G(x)) / (2 g(x)), which stays
  // finite at the apex v2 = a where G_min and g_min both vanish to 1 and 0.
  return (v2 - a * (1.0 - g.cdf(x)) / (2.0 * gx)) / (a * a);
}

namespace {

/// Shared single-crossing scanners for 1-D sequences. `from_above` forbids
/// the pattern (below -tol) ... (above +tol); `from_below` forbids
/// (above +tol) ... (below -tol).
struct ScanOutcome {
  double worst{0.0};
  bool violated{false};
  int first_idx{-1}, second_idx{-1};
  double first_val{0.0}, second_val{0.0};
};

template <class F>
ScanOutcome scan_from_above(F&& value_at, int count, double tol) {
  ScanOutcome out;
  double neg_depth = 0.0;
  int neg_idx = -1;
  double neg_val = 0.0;
  for (int k = 0; k < count; ++k) {
    const double x = value_at(k);
    if (x < -tol && -x > neg_depth) {
      neg_depth = -x;
      neg_idx = k;
      neg_val = x;
    } else if (x > tol && neg_depth > 0.0) {
      const double severity = std::min(neg_depth, x);
      if (severity > out.worst) {
        out.worst = severity;
        out.violated = true;
        out.first_idx = neg_idx;
        out.second_idx = k;
        out.first_val = neg_val;
        out.second_val = x;
      }
    }
  }
  return out;
}

template <class F>
ScanOutcome scan_from_below(F&& value_at, int count, double tol) {
  auto negated = [&](int k) { return -value_at(k); };
  ScanOutcome out = scan_from_above(negated, count, tol);
  out.first_val = -out.first_val;
  out.second_val = -out.second_val;
  return out;
}

}  // namespace

SCReport check_ordered_conditions(const BaseDensity& g, double a, int grid_n,
                                  double tol) {
  SCReport report;
  report.grid_resolution = grid_n;
  report.tolerance = tol;
  const int n = grid_n;

  // (i) elasticity bound eta_g >= -3/2, pointwise on the interior grid.
  double worst_h = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double x = static_cast<double>(i) / (n + 1);
    const double margin = g.elasticity(x) + 1.5;
    if (margin < -tol) {
      worst_h = std::max(worst_h, -margin);
      if (static_cast<int>(report.witnesses.size()) < kMaxWitnesses) {
        report.witnesses.push_back(
            {"sch", {{x, 0.0}}, {g.elasticity(x)}, "eta_g below -3/2"});
      }
    }
  }
  report.sch = verdict_from_worst(worst_h, tol);

  // (ii) W(v1, .) crosses zero at most once from above, for every v1.
  double worst_v = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double v1 = static_cast<double>(i) / (n + 1);
    auto w_at = [&](int j) {
      return ordered_w(v1, a * j / static_cast<double>(n), g, a);
    };
    ScanOutcome out = scan_from_above(w_at, n + 1, tol);
    if (out.violated) {
      worst_v = std::max(worst_v, out.worst);
      if (static_cast<int>(report.witnesses.size()) < kMaxWitnesses) {
        report.witnesses.push_back(
            {"scv",
             {{v1, a * out.first_idx / static_cast<double>(n)},
              {v1, a * out.second_idx / static_cast<double>(n)}},
             {out.first_val, out.second_val},
             "W(v1,.) returns above zero after crossing below"});
      }
    }
  }
  report.scv = verdict_from_worst(worst_v, tol);

  // (iii) W_min crosses zero at most once from below.
  auto wmin_at = [&](int j) {
    // Stay strictly inside (0, a): W_min needs g(v2/a) > 0.
    const double v2 = a * (j + 1) / static_cast<double>(n + 2);
    return ordered_wmin(v2, g, a);
  };
  ScanOutcome out = scan_from_below(wmin_at, n + 1, tol);
  if (out.violated) {
    if (static_cast<int>(report.witnesses.size()) < kMaxWitnesses) {
      report.witnesses.push_back(
          {"scd",
           {{0.0, a * (out.first_idx + 1) / static_cast<double>(n + 2)},
            {0.0, a * (out.second_idx + 1) / static_cast<double>(n + 2)}},
           {out.first_val, out.second_val},
           "W_min falls below zero after crossing above"});
    }
  }
  report.scd = verdict_from_worst(out.worst, tol);
  return report;
}

SCReport check_conditional_conditions(const BaseDensity& g1,
                                      const BaseDensity& g2, int grid_n,
                                      double tol) {
  SCReport report;
  report.grid_resolution = grid_n;
  report.tolerance = tol;
  const int n = grid_n;
  auto x_at = [&](int i) { return static_cast<double>(i + 1) / (n + 2); };

  // (i) eta_g1(v1) + eta_g2(v2) >= -3 on v1 >= v2: compare each eta_g2(v2)
  // against the minimum of eta_g1 over [v2, 1] (suffix minimum).
  std::vector<double> eta1(n), eta2(n);
  for (int i = 0; i < n; ++i) {
    eta1[i] = g1.elasticity(x_at(i));
    eta2[i] = g2.elasticity(x_at(i));
  }
  std::vector<double> suffix_min(n);
  double running = eta1[n - 1];
  for (int i = n - 1; i >= 0; --i) {
    running = std::min(running, eta1[i]);
    suffix_min[i] = running;
  }
  double worst_h = 0.0;
  for (int j = 0; j < n; ++j) {
    const double margin = suffix_min[j] + eta2[j] + 3.0;
    if (margin < -tol) {
      worst_h = std::max(worst_h, -margin);
      if (static_cast<int>(report.witnesses.size()) < kMaxWitnesses) {
        report.witnesses.push_back({"sch",
                                    {{x_at(j), x_at(j)}},
                                    {suffix_min[j] + eta2[j]},
                                    "eta_g1 + eta_g2 below -3"});
      }
    }
  }
  report.sch = verdict_from_worst(worst_h, tol);

  // (ii) gamma increasing and eta_g2 >= -2.
  auto gamma_at = [&](double v2) {
    return g2.elasticity(v2) + v2 * g1.pdf(v2) / (1.0 - g1.cdf(v2));
  };
  double worst_v = 0.0;
  double prev_gamma = gamma_at(x_at(0));
  for (int j = 1; j < n; ++j) {
    const double cur = gamma_at(x_at(j));
    if (cur < prev_gamma - tol) {
      worst_v = std::max(worst_v, prev_gamma - cur);
      if (static_cast<int>(report.witnesses.size()) < kMaxWitnesses) {
        report.witnesses.push_back({"scv",
                                    {{x_at(j - 1), x_at(j - 1)}, {x_at(j), x_at(j)}},
                                    {prev_gamma, cur},
                                    "gamma decreasing"});
      }
    }
    prev_gamma = cur;
  }
  double worst_eta2 = 0.0;
  int worst_eta2_idx = -1;
  for (int j = 0; j < n; ++j) {
    const double margin = eta2[j] + 2.0;
    if (margin < -tol && -margin > worst_eta2) {
      worst_eta2 = -margin;
      worst_eta2_idx = j;
    }
  }
  if (worst_eta2_idx >= 0 &&
      static_cast<int>(report.witnesses.size()) < kMaxWitnesses) {
    report.witnesses.push_back({"scv",
                                {{x_at(worst_eta2_idx), x_at(worst_eta2_idx)}},
                                {eta2[worst_eta2_idx]},
                                "eta_g2 below -2"});
  }
  report.scv = verdict_from_worst(std::max(worst_v, worst_eta2), tol);

  // (iii) eta_g2 >= -2 alone.
  report.scd = verdict_from_worst(worst_eta2, tol);
  return report;
}

double conditional_share_cdf(const Density& density, double c, double w) {
  if (!(c >= 0.0 && c <= 1.0)) {
    throw InvalidInputError("conditional_share_cdf: c must lie in [0,1]");
  }
  const Domain& dom = density.domain();
  if (!(w >= 0.0 && w <= dom.w_max())) {
    throw InvalidInputError(
        "conditional_share_cdf: w outside the range of v1+v2");
  }
  double lo, hi;
  if (dom.orientation == Orientation::DMV) {
    lo = std::max(w / (1.0 + dom.a), w - dom.a);
    hi = std::min(1.0, w);
  } else {
    lo = std::max(0.0, w - 1.0);
    hi = dom.a * w / (1.0 + dom.a);
  }
  auto slice = [&](double v1) { return density.f(v1, w - v1); };
  const double denom = hi > lo ? quad::integrate(slice, lo, hi, 1e-12) : 0.0;
  if (!(denom > 1e-14)) {
    throw ZeroDensitySliceError(
        "conditional_share_cdf: slice v1+v2=w carries no mass");
  }
  const double threshold = c * hi;
  if (threshold <= lo) return 0.0;
  const double num = quad::integrate(slice, lo, std::min(threshold, hi), 1e-12);
  return std::clamp(num / denom, 0.0, 1.0);
}

}  // namespace mechlab
