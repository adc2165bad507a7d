// SPDX-License-Identifier: MIT
#include "mechlab/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mechlab/phi.hpp"
#include "mechlab/quadrature.hpp"

namespace mechlab {

namespace {

constexpr int kMaxSteps = 64;
constexpr double kEq = 1e-12;  // equality slack for step levels

void require_dmv(const Density& d, const char* op) {
  if (d.domain().orientation != Orientation::DMV) {
    throw WrongOrientationError(std::string(op) +
                                " requires the DMV orientation");
  }
}

}  // namespace

StepLineMechanism::StepLineMechanism(double t10, std::vector<Step> steps)
    : t10_(t10) {
  if (!(t10 >= 0.0 && t10 <= 1.0)) {
    throw InvalidInputError("line mechanism: t10 must lie in [0,1]");
  }
  if (static_cast<int>(steps.size()) > kMaxSteps) {
    throw InvalidInputError("line mechanism: more than 64 steps");
  }
  double prev_b = -1.0, prev_q = 0.0;
  for (const Step& s : steps) {
    if (!std::isfinite(s.b) || !std::isfinite(s.q) || s.b < 0.0 ||
        s.q < 0.0 || s.q > 1.0) {
      throw InvalidInputError("line mechanism: step outside [0,inf)x[0,1]");
    }
    if (s.b <= prev_b) {
      throw InvalidInputError(
          "line mechanism: breakpoints must be strictly increasing");
    }
    if (s.q > 0.0 && s.q <= prev_q) {
      throw InvalidInputError(
          "line mechanism: allocations must be strictly increasing");
    }
    prev_b = s.b;
    if (s.q > 0.0) prev_q = s.q;
  }
  // Steps with q = 0 are inert (q2 is already 0 below the first breakpoint).
  for (const Step& s : steps) {
    if (s.q > 0.0) steps_.push_back(s);
  }
}

StepLineMechanism StepLineMechanism::from_deterministic(
    const DeterministicMechanism& d) {
  if (!(d.p1 >= 0.0 && d.p1 <= 1.0)) {
    throw InvalidInputError(
        "from_deterministic: p1 must lie in [0,1] for a line mechanism");
  }
  if (!(d.p2 >= 0.0)) {
    throw InvalidInputError("from_deterministic: p2 must be nonnegative");
  }
  return StepLineMechanism(d.p1, {{d.p2, 1.0}});
}

double StepLineMechanism::q2_at(double v2) const {
  double q = 0.0;
  for (const Step& s : steps_) {
    if (s.b <= v2) q = s.q;
    else break;
  }
  return q;
}

double StepLineMechanism::u1(double v2) const {
  double u = 1.0 - t10_;
  for (size_t k = 0; k < steps_.size(); ++k) {
    const double from = steps_[k].b;
    if (v2 <= from) break;
    const double to =
        k + 1 < steps_.size() ? std::min(steps_[k + 1].b, v2) : v2;
    u += steps_[k].q * (to - from);
  }
  return u;
}

double StepLineMechanism::t1(double v2) const {
  return v2 * q2_at(v2) + 1.0 - u1(v2);
}

double payoff_line(const StepLineMechanism& m, double v1, double v2) {
  return std::max(0.0, m.u1(v2) - (1.0 - v1));
}

double alpha_of(const StepLineMechanism& m, double a) {
  if (!(a > 0.0)) throw InvalidInputError("alpha_of: a must be positive");
  // x + u(1, a x) - 1 is strictly increasing with opposite signs at 0 and 1.
  auto excess = [&](double x) { return x + m.u1(a * x) - 1.0; };
  double lo = 0.0, hi = 1.0;
  if (excess(lo) >= 0.0) return 0.0;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<std::array<double, 2>> z0_boundary(const StepLineMechanism& m,
                                               double a, int n) {
  if (n < 2) throw InvalidInputError("z0_boundary: need n >= 2 points");
  const double top = a * alpha_of(m, a);
  std::vector<std::array<double, 2>> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double v2 = top * i / (n - 1);
    pts.push_back({1.0 - m.u1(v2), v2});
  }
  return pts;
}

MechanismDiagnostics diagnose(const StepLineMechanism& m, double a) {
  MechanismDiagnostics d;
  d.alpha = alpha_of(m, a);
  const double aalpha = a * d.alpha;
  const auto& steps = m.steps();
  d.v2_lower = steps.empty() ? a : std::min(steps.front().b, a);
  d.v2_upper = a;
  if (!steps.empty() && steps.back().q >= 1.0 - kEq) {
    d.v2_upper = std::min(steps.back().b, a);
  }
  d.qbar2 = 0.0;
  if (d.alpha > 0.0) {
    for (const Step& s : steps) {
      if (s.b < aalpha) d.qbar2 = s.q;
    }
  }
  const double q_top = m.q2_at(aalpha);
  bool two_level_above = std::abs(q_top - d.qbar2) <= kEq;
  bool three_level = true;
  for (const Step& s : steps) {
    if (s.b > a) break;
    if (s.b > aalpha && std::abs(s.q - 1.0) > kEq &&
        std::abs(s.q - d.qbar2) > kEq) {
      two_level_above = false;
    }
    if (std::abs(s.q - q_top) > kEq && std::abs(s.q - 1.0) > kEq) {
      three_level = false;
    }
  }
  d.is_constrained = two_level_above || std::abs(q_top - 1.0) <= kEq;
  d.is_semi_deterministic = three_level;
  return d;
}

StepLineMechanism straighten(const StepLineMechanism& m, double a,
                             double v2s) {
  const double aalpha = a * alpha_of(m, a);
  if (!(v2s > 0.0) || v2s > aalpha + 1e-12) {
    throw BadCutError("straighten: cut must lie in (0, a*alpha]");
  }
  const double u_cut = m.u1(v2s);
  const double t10s = std::clamp(1.0 - u_cut, 0.0, 1.0);
  std::vector<Step> steps;
  const double q_cut = m.q2_at(v2s);
  if (q_cut > 0.0) steps.push_back({v2s, q_cut});
  for (const Step& s : m.steps()) {
    if (s.b > v2s) steps.push_back(s);
  }
  return StepLineMechanism(t10s, std::move(steps));
}

StepLineMechanism cover(const StepLineMechanism& m, double a) {
  const double aalpha = a * alpha_of(m, a);
  const double q_top = m.q2_at(aalpha);
  std::vector<Step> steps;
  if (q_top > 0.0) {
    // Below a*alpha the cover offers (q_top, t(1,a*alpha)) exactly to the v2
    // that can afford it: v2 q_top >= t(1,a*alpha) - t(1,0).
    const double cut =
        std::clamp((m.t1(aalpha) - m.t10()) / q_top, 0.0, aalpha);
    steps.push_back({cut, q_top});
  }
  for (const Step& s : m.steps()) {
    if (s.b > aalpha && s.q > q_top) steps.push_back(s);
  }
  return StepLineMechanism(m.t10(), std::move(steps));
}

// ---------------------------------------------------------------------------
// Revenue routes
// ---------------------------------------------------------------------------

double revenue_direct(const Density& density,
                      const DeterministicMechanism& m) {
  if (!(m.p1 >= 0.0) || !(m.p2 >= 0.0) || !std::isfinite(m.p1) ||
      !std::isfinite(m.p2)) {
    throw InvalidInputError("revenue_direct: prices must be >= 0");
  }
  const Domain& dom = density.domain();
  auto hi = [&](double y) { return dom.v1_hi(y); };
  // Exactly one unit: v1 >= p1 and v2 < p2.
  const double p_one = quad::integrate2(
      [&](double x, double y) { return density.f(x, y); }, 0.0,
      std::min(m.p2, dom.v2_max()),
      [&](double y) { return std::max(dom.v1_lo(y), m.p1); }, hi, 5e-9);
  // Both units: v2 >= p2 and v1 + v2 >= p1 + p2.
  const double p_both = quad::integrate2(
      [&](double x, double y) { return density.f(x, y); },
      std::min(m.p2, dom.v2_max()), dom.v2_max(),
      [&](double y) { return std::max(dom.v1_lo(y), m.p1 + m.p2 - y); }, hi,
      5e-9);
  return m.p1 * p_one + (m.p1 + m.p2) * p_both;
}

namespace {

/// Breakpoints of m inside (0, hi), plus {0, hi}, ascending.
std::vector<double> segment_cuts(const StepLineMechanism& m, double hi,
                                 double extra = -1.0) {
  std::vector<double> cuts{0.0, hi};
  for (const Step& s : m.steps()) {
    if (s.b > 0.0 && s.b < hi) cuts.push_back(s.b);
  }
  if (extra > 0.0 && extra < hi) cuts.push_back(extra);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double x, double y) { return y - x < 1e-14; }),
             cuts.end());
  return cuts;
}

}  // namespace

double revenue_direct(const Density& density, const StepLineMechanism& m) {
  require_dmv(density, "revenue_direct(line)");
  const Domain& dom = density.domain();
  const double a = dom.a;
  const double aalpha = a * alpha_of(m, a);
  // t(1, v2) is constant between breakpoints; type v pays it iff
  // v1 >= 1 - u(1, v2). Integrate piecewise so every integrand is smooth.
  const std::vector<double> cuts = segment_cuts(m, a, aalpha);
  const double seg_tol = 1e-8 / static_cast<double>(cuts.size());
  double rev = 0.0;
  for (size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k], hi = cuts[k + 1];
    const double pay = m.t1(0.5 * (lo + hi));
    if (pay <= 0.0) continue;
    const double mass = quad::integrate2(
        [&](double x, double y) { return density.f(x, y); }, lo, hi,
        [&](double y) {
          return std::min(1.0, std::max(y / a, 1.0 - m.u1(y)));
        },
        [](double) { return 1.0; }, seg_tol);
    rev += pay * mass;
  }
  return rev;
}

double revenue_phi_route(const Density& density, const StepLineMechanism& m) {
  require_dmv(density, "revenue_phi_route");
  const Domain& dom = density.domain();
  const double a = dom.a;
  const double aalpha = a * alpha_of(m, a);
  const PhiEvaluator ev(density);

  // Types below the a*alpha line: IntInt_{1-u(1,v2)}^{1} phi.
  double rev = 0.0;
  {
    const std::vector<double> cuts = segment_cuts(m, aalpha);
    const double seg_tol = 2e-9 / static_cast<double>(cuts.size());
    for (size_t k = 0; k + 1 < cuts.size(); ++k) {
      rev += quad::integrate2([&](double x, double y) { return ev(x, y); },
                              cuts[k], cuts[k + 1],
                              [&](double y) { return 1.0 - m.u1(y); },
                              [](double) { return 1.0; }, seg_tol);
    }
  }
  // Types above: the fixed triangle integral plus the diagonal payoff term.
  rev += quad::integrate2([&](double x, double y) { return ev(x, y); },
                          aalpha, a, [&](double y) { return y / a; },
                          [](double) { return 1.0; }, 2e-9);
  {
    const std::vector<double> cuts = segment_cuts(m, a, aalpha);
    const double seg_tol = 2e-9 / static_cast<double>(cuts.size());
    for (size_t k = 0; k + 1 < cuts.size(); ++k) {
      if (cuts[k] < aalpha) continue;
      rev += quad::integrate(
          [&](double y) {
            const double u_diag =
                std::max(0.0, m.u1(y) - (1.0 - y / a));
            return u_diag * ev(y / a, y);
          },
          cuts[k], cuts[k + 1], seg_tol);
    }
  }
  return rev;
}

// ---------------------------------------------------------------------------
// Payoff-grid route
// ---------------------------------------------------------------------------

namespace {

struct BilinearGrid {
  const PayoffGrid& u;
  double v1max, v2max;

  double operator()(double x, double y) const {
    const int n1 = u.n1, n2 = u.n2;
    double tx = std::clamp(x / v1max, 0.0, 1.0) * (n1 - 1);
    double ty = std::clamp(y / v2max, 0.0, 1.0) * (n2 - 1);
    const int i = std::min(static_cast<int>(tx), n1 - 2);
    const int j = std::min(static_cast<int>(ty), n2 - 2);
    const double fx = tx - i, fy = ty - j;
    const auto& v = u.values;
    return (1.0 - fx) * (1.0 - fy) * v[j * n1 + i] +
           fx * (1.0 - fy) * v[j * n1 + i + 1] +
           (1.0 - fx) * fy * v[(j + 1) * n1 + i] +
           fx * fy * v[(j + 1) * n1 + i + 1];
  }
};

// 4-point Gauss-Legendre rule on [-1, 1]; exact through degree 7, ample for
// a bilinear payoff times a smooth density over one grid cell.
constexpr std::array<double, 4> kG4X{-0.8611363115940526, -0.3399810435848563,
                                     0.3399810435848563, 0.8611363115940526};
constexpr std::array<double, 4> kG4W{0.3478548451374538, 0.6521451548625461,
                                     0.6521451548625461, 0.3478548451374538};

}  // namespace

double revenue_from_payoff_grid(const Density& density, const PayoffGrid& u) {
  if (u.n1 < 2 || u.n2 < 2 ||
      u.values.size() != static_cast<size_t>(u.n1) * u.n2) {
    throw InvalidInputError("payoff grid: need n1, n2 >= 2 matching values");
  }
  const Domain& dom = density.domain();
  const BilinearGrid grid{u, dom.v1_max(), dom.v2_max()};
  const bool dmv = dom.orientation == Orientation::DMV;

  // Edge term: the payoff of the top types weighted by the edge density.
  double rev = 0.0;
  if (dmv) {
    for (int j = 0; j + 1 < u.n2; ++j) {
      const double ylo = dom.v2_max() * j / (u.n2 - 1);
      const double yhi = dom.v2_max() * (j + 1) / (u.n2 - 1);
      rev += quad::integrate(
          [&](double y) { return grid(1.0, y) * density.f(1.0, y); }, ylo,
          yhi, 1e-12);
    }
  } else {
    for (int i = 0; i + 1 < u.n1; ++i) {
      const double xlo = dom.v1_max() * i / (u.n1 - 1);
      const double xhi = dom.v1_max() * (i + 1) / (u.n1 - 1);
      rev += quad::integrate(
          [&](double x) { return grid(x, 1.0) * density.f(x, 1.0); }, xlo,
          xhi, 1e-12);
    }
  }

  // Interior term: - IntInt u(v) [3 f(v) + v . grad f(v)] dv, cell by cell.
  auto weighted = [&](double x, double y) {
    const auto g = density.grad_f(x, y);
    return grid(x, y) * (3.0 * density.f(x, y) + x * g[0] + y * g[1]);
  };
  const double a = dom.a;
  for (int j = 0; j + 1 < u.n2; ++j) {
    const double y0 = dom.v2_max() * j / (u.n2 - 1);
    const double y1 = dom.v2_max() * (j + 1) / (u.n2 - 1);
    for (int i = 0; i + 1 < u.n1; ++i) {
      const double x0 = dom.v1_max() * i / (u.n1 - 1);
      const double x1 = dom.v1_max() * (i + 1) / (u.n1 - 1);
      const bool inside = dmv ? (y1 <= a * x0) : (x1 <= a * y0);
      const bool outside = dmv ? (y0 >= a * x1) : (x0 >= a * y1);
      if (outside) continue;
      if (inside) {
        const double hx = 0.5 * (x1 - x0), cx = 0.5 * (x0 + x1);
        const double hy = 0.5 * (y1 - y0), cy = 0.5 * (y0 + y1);
        double cell = 0.0;
        for (int r = 0; r < 4; ++r) {
          for (int c = 0; c < 4; ++c) {
            cell += kG4W[r] * kG4W[c] *
                    weighted(cx + hx * kG4X[c], cy + hy * kG4X[r]);
          }
        }
        rev -= cell * hx * hy;
      } else {
        rev -= quad::integrate2(
            weighted, y0, y1,
            [&](double y) { return dmv ? std::max(x0, y / a) : x0; },
            [&](double y) { return dmv ? x1 : std::min(x1, a * y); }, 1e-11);
      }
    }
  }
  return rev;
}

PayoffGrid payoff_grid_of(const StepLineMechanism& m, const Domain& domain,
                          int n) {
  if (n < 2) throw InvalidInputError("payoff_grid_of: need n >= 2");
  if (domain.orientation != Orientation::DMV) {
    throw WrongOrientationError("payoff_grid_of requires DMV");
  }
  PayoffGrid g;
  g.n1 = g.n2 = n;
  g.values.resize(static_cast<size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    const double v2 = domain.v2_max() * j / (n - 1);
    const double u_top = m.u1(v2);
    for (int i = 0; i < n; ++i) {
      const double v1 = domain.v1_max() * i / (n - 1);
      g.values[static_cast<size_t>(j) * n + i] =
          std::max(0.0, u_top - (1.0 - v1));
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

double number_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw InvalidInputError(std::string("mechanism JSON: missing number \"") +
                            key + "\"");
  }
  return j.at(key).get<double>();
}

}  // namespace

AnyMechanism mechanism_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw InvalidInputError(std::string("mechanism JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw InvalidInputError("mechanism JSON: need an object with \"kind\"");
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "deterministic") {
    return DeterministicMechanism{number_field(j, "p1"),
                                  number_field(j, "p2")};
  }
  if (kind == "line") {
    const double t10 = number_field(j, "t10");
    if (!j.contains("steps") || !j.at("steps").is_array()) {
      throw InvalidInputError("mechanism JSON: line needs \"steps\" array");
    }
    std::vector<Step> steps;
    for (const auto& e : j.at("steps")) {
      if (!e.is_array() || e.size() != 2 || !e.at(0).is_number() ||
          !e.at(1).is_number()) {
        throw InvalidInputError(
            "mechanism JSON: each step must be a [b, q] pair");
      }
      steps.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
    }
    return StepLineMechanism(t10, std::move(steps));
  }
  throw InvalidInputError("mechanism JSON: unknown kind \"" + kind + "\"");
}

AnyMechanism mechanism_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open mechanism file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return mechanism_from_json_text(ss.str());
}

}  // namespace mechlab
