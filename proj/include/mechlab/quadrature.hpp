// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>

#include "mechlab/kernels.hpp"

/// Composite Gauss-Legendre quadrature, 64 nodes per panel, with adaptive
/// panel splitting to an absolute tolerance. Deterministic: the panel tree
/// depends only on the integrand values, never on scheduling.
namespace mechlab::quad {

inline constexpr int kPanelNodes = 64;

/// Nodes of the 64-point Gauss-Legendre rule on [-1, 1], ascending.
const std::array<double, kPanelNodes>& gl64_nodes();

/// Weights matching gl64_nodes().
const std::array<double, kPanelNodes>& gl64_weights();

/// One non-adaptive 64-node panel over [a, b].
template <class F>
double panel_integral(F&& f, double a, double b) {
  if (!(b > a)) return 0.0;
  const auto& xs = gl64_nodes();
  const auto& ws = gl64_weights();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  std::array<double, kPanelNodes> vals;
  for (int i = 0; i < kPanelNodes; ++i) vals[i] = f(mid + half * xs[i]);
  return half * kernels::dot(ws.data(), vals.data(), kPanelNodes);
}

namespace detail {

template <class F>
double adaptive(F& f, double a, double b, double whole, double abs_tol,
                int depth) {
  const double mid = 0.5 * (a + b);
  const double left = panel_integral(f, a, mid);
  const double right = panel_integral(f, mid, b);
  const double refined = left + right;
  if (std::abs(refined - whole) <= abs_tol || depth >= 24) return refined;
  return adaptive(f, a, mid, left, 0.5 * abs_tol, depth + 1) +
         adaptive(f, mid, b, right, 0.5 * abs_tol, depth + 1);
}

}  // namespace detail

/// Adaptive integral of f over [a, b] to absolute tolerance abs_tol.
template <class F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-9) {
  if (!(b > a)) return 0.0;
  const double whole = panel_integral(f, a, b);
  return detail::adaptive(f, a, b, whole, abs_tol, 0);
}

/// Adaptive double integral of f(x, y) over
///   { (x, y) : ylo <= y <= yhi, xlo(y) <= x <= xhi(y) }.
/// The inner integrals run at a tolerance tightened by the outer range so the
/// total absolute error stays near abs_tol.
template <class F, class Lo, class Hi>
double integrate2(F&& f, double ylo, double yhi, Lo&& xlo, Hi&& xhi,
                  double abs_tol = 1e-9) {
  if (!(yhi > ylo)) return 0.0;
  const double inner_tol =
      std::max(abs_tol / (4.0 * std::max(yhi - ylo, 1.0)), 1e-15);
  auto outer = [&](double y) {
    return integrate([&](double x) { return f(x, y); }, xlo(y), xhi(y),
                     inner_tol);
  };
  return integrate(outer, ylo, yhi, 0.5 * abs_tol);
}

}  // namespace mechlab::quad
