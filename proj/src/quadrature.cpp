// SPDX-License-Identifier: MIT
#include "mechlab/quadrature.hpp"

#include <cmath>

namespace mechlab::quad {

namespace {

struct Gl64Table {
  std::array<double, kPanelNodes> nodes;
  std::array<double, kPanelNodes> weights;
};

// Nodes are the roots of the degree-64 Legendre polynomial, found by Newton
// iteration from the Chebyshev-like initial guess; weights from the standard
// derivative formula. Converges to machine precision in a handful of steps.
Gl64Table compute_gl64() {
  Gl64Table t{};
  const int n = kPanelNodes;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // Evaluate P_n(x) and P_n'(x) by the three-term recurrence.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    t.nodes[i] = -x;
    t.nodes[n - 1 - i] = x;
    t.weights[i] = w;
    t.weights[n - 1 - i] = w;
  }
  return t;
}

const Gl64Table& table() {
  static const Gl64Table t = compute_gl64();
  return t;
}

}  // namespace

const std::array<double, kPanelNodes>& gl64_nodes() { return table().nodes; }

const std::array<double, kPanelNodes>& gl64_weights() {
  return table().weights;
}

}  // namespace mechlab::quad
