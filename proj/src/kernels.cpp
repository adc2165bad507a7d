// SPDX-License-Identifier: MIT
#include "mechlab/kernels.hpp"

namespace mechlab::kernels {

namespace detail {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

#if !defined(MECHLAB_BUILD_AVX2)
// Stubs so the dispatcher links on non-x86 builds; never selected because
// build_has_avx2() is false.
double dot_avx2(const double* x, const double* y, std::size_t n) {
  return dot_scalar(x, y, n);
}
void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  axpy_scalar(a, x, y, n);
}
bool cpu_has_avx2() { return false; }
bool build_has_avx2() { return false; }
#else
bool build_has_avx2() { return true; }
#endif

}  // namespace detail

namespace {

Backend pick_default() {
  if (detail::build_has_avx2() && detail::cpu_has_avx2()) return Backend::Avx2;
  return Backend::Scalar;
}

Backend g_backend = pick_default();

}  // namespace

Backend active_backend() { return g_backend; }

bool force_backend(Backend backend) {
  if (backend == Backend::Avx2 &&
      !(detail::build_has_avx2() && detail::cpu_has_avx2())) {
    g_backend = Backend::Scalar;
    return false;
  }
  g_backend = backend;
  return true;
}

double dot(const double* x, const double* y, std::size_t n) {
  if (g_backend == Backend::Avx2) return detail::dot_avx2(x, y, n);
  return detail::dot_scalar(x, y, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  if (g_backend == Backend::Avx2) {
    detail::axpy_avx2(a, x, y, n);
    return;
  }
  detail::axpy_scalar(a, x, y, n);
}

}  // namespace mechlab::kernels
