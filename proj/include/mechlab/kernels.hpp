// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>

/// Low-level array kernels used by the quadrature and LP hot loops.
///
/// Each kernel has a scalar reference implementation and, on x86-64, an AVX2
/// variant compiled in a separate translation unit with the wider ISA
/// enabled. The dispatcher probes CPU features once at startup and routes
/// calls to the best available variant; `force_backend` pins a variant for
/// equivalence testing. Results of the two variants agree up to floating
/// point reassociation (the vector variants sum in lanes), not bitwise.
namespace mechlab::kernels {

enum class Backend { Scalar, Avx2 };

/// Variant currently used by the dispatching entry points.
Backend active_backend();

/// Pin the dispatcher to one variant (testing hook). Requesting Avx2 on a
/// machine without AVX2 keeps the scalar variant and returns false.
bool force_backend(Backend backend);

/// Dot product sum_i x[i]*y[i].
double dot(const double* x, const double* y, std::size_t n);

/// y[i] += a * x[i].
void axpy(double a, const double* x, double* y, std::size_t n);

/// sum_i w[i] * f(nodes[i]) accumulated through a caller-filled value array:
/// kept as plain dot in practice; exposed here for symmetry of testing.

namespace detail {

double dot_scalar(const double* x, const double* y, std::size_t n);
void axpy_scalar(double a, const double* x, double* y, std::size_t n);

// Defined only when the AVX2 translation unit is built; the dispatcher never
// selects them otherwise.
double dot_avx2(const double* x, const double* y, std::size_t n);
void axpy_avx2(double a, const double* x, double* y, std::size_t n);

/// True when the running CPU reports AVX2 and FMA support.
bool cpu_has_avx2();

/// True when the AVX2 variants were compiled into this binary.
bool build_has_avx2();

}  // namespace detail

}  // namespace mechlab::kernels
