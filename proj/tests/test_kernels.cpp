// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mechlab/kernels.hpp"

namespace k = mechlab::kernels;

namespace {

std::vector<double> random_vec(std::mt19937& rng, std::size_t n) {
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

}  // namespace

TEST_CASE("scalar dot matches a plain loop") {
  std::mt19937 rng(7);
  for (const std::size_t n : {0u, 1u, 3u, 4u, 7u, 64u, 1000u}) {
    const auto x = random_vec(rng, n);
    const auto y = random_vec(rng, n);
    double expect = 0.0;
    for (std::size_t i = 0; i < n; ++i) expect += x[i] * y[i];
    CHECK(k::detail::dot_scalar(x.data(), y.data(), n) ==
          doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("scalar axpy matches a plain loop") {
  std::mt19937 rng(8);
  for (const std::size_t n : {0u, 1u, 5u, 64u, 257u}) {
    const auto x = random_vec(rng, n);
    auto y = random_vec(rng, n);
    auto expect = y;
    for (std::size_t i = 0; i < n; ++i) expect[i] += 2.5 * x[i];
    k::detail::axpy_scalar(2.5, x.data(), y.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(y[i] == doctest::Approx(expect[i]).epsilon(1e-15));
    }
  }
}

TEST_CASE("avx2 variants agree with the scalar reference") {
  if (!(k::detail::build_has_avx2() && k::detail::cpu_has_avx2())) {
    MESSAGE("AVX2 unavailable; dispatcher equivalence not exercised here");
    return;
  }
  std::mt19937 rng(9);
  for (const std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 63u, 64u,
                              65u, 1000u, 1001u}) {
    const auto x = random_vec(rng, n);
    const auto y = random_vec(rng, n);
    const double ds = k::detail::dot_scalar(x.data(), y.data(), n);
    const double dv = k::detail::dot_avx2(x.data(), y.data(), n);
    // Reassociation-only differences: bound relative to the L1 mass.
    double mass = 1e-300;
    for (std::size_t i = 0; i < n; ++i) mass += std::abs(x[i] * y[i]);
    CHECK(std::abs(ds - dv) / mass < 1e-13);

    auto ys = y;
    auto yv = y;
    k::detail::axpy_scalar(-1.75, x.data(), ys.data(), n);
    k::detail::axpy_avx2(-1.75, x.data(), yv.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(ys[i] - yv[i]) <=
            1e-13 * (std::abs(ys[i]) + std::abs(x[i]) + 1.0));
    }
  }
}

TEST_CASE("force_backend pins the dispatcher and reports availability") {
  const bool avx2_ok = k::detail::build_has_avx2() && k::detail::cpu_has_avx2();

  REQUIRE(k::force_backend(k::Backend::Scalar));
  CHECK(k::active_backend() == k::Backend::Scalar);

  const bool granted = k::force_backend(k::Backend::Avx2);
  CHECK(granted == avx2_ok);
  CHECK(k::active_backend() ==
        (avx2_ok ? k::Backend::Avx2 : k::Backend::Scalar));

  // Dispatching entry points follow the pinned backend and stay correct.
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0};
  const std::vector<double> y{5.0, 4.0, 3.0, 2.0, 1.0};
  CHECK(k::dot(x.data(), y.data(), x.size()) == doctest::Approx(35.0));

  std::vector<double> acc(x.size(), 1.0);
  k::axpy(2.0, x.data(), acc.data(), x.size());
  CHECK(acc[0] == doctest::Approx(3.0));
  CHECK(acc[4] == doctest::Approx(11.0));

  REQUIRE(k::force_backend(k::Backend::Scalar));
}
