/* Copyright 2026 The protohead Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include <cmath>
#include <vector>

#include "doctest.h"
#include "protohead/rng.hpp"
#include "protohead/simd/kernels.hpp"

using namespace protohead;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-3.0, 3.0);
  return v;
}

// Bound on the difference between two summation orders of n products.
double order_bound(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] * b[i]);
  return 4.0 * static_cast<double>(a.size() + 1) * 1.2e-16 * s + 1e-300;
}

}  // namespace

TEST_CASE("scalar kernels match textbook loops exactly") {
  const auto& k = simd::kernels_for(simd::Level::Scalar);
  Rng rng(3);
  for (std::size_t n : {0u, 1u, 3u, 8u, 17u}) {
    auto a = random_vec(rng, n), b = random_vec(rng, n);
    double d = 0.0, q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d += a[i] * b[i];
      q += (a[i] - b[i]) * (a[i] - b[i]);
    }
    CHECK(k.dot(a.data(), b.data(), n) == d);
    CHECK(k.squared_distance(a.data(), b.data(), n) == q);
    auto y = b;
    k.axpy(0.5, a.data(), y.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == b[i] + 0.5 * a[i]);
  }
}

TEST_CASE("avx2 kernels agree with scalar within the summation-order bound") {
  if (!simd::level_available(simd::Level::Avx2)) {
    MESSAGE("AVX2 not available on this host; equivalence not exercised");
    return;
  }
  const auto& s = simd::kernels_for(simd::Level::Scalar);
  const auto& v = simd::kernels_for(simd::Level::Avx2);
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.below(70));
    auto a = random_vec(rng, n), b = random_vec(rng, n);
    CHECK(std::abs(s.dot(a.data(), b.data(), n) - v.dot(a.data(), b.data(), n)) <= order_bound(a, b));
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
    CHECK(std::abs(s.squared_distance(a.data(), b.data(), n) -
                   v.squared_distance(a.data(), b.data(), n)) <= order_bound(diff, diff));
    auto y1 = b, y2 = b;
    s.axpy(-1.25, a.data(), y1.data(), n);
    v.axpy(-1.25, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15 * (1 + std::abs(y1[i])));
  }
}

TEST_CASE("each level is deterministic") {
  Rng rng(5);
  auto a = random_vec(rng, 37), b = random_vec(rng, 37);
  for (auto level : {simd::Level::Scalar, simd::Level::Avx2}) {
    if (!simd::level_available(level)) continue;
    const auto& k = simd::kernels_for(level);
    const double first = k.dot(a.data(), b.data(), a.size());
    for (int i = 0; i < 10; ++i) CHECK(k.dot(a.data(), b.data(), a.size()) == first);
  }
}

TEST_CASE("set_level switches the span front ends") {
  const auto saved = simd::active_level();
  simd::set_level(simd::Level::Scalar);
  CHECK(simd::active_level() == simd::Level::Scalar);
  std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  CHECK(dot(a, b) == 32.0);
  CHECK(squared_distance(a, b) == 27.0);
  if (!simd::level_available(simd::Level::Avx2)) CHECK_THROWS(simd::set_level(simd::Level::Avx2));
  simd::set_level(saved);
}

TEST_CASE("matrix helpers") {
  Matrix a(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
  std::vector<double> x{1, 0, -1}, y(2);
  matvec(a, x, y);
  CHECK(y == std::vector<double>{-2, -2});
  std::vector<double> t{1, 1, 1};
  matvec_transpose_accumulate(a, std::vector<double>{1, 2}, t);
  CHECK(t == std::vector<double>{10, 13, 16});
  rank1_update(a, 2.0, std::vector<double>{1, 0}, std::vector<double>{1, 1, 1});
  CHECK(a(0, 0) == 3.0);
  CHECK(a(1, 2) == 6.0);
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
}
