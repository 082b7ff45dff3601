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

#include "protohead/simd/kernels.hpp"

#include <atomic>
#include <cassert>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"

namespace protohead::simd {
namespace {

constexpr KernelTable kScalarTable{&scalar::dot, &scalar::squared_distance, &scalar::axpy};
#if defined(PROTOHEAD_HAVE_AVX2)
constexpr KernelTable kAvx2Table{&avx2::dot, &avx2::squared_distance, &avx2::axpy};
#endif

bool cpu_has_avx2() noexcept {
#if defined(PROTOHEAD_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Level detect_level() noexcept {
  Level best = cpu_has_avx2() ? Level::Avx2 : Level::Scalar;
  if (const char* env = std::getenv("PROTO_SIMD")) {
    std::string v(env);
    if (v == "scalar") return Level::Scalar;
    if (v == "avx2" && best == Level::Avx2) return Level::Avx2;
  }
  return best;
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{&kernels_for(detect_level())};
  return table;
}

}  // namespace

std::string_view level_name(Level level) noexcept {
  switch (level) {
    case Level::Scalar: return "scalar";
    case Level::Avx2: return "avx2";
  }
  return "unknown";
}

bool level_available(Level level) noexcept {
  return level == Level::Scalar || (level == Level::Avx2 && cpu_has_avx2());
}

const KernelTable& kernels_for(Level level) {
  if (!level_available(level))
    throw Error("SIMD level '" + std::string(level_name(level)) + "' is not available");
#if defined(PROTOHEAD_HAVE_AVX2)
  if (level == Level::Avx2) return kAvx2Table;
#endif
  return kScalarTable;
}

Level active_level() noexcept {
#if defined(PROTOHEAD_HAVE_AVX2)
  if (active_table().load() == &kAvx2Table) return Level::Avx2;
#endif
  return Level::Scalar;
}

void set_level(Level level) { active_table().store(&kernels_for(level)); }

const KernelTable& kernels() noexcept { return *active_table().load(std::memory_order_relaxed); }

}  // namespace protohead::simd

namespace protohead {

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return simd::kernels().dot(a.data(), b.data(), a.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return simd::kernels().squared_distance(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  simd::kernels().axpy(alpha, x.data(), y.data(), x.size());
}

void matvec(const Matrix& a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == a.cols() && y.size() == a.rows());
  const auto& k = simd::kernels();
  for (std::size_t r = 0; r < a.rows(); ++r) y[r] = k.dot(a.row(r).data(), x.data(), a.cols());
}

void matvec_transpose_accumulate(const Matrix& a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == a.rows() && y.size() == a.cols());
  const auto& k = simd::kernels();
  for (std::size_t r = 0; r < a.rows(); ++r)
    if (x[r] != 0.0) k.axpy(x[r], a.row(r).data(), y.data(), a.cols());
}

void rank1_update(Matrix& a, double alpha, std::span<const double> x, std::span<const double> y) {
  assert(x.size() == a.rows() && y.size() == a.cols());
  const auto& k = simd::kernels();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = alpha * x[r];
    if (s != 0.0) k.axpy(s, y.data(), a.row(r).data(), a.cols());
  }
}

}  // namespace protohead
