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

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "protohead/matrix.hpp"

// Dense double-precision inner loops. Each kernel has a scalar reference
// implementation and, on x86-64, an AVX2+FMA variant; the active variant is
// chosen once at startup from CPUID and may be overridden with the
// PROTO_SIMD environment variable ("scalar" or "avx2") or set_level().
//
// Variants differ only in summation order, so results agree to rounding
// (tests/test_kernels.cpp pins the bound). A given level is deterministic:
// identical inputs give identical bits.
namespace protohead::simd {

enum class Level { Scalar, Avx2 };

std::string_view level_name(Level level) noexcept;

// True when the variant was compiled in and the CPU supports it.
bool level_available(Level level) noexcept;

Level active_level() noexcept;

// Forces a level. Throws protohead::Error when it is unavailable.
void set_level(Level level);

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

const KernelTable& kernels() noexcept;
const KernelTable& kernels_for(Level level);

}  // namespace protohead::simd

namespace protohead {

// Span front ends over the active kernel table. Lengths must match; callers
// check shapes at module boundaries, so these only assert in debug builds.
double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// y = A x, with y sized A.rows().
void matvec(const Matrix& a, std::span<const double> x, std::span<double> y);

// y += A^T x (x sized A.rows(), y sized A.cols()).
void matvec_transpose_accumulate(const Matrix& a, std::span<const double> x, std::span<double> y);

// A += alpha * x y^T
void rank1_update(Matrix& a, double alpha, std::span<const double> x, std::span<const double> y);

}  // namespace protohead
