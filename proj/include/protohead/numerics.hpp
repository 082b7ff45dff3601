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

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "protohead/matrix.hpp"
#include "protohead/simd/kernels.hpp"

namespace protohead {

inline constexpr double kLeakySlope = 0.2;

// Softmax with max subtraction. Throws on empty or non-finite input.
std::vector<double> stable_softmax(std::span<const double> logits);

// Softmax over the entries where mask is true; exact zeros elsewhere.
std::vector<double> masked_softmax(std::span<const double> logits, const std::vector<bool>& mask);

constexpr double leaky_relu(double x, double slope = kLeakySlope) noexcept {
  return x >= 0.0 ? x : slope * x;
}

constexpr double leaky_relu_grad(double x, double slope = kLeakySlope) noexcept {
  return x >= 0.0 ? 1.0 : slope;
}

struct Cosine {
  double value = 0.0;
  // Set when either input has zero norm; value is then 0.
  bool degenerate = false;
};

// u.v / (|u| |v|), clamped to [-1, 1].
Cosine cosine_similarity(std::span<const double> u, std::span<const double> v);

inline double cosine(std::span<const double> u, std::span<const double> v) {
  return cosine_similarity(u, v).value;
}

double l2_norm(std::span<const double> v);

// dv += scale * d cos(u, v) / dv = scale * (u / (|u||v|) - cos * v / |v|^2).
// No-op when either norm is zero.
void accumulate_cosine_grad(std::span<const double> u, std::span<const double> v, double scale,
                            std::span<double> dv);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr = 1e-3;

  AdamState() = default;
  AdamState(std::size_t n, double lr_, double beta1_ = 0.9, double beta2_ = 0.999,
            double eps_ = 1e-8)
      : m(n, 0.0), v(n, 0.0), beta1(beta1_), beta2(beta2_), eps(eps_), lr(lr_) {}

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

// One bias-corrected Adam update in place. `block` names the parameter block
// in the error raised for a non-finite gradient.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               std::string_view block = "params");

struct FiniteDiffOptions {
  // Per-coordinate step is base_step * max(1, |theta_i|).
  double base_step = 1e-5;
};

// Central-difference gradient of f at theta. theta is perturbed in place and
// restored bit-exactly before return.
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<double> theta, FiniteDiffOptions opts = {});

inline std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& f, std::vector<double> theta,
    double base_step) {
  return finite_diff_grad(f, std::span<double>(theta), FiniteDiffOptions{base_step});
}

// |a-b| / max(1e-8, |a|+|b|)
double relative_error(double a, double b) noexcept;

struct Pca2d {
  Matrix coords;                     // N x 2
  std::array<double, 2> variance{};  // explained variance per component, descending
  std::array<std::vector<double>, 2> components;
  std::vector<double> mean;
};

// Projects mean-centred rows onto the two leading eigenvectors of the sample
// covariance (divisor N-1). Each component is oriented so that its
// largest-magnitude loading is positive (earliest index on ties).
Pca2d pca_2d(const Matrix& points);

}  // namespace protohead
