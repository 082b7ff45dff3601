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

#include "protohead/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace protohead {

std::vector<double> stable_softmax(std::span<const double> logits) {
  if (logits.empty()) throw Error("stable_softmax: empty input");
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : logits) {
    if (!std::isfinite(x)) throw NumericError("stable_softmax: non-finite logit");
    mx = std::max(mx, x);
  }
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

std::vector<double> masked_softmax(std::span<const double> logits, const std::vector<bool>& mask) {
  if (mask.size() != logits.size())
    throw ShapeError("masked_softmax: mask length " + std::to_string(mask.size()) +
                     " != logits length " + std::to_string(logits.size()));
  double mx = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    if (!std::isfinite(logits[i])) throw NumericError("masked_softmax: non-finite logit");
    mx = std::max(mx, logits[i]);
    any = true;
  }
  if (!any) throw Error("masked_softmax: mask selects no entries");
  std::vector<double> out(logits.size(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (mask[i]) out[i] /= sum;
  return out;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Cosine cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw ShapeError("cosine_similarity: lengths " + std::to_string(u.size()) + " and " +
                     std::to_string(v.size()));
  double nu = l2_norm(u);
  double nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) return {0.0, true};
  double c = dot(u, v) / (nu * nv);
  return {std::clamp(c, -1.0, 1.0), false};
}

void accumulate_cosine_grad(std::span<const double> u, std::span<const double> v, double scale,
                            std::span<double> dv) {
  if (scale == 0.0) return;
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) return;
  const double c = dot(u, v) / (nu * nv);
  axpy(scale / (nu * nv), u, dv);
  axpy(-scale * c / (nv * nv), v, dv);
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               std::string_view block) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw ShapeError("adam_step: shape mismatch in block '" + std::string(block) + "'");
  for (double g : grads)
    if (!std::isfinite(g))
      throw NumericError("adam_step: non-finite gradient in block '" + std::string(block) + "'");

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<double> theta, FiniteDiffOptions opts) {
  if (!(opts.base_step > 0.0)) throw Error("finite_diff_grad: step must be positive");
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta[i];
    const double h = opts.base_step * std::max(1.0, std::abs(orig));
    // Divide by the representable step actually taken.
    const double up = orig + h;
    const double down = orig - h;
    theta[i] = up;
    const double fp = f(theta);
    theta[i] = down;
    const double fm = f(theta);
    theta[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("finite_diff_grad: non-finite objective at coordinate " +
                         std::to_string(i));
    grad[i] = (fp - fm) / (up - down);
  }
  return grad;
}

double relative_error(double a, double b) noexcept {
  return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b));
}

}  // namespace protohead
